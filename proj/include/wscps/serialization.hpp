#ifndef WSCPS_SERIALIZATION_HPP
#define WSCPS_SERIALIZATION_HPP

#include <nlohmann/json.hpp>

#include "wscps/scoring.hpp"

namespace wscps {

inline void to_json(nlohmann::json& j, const HistogramBin& bin) {
    j = {{"bin_low", bin.low}, {"bin_high", bin.high}, {"count", bin.count}};
}

inline void to_json(nlohmann::json& j, const RankSummary& ranks) {
    j = {{"alpha", ranks.alpha},
         {"mean_ranks", ranks.mean_ranks},
         {"friedman_statistic", ranks.friedman_statistic},
         {"critical_difference", ranks.critical_difference}};
}

inline void to_json(nlohmann::json& j, const KsResult& ks) {
    j = {{"statistic", ks.statistic}, {"threshold", ks.threshold}, {"pass", ks.pass}};
}

} // namespace wscps

#endif
