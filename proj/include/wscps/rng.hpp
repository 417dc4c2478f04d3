#ifndef WSCPS_RNG_HPP
#define WSCPS_RNG_HPP

#include <cstdint>
#include <random>

namespace wscps {

// SplitMix64 step (Steele, Lea, Flood 2014). Used only to derive seeds for
// independent substreams; the streams themselves are std::mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based seed derivation: the pair (base, stream) maps to a seed that
// is stable regardless of how many other streams were derived. Trials and
// their substreams use this so that parallel execution cannot reorder draws.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t state = base ^ (0xD1B54A32D192ED03ull * (stream + 1));
    splitmix64(state);
    return splitmix64(state);
}

inline std::mt19937_64 make_engine(std::uint64_t base, std::uint64_t stream) {
    return std::mt19937_64(derive_seed(base, stream));
}

} // namespace wscps

#endif
