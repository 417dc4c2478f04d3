#include "wscps/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "wscps/rng.hpp"

namespace wscps {

namespace {

void format_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() != y_.rows())
        throw std::invalid_argument("Dataset: covariate rows and label count differ");
    if (!x_.allFinite() || !y_.allFinite())
        throw std::invalid_argument("Dataset: non-finite value in observations");
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(indices.size()), x_.cols());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw std::out_of_range("Dataset::subset: index out of range");
        xs.row(static_cast<Eigen::Index>(i)) = x_.row(static_cast<Eigen::Index>(indices[i]));
        ys(static_cast<Eigen::Index>(i)) = y_(static_cast<Eigen::Index>(indices[i]));
    }
    return Dataset(std::move(xs), std::move(ys));
}

double synthetic_response_mean(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != 4) throw std::invalid_argument("synthetic_response_mean: expected d = 4");
    return 210.0 + 27.4 * x(0) + 13.7 * (x(1) + x(2) + x(3));
}

Eigen::VectorXd synthetic_shift_location() {
    Eigen::VectorXd b(4);
    b << -1.0, 0.5, -0.25, -0.1;
    return b;
}

namespace {

Dataset draw_synthetic(std::size_t n, const Eigen::VectorXd& center, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = center(j) + gauss(rng);
        y(i) = synthetic_response_mean(x.row(i)) + gauss(rng);
    }
    return Dataset(std::move(x), std::move(y));
}

} // namespace

SplitData generate_synthetic(std::size_t n_train, std::size_t n_cal, std::size_t n_test,
                             bool shifted, std::uint64_t seed) {
    return generate_synthetic(n_train, n_cal, n_test, shifted, seed, synthetic_shift_location());
}

SplitData generate_synthetic(std::size_t n_train, std::size_t n_cal, std::size_t n_test,
                             bool shifted, std::uint64_t seed, const Eigen::VectorXd& shift) {
    if (n_train == 0 || n_cal == 0 || n_test == 0)
        throw std::invalid_argument("generate_synthetic: all counts must be >= 1");
    if (shift.size() != 4)
        throw std::invalid_argument("generate_synthetic: shift vector must have dimension 4");
    std::mt19937_64 rng(make_engine(seed, 0));
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(4);
    SplitData out;
    out.proper_train = draw_synthetic(n_train, origin, rng);
    out.calibration = draw_synthetic(n_cal, origin, rng);
    out.test = draw_synthetic(n_test, origin, rng);
    out.shifted_test = shifted ? draw_synthetic(n_test, shift, rng) : out.test;
    return out;
}

Dataset load_airfoil(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_airfoil: cannot open '" + path + "'");

    std::vector<std::array<double, 6>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::array<double, 6> row{};
        std::size_t got = 0;
        std::string tok;
        while (fields >> tok) {
            if (got < 6) {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(tok, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != tok.size() || !std::isfinite(v))
                    throw std::runtime_error("load_airfoil: parse error at line " +
                                             std::to_string(line_no) + ": '" + tok + "'");
                row[got] = v;
            }
            ++got;
        }
        if (got == 0) continue; // blank line
        if (got != 6)
            throw std::runtime_error("load_airfoil: expected 6 columns, found " +
                                     std::to_string(got) + " at line " + std::to_string(line_no));
        rows.push_back(row);
    }
    if (rows.empty()) throw std::runtime_error("load_airfoil: no observations in '" + path + "'");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 5);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r[0] <= 0.0 || r[4] <= 0.0)
            throw std::runtime_error("load_airfoil: nonpositive frequency or thickness at row " +
                                     std::to_string(i + 1));
        auto k = static_cast<Eigen::Index>(i);
        x(k, 0) = std::log(r[0]); // log frequency
        x(k, 1) = r[1];
        x(k, 2) = r[2];
        x(k, 3) = r[3];
        x(k, 4) = std::log(r[4]); // log displacement thickness
        y(k) = r[5];
    }
    return Dataset(std::move(x), std::move(y));
}

SplitData split_dataset(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
    if (!(fractions.train > 0.0 && fractions.cal > 0.0 && fractions.test > 0.0))
        throw std::invalid_argument("split_dataset: fractions must be positive");
    if (fractions.train + fractions.cal + fractions.test > 1.0 + 1e-12)
        throw std::invalid_argument("split_dataset: fractions must sum to at most 1");

    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * static_cast<double>(n)));
    const auto n_cal = static_cast<std::size_t>(std::floor(fractions.cal * static_cast<double>(n)));
    if (n_train == 0 || n_cal == 0 || n_train + n_cal >= n)
        throw std::invalid_argument("split_dataset: a block would be empty");
    const std::size_t n_test = n - n_train - n_cal; // remainder to test

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(make_engine(seed, 0));
    std::shuffle(perm.begin(), perm.end(), rng);

    auto block = [&](std::size_t lo, std::size_t len) {
        return ds.subset({perm.begin() + static_cast<std::ptrdiff_t>(lo),
                          perm.begin() + static_cast<std::ptrdiff_t>(lo + len)});
    };
    SplitData out;
    out.proper_train = block(0, n_train);
    out.calibration = block(n_train, n_cal);
    out.test = block(n_train + n_cal, n_test);
    return out;
}

Eigen::VectorXd tilt_probabilities(const Dataset& ds, const TiltSpec& tilt) {
    if (ds.empty()) throw std::invalid_argument("tilt_probabilities: empty dataset");
    if (static_cast<std::size_t>(tilt.beta.size()) != ds.dim())
        throw std::invalid_argument("tilt_probabilities: beta dimension mismatch");
    Eigen::VectorXd logits = ds.x() * tilt.beta;
    logits.array() -= logits.maxCoeff();
    Eigen::VectorXd w = logits.array().exp();
    return w / w.sum();
}

Dataset tilt_resample(const Dataset& ds, const TiltSpec& tilt, std::size_t n_out,
                      std::uint64_t seed) {
    Eigen::VectorXd p = tilt_probabilities(ds, tilt);
    std::discrete_distribution<std::size_t> pick(p.data(), p.data() + p.size());
    std::mt19937_64 rng(make_engine(seed, 0));
    std::vector<std::size_t> indices(n_out);
    for (auto& idx : indices) idx = pick(rng);
    return ds.subset(indices);
}

Dataset tilt_resample(const Dataset& ds, const TiltSpec& tilt, std::uint64_t seed) {
    return tilt_resample(ds, tilt, ds.size(), seed);
}

void write_dataset_csv(const Dataset& ds, std::ostream& out) {
    std::string buf;
    for (std::size_t j = 1; j <= ds.dim(); ++j) {
        buf += 'x';
        buf += std::to_string(j);
        buf += ',';
    }
    buf += "y\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            format_double(buf, ds.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            buf += ',';
        }
        format_double(buf, ds.label(i));
        buf += '\n';
    }
    out << buf;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open '" + path + "'");
    write_dataset_csv(ds, out);
}

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_dataset_csv: empty input");
    const std::size_t dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    if (dim == 0) throw std::runtime_error("read_dataset_csv: header must list x1..xd,y");

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::size_t got = 0;
        while (std::getline(ss, cell, ',')) {
            values.push_back(std::stod(cell));
            ++got;
        }
        if (got != dim + 1)
            throw std::runtime_error("read_dataset_csv: bad column count at data row " +
                                     std::to_string(rows + 1));
        ++rows;
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < dim; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * (dim + 1) + j];
        y(static_cast<Eigen::Index>(i)) = values[i * (dim + 1) + dim];
    }
    return Dataset(std::move(x), std::move(y));
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open '" + path + "'");
    return read_dataset_csv(in);
}

} // namespace wscps
