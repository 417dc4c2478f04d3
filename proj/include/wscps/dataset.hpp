#ifndef WSCPS_DATASET_HPP
#define WSCPS_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wscps {

struct Observation {
    Eigen::VectorXd x;
    double y = 0.0;
};

// Immutable after construction; rows are observations, columns covariates.
class Dataset {
public:
    Dataset() = default;
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y);

    std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
    bool empty() const { return x_.rows() == 0; }

    const Eigen::MatrixXd& x() const { return x_; }
    const Eigen::VectorXd& y() const { return y_; }
    Eigen::VectorXd covariates(std::size_t i) const { return x_.row(static_cast<Eigen::Index>(i)); }
    double label(std::size_t i) const { return y_(static_cast<Eigen::Index>(i)); }
    Observation observation(std::size_t i) const { return {covariates(i), label(i)}; }

    Dataset subset(const std::vector<std::size_t>& indices) const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
};

struct SplitData {
    Dataset proper_train;
    Dataset calibration;
    Dataset test;
    Dataset shifted_test;
};

struct TiltSpec {
    Eigen::VectorXd beta;
};

struct SplitFractions {
    double train = 0.25;
    double cal = 0.25;
    double test = 0.5;
};

// Mean response of the synthetic generator: 210 + 27.4 x1 + 13.7 (x2 + x3 + x4).
double synthetic_response_mean(const Eigen::Ref<const Eigen::VectorXd>& x);

// Location the shifted synthetic covariates are centered at. Tilting a
// standard Gaussian by exp(b'x) is again Gaussian with mean b, so sampling
// N(b, I4) draws the exponentially tilted covariate law exactly.
Eigen::VectorXd synthetic_shift_location();

// Draws proper-train/calibration/test covariates i.i.d. N(0, I4) with the
// linear-Gaussian response above. If `shifted`, shifted_test covariates come
// from N(shift, I4) with labels from the same conditional law; otherwise
// shifted_test aliases the unshifted test set.
SplitData generate_synthetic(std::size_t n_train, std::size_t n_cal, std::size_t n_test,
                             bool shifted, std::uint64_t seed);
SplitData generate_synthetic(std::size_t n_train, std::size_t n_cal, std::size_t n_test,
                             bool shifted, std::uint64_t seed,
                             const Eigen::VectorXd& shift);

// Whitespace-separated file, 6 numeric columns: frequency [Hz], angle of
// attack [deg], chord length [m], free-stream velocity [m/s], suction-side
// displacement thickness [m], sound pressure level [dB]. Returns d = 5
// covariates with columns 1 and 5 replaced by their natural logarithms.
Dataset load_airfoil(const std::string& path);

// Random permutation by seed, then contiguous blocks. Train and calibration
// take floor(fraction * N) rows each; everything left goes to test.
SplitData split_dataset(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed);

// Selection probabilities proportional to exp(x' beta), stabilized by
// subtracting max(x' beta) before exponentiation (leaves the normalized
// probabilities unchanged).
Eigen::VectorXd tilt_probabilities(const Dataset& ds, const TiltSpec& tilt);

// Samples n_out observations with replacement, probability ~ exp(x' beta).
Dataset tilt_resample(const Dataset& ds, const TiltSpec& tilt, std::size_t n_out,
                      std::uint64_t seed);
Dataset tilt_resample(const Dataset& ds, const TiltSpec& tilt, std::uint64_t seed);

// CSV with header x1..xd,y; doubles serialized with shortest round-trip form.
void write_dataset_csv(const Dataset& ds, std::ostream& out);
void write_dataset_csv(const Dataset& ds, const std::string& path);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

} // namespace wscps

#endif
