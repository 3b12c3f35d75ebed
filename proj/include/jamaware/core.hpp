#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace jamaware {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;
using cplx = std::complex<double>;
using Bits = std::vector<std::uint8_t>;

// Error idiom: every module throws one of these (or a std:: exception for
// plain precondition violations such as dimension mismatches).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct LengthMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// A multivariate normal described by its first two moments.
template <typename Scalar>
struct Gaussian {
    VectorX<Scalar> mean;
    MatrixX<Scalar> cov;

    Eigen::Index dim() const { return mean.size(); }
};

using Gauss = Gaussian<double>;

using Rng = std::mt19937_64;

// Independent, reproducible stream for (seed, stream id).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace jamaware
