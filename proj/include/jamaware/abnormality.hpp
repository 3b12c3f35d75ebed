#pragma once

#include "jamaware/core.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace jamaware {

inline constexpr double kProbFloor = 1e-12;

namespace detail {

template <typename Scalar>
Eigen::LLT<MatrixX<Scalar>> checked_llt(const MatrixX<Scalar>& m, const char* what) {
    Eigen::LLT<MatrixX<Scalar>> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": covariance is not positive definite");
    return llt;
}

template <typename Scalar>
Scalar log_det(const Eigen::LLT<MatrixX<Scalar>>& llt) {
    return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

template <typename Scalar>
void check_dims(const Gaussian<Scalar>& p, const Gaussian<Scalar>& q) {
    if (p.mean.size() != q.mean.size() || p.cov.rows() != p.mean.size() || q.cov.rows() != q.mean.size() ||
        p.cov.cols() != p.cov.rows() || q.cov.cols() != q.cov.rows())
        throw std::invalid_argument("Gaussian dimension mismatch");
}

}  // namespace detail

// KL(p || q) between multivariate normals.
template <typename Scalar>
Scalar gaussian_kld(const Gaussian<Scalar>& p, const Gaussian<Scalar>& q) {
    detail::check_dims(p, q);
    const auto lp = detail::checked_llt<Scalar>(p.cov, "gaussian_kld");
    const auto lq = detail::checked_llt<Scalar>(q.cov, "gaussian_kld");
    const VectorX<Scalar> dmu = q.mean - p.mean;
    const Scalar trace = lq.solve(p.cov).trace();
    const Scalar maha = dmu.dot(lq.solve(dmu));
    const Scalar k = static_cast<Scalar>(p.mean.size());
    const Scalar v = Scalar(0.5) * (detail::log_det(lq) - detail::log_det(lp) - k + trace + maha);
    return v < Scalar(0) ? Scalar(0) : v;
}

template <typename Scalar>
Scalar symmetric_kld(const Gaussian<Scalar>& p, const Gaussian<Scalar>& q) {
    const Scalar a = gaussian_kld(p, q);
    const Scalar b = gaussian_kld(q, p);
    // Summed in a fixed order so swapping the arguments is bit-identical.
    return a < b ? a + b : b + a;
}

template <typename Scalar>
struct BhattacharyyaResult {
    Scalar coefficient;  // BC in (0, 1]
    Scalar distance;     // D_B = -ln BC
};

template <typename Scalar>
BhattacharyyaResult<Scalar> bhattacharyya(const Gaussian<Scalar>& p, const Gaussian<Scalar>& q) {
    detail::check_dims(p, q);
    const MatrixX<Scalar> avg = (p.cov + q.cov) * Scalar(0.5);
    const auto la = detail::checked_llt<Scalar>(avg, "bhattacharyya");
    const auto lp = detail::checked_llt<Scalar>(p.cov, "bhattacharyya");
    const auto lq = detail::checked_llt<Scalar>(q.cov, "bhattacharyya");
    const VectorX<Scalar> dmu = p.mean - q.mean;
    Scalar db = dmu.dot(la.solve(dmu)) / Scalar(8) +
                Scalar(0.5) * (detail::log_det(la) - Scalar(0.5) * (detail::log_det(lp) + detail::log_det(lq)));
    if (db < Scalar(0)) db = Scalar(0);
    return {std::exp(-db), db};
}

// Bhattacharyya distance from N(x, R) to a fixed N(mu, Sigma) where R and
// Sigma never change, so the factorisation is done once.
class FixedBhattacharyya {
public:
    FixedBhattacharyya() = default;
    FixedBhattacharyya(const Gauss& target, const Mat& obs_cov);
    double distance(const Vec& x) const;

private:
    Vec mean_;
    Eigen::LLT<Mat> avg_;
    double constant_ = 0.0;
};

// Symmetric discrete KL with the probability floor applied to both sides.
double discrete_symmetric_kl(const Vec& p, const Vec& q);

// Occupancy-weighted symmetric KL between each occupied superstate's
// transition row and the diagnostic message.
double klda(const std::vector<Vec>& rows, const Vec& lambda, const Vec& occupancy);

double cla(const Gauss& prediction, const Gauss& evidence);
double clb(const Gauss& prediction, const Gauss& superstate);
Vec dcla(const Vec& observation, const Vec& predicted_state, int d);

struct ThresholdConfig {
    double zeta = 0.8;
    double alpha = 0.5;
    double beta1 = 1.0;
    double beta2 = 0.0;
    double q_t = 0.2;
    double psi = 0.1;
    bool derive_psi = true;
    double eta = 0.0;
    std::vector<double> dcla_thresholds;  // empty means DCLA is not flagged
    double th = 0.0;
    double gamma_star = 0.5;

    double discrete_threshold() const { return derive_psi ? (1.0 - zeta) * alpha : psi; }
    // Lower bound on the Bhattacharyya coefficient under normality.
    double bc_bound() const;
    void validate() const;
};

struct AbnormalityFlags {
    bool klda = false;
    bool cla = false;
    bool clb = false;
    bool bc_bound = false;
    std::vector<bool> dcla;
};

struct AbnormalitySnapshot {
    double klda = 0.0;
    double cla = 0.0;
    double clb = 0.0;
    Vec dcla;
    AbnormalityFlags flags;
};

AbnormalityFlags decide(const AbnormalitySnapshot& snapshot, const ThresholdConfig& cfg);

struct GeneralizedErrors {
    Vec eps_Z1;
    Vec eps_Z2;
    Vec eps_X1;
    Vec eps_X2;
    Vec eps_S;
};

struct ErrorContext {
    Vec observation;         // Z~_t
    Vec predicted_state;     // winning particle prediction
    Vec lambda;              // diagnostic message over superstates
    Vec pi;                  // predictive occupancy over superstates
    std::vector<Vec> means;  // superstate generalized means
};

std::size_t argmax_lowest(const Vec& v);
GeneralizedErrors generalized_errors(const ErrorContext& ctx);

struct CalibrationStats {
    double eta = 0.0;
    double cla_mean = 0.0;
    double cla_std = 0.0;
    std::vector<double> dcla_thresholds;
    double klda_mean = 0.0;
    double klda_std = 0.0;
};

// eta = mean + 3 std of clean CLA, DCLA thresholds = mean + std per sub-carrier.
CalibrationStats calibrate_thresholds(const std::vector<double>& clean_cla, const std::vector<Vec>& clean_dcla,
                                      const std::vector<double>& clean_klda = {});

}  // namespace jamaware
