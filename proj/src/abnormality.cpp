#include "jamaware/abnormality.hpp"

#include <algorithm>
#include <numeric>

namespace jamaware {

FixedBhattacharyya::FixedBhattacharyya(const Gauss& target, const Mat& obs_cov) : mean_(target.mean) {
    detail::check_dims(target, Gauss{target.mean, obs_cov});
    const Mat avg = 0.5 * (target.cov + obs_cov);
    avg_ = detail::checked_llt<double>(avg, "bhattacharyya");
    const auto lt = detail::checked_llt<double>(target.cov, "bhattacharyya");
    const auto lo = detail::checked_llt<double>(obs_cov, "bhattacharyya");
    constant_ = 0.5 * (detail::log_det(avg_) - 0.5 * (detail::log_det(lt) + detail::log_det(lo)));
}

double FixedBhattacharyya::distance(const Vec& x) const {
    const Vec d = x - mean_;
    return std::max(0.0, d.dot(avg_.solve(d)) / 8.0 + constant_);
}

namespace {

Vec floored(const Vec& p) {
    Vec q = p.cwiseMax(kProbFloor);
    return q / q.sum();
}

}  // namespace

double discrete_symmetric_kl(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw std::invalid_argument("discrete KL size mismatch");
    const Vec a = floored(p);
    const Vec b = floored(q);
    const Vec lr = (a.array().log() - b.array().log()).matrix();
    return std::max(0.0, (a - b).dot(lr));
}

double klda(const std::vector<Vec>& rows, const Vec& lambda, const Vec& occupancy) {
    if (static_cast<Eigen::Index>(rows.size()) != occupancy.size())
        throw std::invalid_argument("klda: one transition row per superstate is required");
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double w = occupancy[static_cast<Eigen::Index>(i)];
        if (w <= 0.0) continue;
        total += w * discrete_symmetric_kl(rows[i], lambda);
    }
    return total;
}

double cla(const Gauss& prediction, const Gauss& evidence) { return bhattacharyya(prediction, evidence).distance; }

double clb(const Gauss& prediction, const Gauss& superstate) { return bhattacharyya(prediction, superstate).distance; }

Vec dcla(const Vec& observation, const Vec& predicted_state, int d) {
    if (observation.size() < 2 * d || predicted_state.size() < 2 * d)
        throw std::invalid_argument("dcla: vectors shorter than the I/Q block");
    Vec out(d);
    for (int n = 0; n < d; ++n) {
        const double di = observation[n] - predicted_state[n];
        const double dq = observation[d + n] - predicted_state[d + n];
        out[n] = std::sqrt(di * di + dq * dq);
    }
    return out;
}

double ThresholdConfig::bc_bound() const { return std::sqrt(q_t * (beta1 * (1.0 - alpha) + beta2 * (1.0 - alpha))); }

void ThresholdConfig::validate() const {
    const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(zeta) || !unit(alpha) || !unit(q_t) || !unit(beta1) || !unit(beta2))
        throw ConfigError("threshold fractions must lie in [0, 1]");
    if (std::abs(beta1 + beta2 - 1.0) > 1e-12) throw ConfigError("beta1 + beta2 must equal 1");
}

AbnormalityFlags decide(const AbnormalitySnapshot& s, const ThresholdConfig& cfg) {
    AbnormalityFlags f;
    f.klda = s.klda > cfg.discrete_threshold();
    f.cla = s.cla > cfg.eta;
    f.clb = s.clb > cfg.eta;
    f.bc_bound = std::exp(-s.cla) < cfg.bc_bound();
    f.dcla.assign(static_cast<std::size_t>(s.dcla.size()), false);
    if (!cfg.dcla_thresholds.empty()) {
        if (static_cast<Eigen::Index>(cfg.dcla_thresholds.size()) != s.dcla.size())
            throw std::invalid_argument("decide: DCLA threshold count differs from sub-carrier count");
        for (Eigen::Index n = 0; n < s.dcla.size(); ++n)
            f.dcla[static_cast<std::size_t>(n)] = s.dcla[n] > cfg.dcla_thresholds[static_cast<std::size_t>(n)];
    }
    return f;
}

std::size_t argmax_lowest(const Vec& v) {
    if (v.size() == 0) throw EmptyInputError("argmax of an empty vector");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<std::size_t>(best);
}

GeneralizedErrors generalized_errors(const ErrorContext& ctx) {
    if (ctx.means.empty()) throw EmptyInputError("generalized_errors: no superstates");
    GeneralizedErrors e;
    const auto l = argmax_lowest(ctx.lambda);
    const auto p = argmax_lowest(ctx.pi);
    e.eps_Z1 = ctx.observation - ctx.predicted_state;
    e.eps_X1 = e.eps_Z1;
    e.eps_Z2 = ctx.observation - ctx.means[l];
    // Evidence minus expectation in both branches, so adding the error to
    // the expectation moves it toward what was observed.
    e.eps_X2 = (l == p) ? Vec(ctx.observation - ctx.means[l]) : Vec(ctx.means[l] - ctx.means[p]);
    e.eps_S = ctx.lambda - ctx.pi;
    return e;
}

CalibrationStats calibrate_thresholds(const std::vector<double>& clean_cla, const std::vector<Vec>& clean_dcla,
                                      const std::vector<double>& clean_klda) {
    if (clean_cla.empty()) throw EmptyInputError("calibration needs a non-empty clean run");
    const auto mean_std = [](const std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair{m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
    };
    CalibrationStats c;
    std::tie(c.cla_mean, c.cla_std) = mean_std(clean_cla);
    c.eta = c.cla_mean + 3.0 * c.cla_std;
    if (!clean_dcla.empty()) {
        const auto d = clean_dcla.front().size();
        for (Eigen::Index n = 0; n < d; ++n) {
            std::vector<double> col;
            col.reserve(clean_dcla.size());
            for (const auto& v : clean_dcla) col.push_back(v[n]);
            const auto [m, s] = mean_std(col);
            c.dcla_thresholds.push_back(m + s);
        }
    }
    if (!clean_klda.empty()) std::tie(c.klda_mean, c.klda_std) = mean_std(clean_klda);
    return c;
}

}  // namespace jamaware
