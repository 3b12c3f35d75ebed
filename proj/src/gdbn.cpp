#include "jamaware/gdbn.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <tuple>

namespace jamaware {

double effective_sample_size(const BeliefState& belief) {
    double s = 0.0;
    for (const auto& p : belief.particles) s += p.weight * p.weight;
    return s > 0.0 ? 1.0 / s : 0.0;
}

void sir_resample(BeliefState& belief, Rng& rng) {
    auto& ps = belief.particles;
    const auto n = ps.size();
    if (n == 0) return;
    double total = 0.0;
    for (const auto& p : ps) total += p.weight;
    if (!(total > 0.0) || !std::isfinite(total)) {
        for (auto& p : ps) p.weight = 1.0 / static_cast<double>(n);
        belief.weights_reset = true;
        return;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(n));
    const double start = u(rng);
    std::vector<Particle> out;
    out.reserve(n);
    double cum = ps[0].weight / total;
    std::size_t i = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = start + static_cast<double>(k) / static_cast<double>(n);
        while (pos > cum && i + 1 < n) {
            ++i;
            cum += ps[i].weight / total;
        }
        out.push_back(ps[i]);
        out.back().weight = 1.0 / static_cast<double>(n);
    }
    ps = std::move(out);
}

Mmjpf::Mmjpf(const Vocabulary& vocab, FilterOptions opts)
    : vocab_(std::make_shared<const Vocabulary>(vocab)), opts_(std::move(opts)), rng_(make_rng(opts_.seed, 17)) {
    vocab_->validate();
    if (opts_.n_particles < 1) throw ConfigError("particle count must be >= 1");
    const Vec r = opts_.r_diag ? *opts_.r_diag : vocab_->r_diag;
    if (r.size() != 4 * vocab_->d || r.minCoeff() <= 0.0) throw ConfigError("observation noise must be positive, 4d");
    R_ = r.asDiagonal();
    if (opts_.control_overlay && opts_.control_overlay->size() != 2 * vocab_->d)
        throw ConfigError("control overlay must have 2d entries");
    for (int m = 0; m < vocab_->size(); ++m) {
        node_gauss_.push_back(vocab_->gaussian(m));
        node_bc_.emplace_back(node_gauss_.back(), R_);
        if (opts_.use_conditional)
            for (const auto& [j, g] : vocab_->nodes[static_cast<std::size_t>(m)].conditional)
                cond_bc_.emplace(std::make_pair(m, j), FixedBhattacharyya(g, R_));
    }
}

const Mat& Mmjpf::sigma_w(int m, int j) const {
    const auto& node = vocab_->nodes[static_cast<std::size_t>(m)];
    if (opts_.use_conditional)
        if (auto it = node.conditional.find(j); it != node.conditional.end()) return it->second.cov;
    return node.cov;
}

Vec Mmjpf::control(int m, int j) const {
    const auto& node = vocab_->nodes[static_cast<std::size_t>(m)];
    const Vec* mean = &node.mean;
    if (opts_.use_conditional)
        if (auto it = node.conditional.find(j); it != node.conditional.end()) mean = &it->second.mean;
    Vec u = mean->tail(mean->size() / 2);
    if (opts_.control_overlay) u += *opts_.control_overlay;
    return u;
}

Vec Mmjpf::lambda_superstates(const Vec& obs) const {
    Vec inv(vocab_->size());
    for (int k = 0; k < vocab_->size(); ++k)
        inv[k] = 1.0 / std::max(node_bc_[static_cast<std::size_t>(k)].distance(obs), 1e-12);
    return inv / inv.sum();
}

void Mmjpf::init(const Vec& first_obs) {
    const int m = vocab_->size();
    if (first_obs.size() != 4 * vocab_->d) throw LengthMismatchError("observation length differs from 4d");
    // Responsibilities of each superstate for the first observation.
    Vec logp(m);
    for (int k = 0; k < m; ++k) {
        const auto& g = node_gauss_[static_cast<std::size_t>(k)];
        const auto llt = detail::checked_llt<double>(g.cov, "init_belief");
        const Vec d = first_obs - g.mean;
        logp[k] = -0.5 * (d.dot(llt.solve(d)) + detail::log_det(llt));
    }
    Vec resp = (logp.array() - logp.maxCoeff()).exp();
    resp /= resp.sum();
    std::discrete_distribution<int> pick(resp.data(), resp.data() + m);

    belief_ = BeliefState{};
    const auto cov0 = std::make_shared<const Mat>(R_);
    const int n = opts_.n_particles;
    for (int i = 0; i < n; ++i) {
        Particle p;
        p.superstate = pick(rng_);
        p.previous = p.superstate;
        p.dwell = 1;
        p.weight = 1.0 / n;
        p.mean = first_obs;
        p.cov = cov0;
        belief_.particles.push_back(std::move(p));
    }
    belief_.t = 0;
    belief_.predicted = false;
}

void Mmjpf::predict() {
    if (!initialised()) throw StateError("predict called before init");
    const int m = vocab_->size();
    const auto half = 2 * vocab_->d;
    auto& ps = belief_.particles;
    prior_weights_.resize(static_cast<Eigen::Index>(ps.size()));
    prev_occupancy_ = Vec::Zero(m);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::map<std::tuple<const Mat*, int, int>, std::shared_ptr<const Mat>> cache;
    pred_cov_.assign(ps.size(), nullptr);

    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto& p = ps[i];
        prior_weights_[static_cast<Eigen::Index>(i)] = p.weight;
        prev_occupancy_[p.superstate] += p.weight;

        const Mat& slice = vocab_->transition_slice(p.dwell);
        const double r = u(rng_);
        double cum = 0.0;
        int next = m - 1;
        for (int k = 0; k < m; ++k) {
            cum += slice(p.superstate, k);
            if (r < cum) {
                next = k;
                break;
            }
        }
        if (next == p.superstate) {
            ++p.dwell;
        } else {
            p.dwell = 1;
        }
        p.previous = p.superstate;
        p.superstate = next;

        // State block advances by the control, derivative block is set to it.
        const Vec uvec = control(next, p.previous);
        p.mean.head(half) += uvec;
        p.mean.tail(half) = uvec;

        const int j = opts_.use_conditional ? p.previous : -1;
        auto key = std::make_tuple(p.cov.get(), next, j);
        auto it = cache.find(key);
        if (it == cache.end()) {
            Mat c = sigma_w(next, p.previous);
            c.topLeftCorner(half, half) += p.cov->topLeftCorner(half, half);
            it = cache.emplace(key, std::make_shared<const Mat>(std::move(c))).first;
        }
        pred_cov_[i] = it->second;
    }
    const double s = prev_occupancy_.sum();
    if (s > 0.0) prev_occupancy_ /= s;
    belief_.predicted = true;
}

StepOutput Mmjpf::update(const Vec& obs) {
    if (!belief_.predicted) throw StateError("update called before predict");
    const int m = vocab_->size();
    const int d = vocab_->d;
    if (obs.size() != 4 * d) throw LengthMismatchError("observation length differs from 4d");
    auto& ps = belief_.particles;
    const auto n = ps.size();

    StepOutput out;
    out.t = ++belief_.t;
    out.prev_occupancy = prev_occupancy_;
    out.lambda_S = lambda_superstates(obs);
    out.lambda_X = Gauss{obs, R_};
    out.pi_S = Vec::Zero(m);
    for (std::size_t i = 0; i < n; ++i) out.pi_S[ps[i].superstate] += prior_weights_[static_cast<Eigen::Index>(i)];
    out.pi_S /= out.pi_S.sum();

    std::vector<Vec> pred_mean(n);
    struct Gain {
        Mat K;
        std::shared_ptr<const Mat> post;
    };
    std::map<const Mat*, Gain> gains;
    const auto dim = 4 * d;
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = ps[i];
        const Mat& P = *pred_cov_[i];
        auto it = gains.find(&P);
        if (it == gains.end()) {
            Mat S = P + R_;
            Eigen::LLT<Mat> llt(S);
            if (llt.info() != Eigen::Success) {
                S.diagonal().array() += 1e-9 * std::max(1.0, S.trace() / static_cast<double>(dim));
                llt.compute(S);
                if (llt.info() != Eigen::Success)
                    throw NumericalError("innovation covariance is not invertible after ridge retry");
            }
            Mat K = llt.solve(P).transpose();
            const Mat I_K = Mat::Identity(dim, dim) - K;
            Mat post = I_K * P * I_K.transpose() + K * R_ * K.transpose();
            post = 0.5 * (post + post.transpose());
            it = gains.emplace(&P, Gain{std::move(K), std::make_shared<const Mat>(std::move(post))}).first;
        }
        pred_mean[i] = p.mean;
        p.mean += it->second.K * (obs - p.mean);
        p.cov = it->second.post;
        if (opts_.use_conditional) {
            auto cb = cond_bc_.find({p.superstate, p.previous});
            const double dist = cb != cond_bc_.end() ? cb->second.distance(obs)
                                                     : node_bc_[static_cast<std::size_t>(p.superstate)].distance(obs);
            p.weight /= std::max(dist, 1e-12);
        } else {
            p.weight *= out.lambda_S[p.superstate];
        }
    }

    double total = 0.0;
    for (const auto& p : ps) total += p.weight;
    belief_.weights_reset = false;
    if (!(total > 0.0) || !std::isfinite(total)) {
        for (auto& p : ps) p.weight = 1.0 / static_cast<double>(n);
        belief_.weights_reset = true;
    } else {
        for (auto& p : ps) p.weight /= total;
    }

    std::size_t w = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const auto& a = ps[i];
        const auto& b = ps[w];
        if (a.weight > b.weight || (a.weight == b.weight && a.superstate < b.superstate)) w = i;
    }
    out.winner_index = static_cast<int>(w);
    out.winner = ps[w].superstate;
    out.pi_X = Gauss{pred_mean[w], *pred_cov_[w]};
    out.posterior_mean = ps[w].mean;
    out.ess = effective_sample_size(belief_);

    auto& ab = out.abnormality;
    std::vector<Vec> rows;
    rows.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) rows.emplace_back(vocab_->pi.row(k).transpose());
    ab.klda = klda(rows, out.lambda_S, out.prev_occupancy);
    ab.cla = cla(out.pi_X, out.lambda_X);
    ab.clb = clb(out.pi_X, node_gauss_[static_cast<std::size_t>(out.winner)]);
    ab.dcla = dcla(obs, out.pi_X.mean, d);

    ErrorContext ctx;
    ctx.observation = obs;
    ctx.predicted_state = out.pi_X.mean;
    ctx.lambda = out.lambda_S;
    ctx.pi = out.pi_S;
    ctx.means.reserve(static_cast<std::size_t>(m));
    for (const auto& g : node_gauss_) ctx.means.push_back(g.mean);
    out.errors = generalized_errors(ctx);

    if (out.ess < opts_.resample_fraction * static_cast<double>(n)) {
        sir_resample(belief_, rng_);
        out.resampled = true;
    }
    belief_.predicted = false;
    return out;
}

StepOutput Mmjpf::step(const Vec& obs) {
    predict();
    return update(obs);
}

StepOutput Mmjpf::step_gated(const Vec& obs, double reject_above) {
    predict();
    std::vector<Particle> predicted = belief_.particles;
    for (std::size_t i = 0; i < predicted.size(); ++i) predicted[i].cov = pred_cov_[i];
    StepOutput out = update(obs);
    if (out.abnormality.cla > reject_above) {
        belief_.particles = std::move(predicted);
        out.resampled = false;
    }
    return out;
}

std::vector<StepOutput> Mmjpf::run(const std::vector<Vec>& observations) {
    std::vector<StepOutput> out;
    if (observations.empty()) return out;
    init(observations.front());
    out.reserve(observations.size());
    for (std::size_t t = 1; t < observations.size(); ++t) out.push_back(step(observations[t]));
    return out;
}

void write_trace_csv(const std::string& path, const std::vector<StepOutput>& trace) {
    std::ofstream f(path);
    if (!f) throw std::ios_base::failure("cannot write " + path);
    write_trace_csv(f, trace);
}

void write_trace_csv(std::ostream& f, const std::vector<StepOutput>& trace) {
    f.precision(10);
    const auto d = trace.empty() ? 0 : trace.front().abnormality.dcla.size();
    f << "t,winner,ess,klda,cla,clb";
    for (Eigen::Index n = 0; n < d; ++n) f << ",dcla_" << (n + 1);
    f << '\n';
    for (const auto& s : trace) {
        f << s.t << ',' << s.winner << ',' << s.ess << ',' << s.abnormality.klda << ',' << s.abnormality.cla << ','
          << s.abnormality.clb;
        for (Eigen::Index n = 0; n < s.abnormality.dcla.size(); ++n) f << ',' << s.abnormality.dcla[n];
        f << '\n';
    }
}

}  // namespace jamaware
