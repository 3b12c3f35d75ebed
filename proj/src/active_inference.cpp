#include "jamaware/active_inference.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace jamaware {

std::size_t ActiveBeliefs::slice(int tau) const {
    return static_cast<std::size_t>(std::clamp(tau, 1, tau_max()) - 1);
}

void ActiveBeliefs::validate() const {
    auto check = [this](const std::vector<Mat>& stack, const char* name) {
        if (stack.empty()) throw StateError(std::string(name) + " has no slices");
        for (const auto& m : stack) {
            if (m.rows() != n || m.cols() != n) throw StateError(std::string(name) + " slice has the wrong shape");
            if (m.minCoeff() < 0.0) throw StateError(std::string(name) + " has a negative entry");
            for (Eigen::Index r = 0; r < n; ++r)
                if (std::abs(m.row(r).sum() - 1.0) > 1e-9) throw StateError(std::string(name) + " row off the simplex");
        }
    };
    check(P_u, "P_u");
    check(P_j, "P_j");
    check(Pi_a, "Pi_a");
}

ActiveBeliefs init_beliefs(int n, int tau_max) {
    if (n < 2) throw ConfigError("active inference needs at least two PRBs");
    if (tau_max < 1) throw ConfigError("tau_max must be >= 1");
    ActiveBeliefs b;
    b.n = n;
    const Mat u = Mat::Constant(n, n, 1.0 / n);
    b.P_u.assign(static_cast<std::size_t>(tau_max), u);
    b.P_j.assign(static_cast<std::size_t>(tau_max), u);
    b.Pi_a.assign(static_cast<std::size_t>(tau_max), u);
    b.u_counts.assign(static_cast<std::size_t>(tau_max), Mat::Zero(n, n));
    return b;
}

int select_action(const ActiveBeliefs& beliefs, int state, int tau, int jammer_row, Rng& rng) {
    const auto s = beliefs.slice(tau);
    Vec score = beliefs.Pi_a[s].row(state).transpose();
    if (jammer_row >= 0) score.array() *= 1.0 - beliefs.P_j[s].row(jammer_row).transpose().array();
    const double best = score.maxCoeff();
    std::vector<int> ties;
    for (int a = 0; a < beliefs.n; ++a)
        if (score[a] >= best - 1e-12) ties.push_back(a);
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(rng)];
}

Vec gate_weights(int n, int action) {
    if (action < 0 || action >= n) throw std::out_of_range("action outside the PRB set");
    Vec w = Vec::Zero(n);
    w[action] = 1.0;
    return w;
}

Eigen::VectorXcd fuse_observations(const std::vector<Eigen::VectorXcd>& per_prb, int action) {
    const Vec w = gate_weights(static_cast<int>(per_prb.size()), action);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(per_prb.front().size());
    for (std::size_t p = 0; p < per_prb.size(); ++p)
        if (w[static_cast<Eigen::Index>(p)] != 0.0) out += w[static_cast<Eigen::Index>(p)] * per_prb[p];
    return out;
}

Perceiver::Perceiver(const Vocabulary& reference, double threshold, FilterOptions opts, int max_rejections)
    : filter_(reference, std::move(opts)), threshold_(threshold), max_rejections_(max_rejections) {
    if (!(threshold > 0.0)) throw ConfigError("perception threshold must be positive");
}

Perception Perceiver::perceive(const Eigen::VectorXcd& samples) {
    if (!filter_.initialised()) {
        filter_.init(generalized_observation(samples, nullptr));
        last_accepted_ = samples;
        return {};
    }
    const Vec z = generalized_observation(samples, &*last_accepted_);
    const StepOutput out = filter_.step_gated(z, threshold_);
    Perception p{out.abnormality.klda, out.abnormality.cla, out.abnormality.cla > threshold_};
    if (!p.collision) {
        last_accepted_ = samples;
        rejections_ = 0;
    } else if (++rejections_ > max_rejections_) {
        // The belief has gone stale: start again from what is heard now.
        filter_.init(generalized_observation(samples, nullptr));
        last_accepted_ = samples;
        rejections_ = 0;
    }
    return p;
}

double gamma_star(double upsilon, double eta, double gamma_max) {
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    return gamma_max * std::min(1.0, std::max(0.0, upsilon) / eta);
}

namespace {

template <class Row>
void clamp_renormalise(Row&& row) {
    row = row.cwiseMax(0.0);
    const double s = row.sum();
    if (s > 0.0)
        row /= s;
    else
        row.setConstant(1.0 / static_cast<double>(row.size()));
}

}  // namespace

void update_beliefs(ActiveBeliefs& b, const BeliefUpdate& u, int& jammer_row) {
    if (u.state < 0 || u.state >= b.n || u.action < 0 || u.action >= b.n) throw std::out_of_range("PRB index");
    const auto s = b.slice(u.tau);

    // Running average of observed transitions on top of the uniform prior.
    auto& counts = b.u_counts[s];
    counts(u.state, u.action) += 1.0;
    const double c = counts.row(u.state).sum();
    auto urow = b.P_u[s].row(u.state);
    Vec onehot = Vec::Zero(b.n);
    onehot[u.action] = 1.0;
    urow = (urow * c + onehot.transpose()) / (c + 1.0);
    clamp_renormalise(urow);

    if (!u.collision) return;
    const double g = gamma_star(u.upsilon, u.eta, u.gamma_max);
    auto arow = b.Pi_a[s].row(u.state);
    for (int a = 0; a < b.n; ++a) arow[a] += a == u.action ? -g : g / static_cast<double>(b.n - 1);
    clamp_renormalise(arow);

    if (jammer_row >= 0) {
        auto jrow = b.P_j[s].row(jammer_row);
        jrow = (1.0 - g) * jrow + g * onehot.transpose();
        clamp_renormalise(jrow);
    }
    jammer_row = u.action;
}

const char* agent_name(AgentKind kind) {
    switch (kind) {
        case AgentKind::AIN: return "AIN";
        case AgentKind::QL: return "QL";
        case AgentKind::FH: return "FH";
    }
    return "?";
}

void EpisodeConfig::validate() const {
    if (n_prbs < 2) throw ConfigError("episode needs at least two PRBs");
    if (steps < 1) throw ConfigError("episode needs at least one step");
    if (d < 1) throw ConfigError("sub-carriers per PRB must be >= 1");
    if (tau_max < 1) throw ConfigError("tau_max must be >= 1");
    if (!(gamma_max > 0.0 && gamma_max <= 1.0)) throw ConfigError("gamma_max must lie in (0, 1]");
    if (!(ql.learning_rate > 0.0 && ql.learning_rate <= 1.0)) throw ConfigError("QL learning rate must lie in (0, 1]");
    if (!(ql.discount >= 0.0 && ql.discount < 1.0)) throw ConfigError("QL discount must lie in [0, 1)");
    if (!(ql.explore_fraction > 0.0 && ql.explore_fraction <= 1.0)) throw ConfigError("QL explore fraction must lie in (0, 1]");
    if (!std::isfinite(snr_db) || !std::isfinite(jsr_db)) throw ConfigError("SNR and JSR must be finite");
    resolve_episode_jammer(*this).validate(steps + 1);
}

JammerStrategy resolve_episode_jammer(const EpisodeConfig& cfg) {
    JammerStrategy j = cfg.jammer;
    if (j.pattern == JammerPattern::CONSTANT && j.target_prbs.empty()) {
        std::vector<int> all(static_cast<std::size_t>(cfg.n_prbs));
        std::iota(all.begin(), all.end(), 0);
        auto rng = make_rng(j.seed, 99);
        std::shuffle(all.begin(), all.end(), rng);
        const auto count = static_cast<std::size_t>(std::lround(j.hit_rate * cfg.n_prbs));
        j.target_prbs.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
        std::sort(j.target_prbs.begin(), j.target_prbs.end());
    }
    if (j.pattern == JammerPattern::WINDOWED && j.on_windows.empty()) j.on_windows = {{0, cfg.steps + 1}};
    return j;
}

double EpisodeLog::collision_rate(std::size_t first, std::size_t last) const {
    last = std::min(last, steps.size());
    if (first >= last) throw EmptyInputError("empty collision-rate range");
    std::size_t n = 0;
    for (std::size_t t = first; t < last; ++t) n += steps[t].collision;
    return static_cast<double>(n) / static_cast<double>(last - first);
}

namespace {

cplx complex_noise(Rng& rng, double variance) {
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    const double re = g(rng);
    return {re, g(rng)};
}

int greedy(const Mat& q, int state, Rng& rng) {
    const double best = q.row(state).maxCoeff();
    std::vector<int> ties;
    for (int a = 0; a < q.cols(); ++a)
        if (q(state, a) >= best - 1e-12) ties.push_back(a);
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(rng)];
}

}  // namespace

EpisodeLog run_episode(const EpisodeConfig& cfg, AgentKind agent, const Vocabulary& reference, double eta) {
    cfg.validate();
    if (reference.d != cfg.d) throw ConfigError("reference vocabulary does not match the PRB width");
    const JammerStrategy jammer = resolve_episode_jammer(cfg);
    const int n = cfg.n_prbs;

    // Every PRB carries the same command stream; slot 0 is a clean pilot.
    ScenarioConfig sc;
    sc.n_subcarriers = cfg.d;
    sc.n_steps = cfg.steps + 1;
    sc.channel.snr_db = cfg.snr_db;
    sc.jammer.enabled = false;
    sc.seed = cfg.seed;
    const Eigen::MatrixXcd signal = synthesize_scenario(sc).signal;

    const double sigma2 = db_to_linear(-cfg.snr_db);
    const double jam_amp = std::sqrt(db_to_linear(cfg.jsr_db));
    const auto& qpsk = constellation(ModulationScheme{Modulation::QPSK});
    auto noise_rng = make_rng(cfg.seed, 50);
    auto jam_rng = make_rng(jammer.seed, 51);
    std::uniform_int_distribution<std::size_t> jam_sym(0, qpsk.size() - 1);
    auto agent_rng = make_rng(cfg.seed, 60 + static_cast<std::uint64_t>(agent));

    FilterOptions fo;
    fo.n_particles = cfg.n_particles;
    fo.seed = cfg.seed * 31 + static_cast<std::uint64_t>(agent);
    Perceiver perceiver(reference, eta, fo);

    auto draw_prbs = [&](int t, bool jam_allowed, std::vector<Eigen::VectorXcd>& rx) {
        const auto hit = jam_allowed ? jammer_schedule(jammer, t, n) : std::set<int>{};
        for (int p = 0; p < n; ++p) {
            Eigen::VectorXcd v(cfg.d);
            for (int k = 0; k < cfg.d; ++k) {
                const cplx noise = complex_noise(noise_rng, sigma2);
                const cplx js = jam_amp * qpsk[jam_sym(jam_rng)];
                v[k] = signal(k, t) + noise + (hit.count(p) ? js : cplx{});
            }
            rx[static_cast<std::size_t>(p)] = v;
        }
        return hit;
    };

    std::vector<Eigen::VectorXcd> rx(static_cast<std::size_t>(n));
    draw_prbs(0, false, rx);
    perceiver.perceive(rx[0]);

    EpisodeLog log;
    log.agent = agent;
    log.eta = eta;
    ActiveBeliefs beliefs = init_beliefs(n, cfg.tau_max);
    std::vector<Mat> q(static_cast<std::size_t>(cfg.tau_max), Mat::Zero(n, n));
    std::uniform_int_distribution<int> uniform_prb(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int state = uniform_prb(agent_rng);
    int tau = 1;
    int jammer_row = -1;
    double cum_r = 0.0, cum_a = 0.0;

    for (int t = 1; t <= cfg.steps; ++t) {
        int action = 0;
        switch (agent) {
            case AgentKind::AIN: action = select_action(beliefs, state, tau, jammer_row, agent_rng); break;
            case AgentKind::QL: {
                const double eps =
                    std::max(0.0, 1.0 - static_cast<double>(t - 1) / (cfg.ql.explore_fraction * cfg.steps));
                action = unit(agent_rng) < eps ? uniform_prb(agent_rng) : greedy(q[beliefs.slice(tau)], state, agent_rng);
                break;
            }
            case AgentKind::FH: action = uniform_prb(agent_rng); break;
        }

        const auto hit = draw_prbs(t, true, rx);
        const Perception p = perceiver.perceive(fuse_observations(rx, action));

        EpisodeStep st;
        st.t = t;
        st.action = action;
        st.jammed.assign(hit.begin(), hit.end());
        st.collision = hit.count(action) > 0;
        st.flagged = p.collision;
        st.reward = st.collision ? -1 : 1;
        st.abn_S = p.upsilon_S;
        st.abn_X = p.upsilon_X;
        st.sinr = sinr(1.0, jam_amp * jam_amp, 1.0, 1.0, st.collision, sigma2);

        const int next_tau = action == state ? std::min(tau + 1, cfg.tau_max) : 1;
        if (agent == AgentKind::AIN) {
            update_beliefs(beliefs, {state, action, tau, p.collision, p.upsilon_X, eta, cfg.gamma_max}, jammer_row);
        } else if (agent == AgentKind::QL) {
            auto& qs = q[beliefs.slice(tau)];
            const double target = st.reward + cfg.ql.discount * q[beliefs.slice(next_tau)].row(action).maxCoeff();
            qs(state, action) += cfg.ql.learning_rate * (target - qs(state, action));
        }
        tau = next_tau;
        state = action;

        cum_r += st.reward;
        cum_a += st.abn_X - eta;
        log.cumulative_reward.push_back(cum_r);
        log.cumulative_abnormality.push_back(cum_a);
        log.steps.push_back(std::move(st));
    }
    if (agent == AgentKind::AIN) log.beliefs = std::move(beliefs);
    return log;
}

void write_episode_csv(const std::string& path, const EpisodeLog& log) {
    std::ofstream f(path);
    if (!f) throw std::ios_base::failure("cannot write " + path);
    write_episode_csv(f, log);
}

void write_episode_csv(std::ostream& f, const EpisodeLog& log) {
    f.precision(10);
    f << "t,action,jammed_set,collision,flagged,reward,abn_S,abn_X,sinr\n";
    for (const auto& s : log.steps) {
        f << s.t << ',' << s.action << ',';
        for (std::size_t i = 0; i < s.jammed.size(); ++i) f << (i ? ";" : "") << s.jammed[i];
        f << ',' << s.collision << ',' << s.flagged << ',' << s.reward << ',' << s.abn_S << ',' << s.abn_X << ','
          << s.sinr << '\n';
    }
}

}  // namespace jamaware
