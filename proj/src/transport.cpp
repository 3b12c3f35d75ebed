#include "jamaware/transport.hpp"

#include "jamaware/abnormality.hpp"

#include <cmath>
#include <map>
#include <queue>

namespace jamaware {

namespace {

bool all_reachable(const Mat& adj, bool transpose) {
    const auto n = adj.rows();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<Eigen::Index> q;
    q.push(0);
    seen[0] = true;
    while (!q.empty()) {
        const auto i = q.front();
        q.pop();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = transpose ? adj(j, i) : adj(i, j);
            if (w > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                q.push(j);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

Vec state_block(const Vec& v) { return v.head(v.size() / 2); }

}  // namespace

VocabGraph make_graph(const Vocabulary& vocab) {
    vocab.validate();
    VocabGraph g;
    // Entries at the smoothing floor are treated as absent edges.
    const double floor = 100.0 * kLaplaceEpsilon;
    g.weights = vocab.pi.unaryExpr([floor](double w) { return w > floor ? w : 0.0; });
    g.weights.diagonal().setZero();
    g.connected = vocab.size() == 1 || (all_reachable(g.weights, false) && all_reachable(g.weights, true));
    return g;
}

Mat matching_matrix(const Vocabulary& source, const Vocabulary& target) {
    const int ns = source.size(), nt = target.size();
    Mat m(ns, nt);
    for (int k = 0; k < ns; ++k)
        for (int l = 0; l < nt; ++l) m(k, l) = symmetric_kld(source.gaussian(k), target.gaussian(l));
    for (int k = 0; k < ns; ++k) {
        const double s = m.row(k).sum();
        if (s > 0.0)
            m.row(k) /= s;
        else
            m.row(k).setConstant(1.0 / nt);
    }
    return m;
}

int retiming_factor(int n_source, int n_target) {
    if (n_source < 2 || n_target < 2) {
        if (n_source == n_target) return 1;
        throw ConfigError("re-timing needs at least two superstates on both sides");
    }
    const double g = std::log2(static_cast<double>(n_target)) / std::log2(static_cast<double>(n_source));
    const double r = std::round(g);
    if (std::abs(g - r) > 1e-9 || r < 1.0)
        throw ConfigError("re-timing factor " + std::to_string(g) + " is not an integer >= 1");
    return static_cast<int>(r);
}

std::size_t tuple_index(const std::vector<int>& labels, std::size_t first, int gamma, int n_source) {
    if (first + static_cast<std::size_t>(gamma) > labels.size()) throw LengthMismatchError("incomplete label tuple");
    std::size_t idx = 0;
    for (int i = 0; i < gamma; ++i) {
        const int k = labels[first + static_cast<std::size_t>(i)];
        if (k < 0 || k >= n_source) throw std::out_of_range("source label");
        idx = idx * static_cast<std::size_t>(n_source) + static_cast<std::size_t>(k);
    }
    return idx;
}

Mat interaction_matrix(const std::vector<int>& source_labels, const std::vector<int>& target_labels, int n_source,
                       int n_target, int gamma) {
    if (gamma < 1) throw ConfigError("gamma must be >= 1");
    if (source_labels.size() != static_cast<std::size_t>(gamma) * target_labels.size())
        throw LengthMismatchError("source stream must carry gamma labels per target label");
    const double rows_d = std::pow(static_cast<double>(n_source), gamma);
    if (rows_d > 65536.0) throw ConfigError("interaction matrix would exceed 65536 rows");
    Mat j = Mat::Zero(static_cast<Eigen::Index>(rows_d), n_target);
    for (std::size_t b = 0; b < target_labels.size(); ++b) {
        const auto r = tuple_index(source_labels, b * static_cast<std::size_t>(gamma), gamma, n_source);
        j(static_cast<Eigen::Index>(r), target_labels[b]) += 1.0;
    }
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
        const double s = j.row(r).sum();
        if (s > 0.0)
            j.row(r) /= s;
        else
            j.row(r).setConstant(1.0 / n_target);
    }
    return j;
}

int TransportPlan::target_for(const std::vector<int>& labels, std::size_t first) const {
    const auto r = static_cast<Eigen::Index>(tuple_index(labels, first, gamma, n_source));
    int best = 0;
    double best_dist = 0.0;
    for (int l = 0; l < n_target; ++l) {
        double dist = 0.0;
        for (int i = 0; i < gamma; ++i) dist += M(labels[first + static_cast<std::size_t>(i)], l);
        if (l == 0) {
            best_dist = dist;
            continue;
        }
        const double diff = J(r, l) - J(r, best);
        if (diff > 1e-12 || (std::abs(diff) <= 1e-12 && dist < best_dist)) {
            best = l;
            best_dist = dist;
        }
    }
    return best;
}

std::vector<int> TransportPlan::tuple_for(int target) const {
    Eigen::Index r = 0;
    J.col(target).maxCoeff(&r);
    std::vector<int> labels(static_cast<std::size_t>(gamma));
    auto idx = static_cast<std::size_t>(r);
    for (int i = gamma - 1; i >= 0; --i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(idx % static_cast<std::size_t>(n_source));
        idx /= static_cast<std::size_t>(n_source);
    }
    return labels;
}

Vec TransportPlan::force(int k, int l) const {
    return target_means.at(static_cast<std::size_t>(l)) - source_means.at(static_cast<std::size_t>(k));
}

std::vector<Vec> state_means(const Vocabulary& vocab) {
    std::vector<Vec> out;
    for (const auto& n : vocab.nodes) out.push_back(state_block(n.mean));
    return out;
}

std::vector<int> nearest_state_labels(const std::vector<Vec>& states, const std::vector<Vec>& means) {
    if (means.empty()) throw EmptyInputError("no superstates to label against");
    std::vector<int> out(states.size());
    for (std::size_t t = 0; t < states.size(); ++t) {
        int best = 0;
        double bd = (states[t] - means[0]).squaredNorm();
        for (std::size_t m = 1; m < means.size(); ++m) {
            const double dd = (states[t] - means[m]).squaredNorm();
            if (dd < bd) {
                bd = dd;
                best = static_cast<int>(m);
            }
        }
        out[t] = best;
    }
    return out;
}

TransportPlan transport_plan(const Vocabulary& source, const Vocabulary& target, const PairedSamples& paired,
                             const std::string& source_name, const std::string& target_name) {
    TransportPlan p;
    p.source = source_name;
    p.target = target_name;
    p.n_source = source.size();
    p.n_target = target.size();
    p.gamma = retiming_factor(p.n_source, p.n_target);
    if (paired.source_states.size() != paired.source_labels.size() ||
        paired.target_states.size() != paired.target_labels.size())
        throw LengthMismatchError("paired samples and labels differ in length");
    p.M = matching_matrix(source, target);
    p.J = interaction_matrix(paired.source_labels, paired.target_labels, p.n_source, p.n_target, p.gamma);
    p.source_means = state_means(source);
    p.target_means = state_means(target);
    for (const auto& n : target.nodes) {
        const auto h = n.mean.size() / 2;
        p.target_covs.push_back(n.cov.topLeftCorner(h, h));
    }

    struct Acc {
        Vec sum_s, sum_t;
        Mat sum_ts;
        int n = 0;
    };
    std::map<std::pair<int, int>, Acc> acc;
    const auto g = static_cast<std::size_t>(p.gamma);
    for (std::size_t b = 0; b < paired.target_labels.size(); ++b) {
        const int l = paired.target_labels[b];
        const Vec& xt = paired.target_states[b];
        for (std::size_t i = 0; i < g; ++i) {
            const int k = paired.source_labels[b * g + i];
            const Vec& xs = paired.source_states[b * g + i];
            auto [it, fresh] = acc.try_emplace({k, l});
            auto& a = it->second;
            if (fresh) {
                a.sum_s = Vec::Zero(xs.size());
                a.sum_t = Vec::Zero(xt.size());
                a.sum_ts = Mat::Zero(xt.size(), xs.size());
            }
            a.sum_s += xs;
            a.sum_t += xt;
            a.sum_ts += xt * xs.transpose();
            ++a.n;
        }
    }
    for (const auto& [key, a] : acc) {
        TransportPair tp;
        tp.k = key.first;
        tp.l = key.second;
        tp.force = p.force(tp.k, tp.l);
        const double n = static_cast<double>(a.n);
        tp.cov = a.sum_ts / n - (a.sum_t / n) * (a.sum_s / n).transpose();
        tp.count = a.n;
        p.pairs.push_back(std::move(tp));
    }
    return p;
}

TransportPlan identity_plan(const Vocabulary& vocab, const std::string& name) {
    TransportPlan p;
    p.source = p.target = name;
    p.gamma = 1;
    p.n_source = p.n_target = vocab.size();
    p.M = matching_matrix(vocab, vocab);
    p.J = Mat::Identity(p.n_source, p.n_target);
    p.source_means = p.target_means = state_means(vocab);
    for (const auto& n : vocab.nodes) {
        const auto h = n.mean.size() / 2;
        p.target_covs.push_back(n.cov.topLeftCorner(h, h));
    }
    for (int k = 0; k < p.n_source; ++k) {
        const auto h = p.source_means[static_cast<std::size_t>(k)].size();
        p.pairs.push_back({k, k, Vec::Zero(h), Mat::Zero(h, h), 0});
    }
    return p;
}

Vec convert_block(const TransportPlan& plan, const std::vector<Vec>& source_states, const std::vector<int>& source_labels,
                  std::size_t first) {
    if (source_states.size() != source_labels.size()) throw LengthMismatchError("states and labels differ in length");
    const int l = plan.target_for(source_labels, first);
    Vec out = Vec::Zero(plan.target_means.at(static_cast<std::size_t>(l)).size());
    for (int i = 0; i < plan.gamma; ++i) {
        const auto t = first + static_cast<std::size_t>(i);
        out += source_states[t] + plan.force(source_labels[t], l);
    }
    return out / static_cast<double>(plan.gamma);
}

nlohmann::json plan_to_json(const TransportPlan& plan) {
    auto mat = [](const Mat& m) {
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
        return rows;
    };
    nlohmann::json j;
    j["source"] = plan.source;
    j["target"] = plan.target;
    j["gamma"] = plan.gamma;
    auto pairs = nlohmann::json::array();
    for (const auto& p : plan.pairs)
        pairs.push_back({{"k", p.k},
                         {"l", p.l},
                         {"force", std::vector<double>(p.force.data(), p.force.data() + p.force.size())},
                         {"cov", mat(p.cov)},
                         {"count", p.count}});
    j["pairs"] = pairs;
    j["M"] = mat(plan.M);
    j["J"] = mat(plan.J);
    return j;
}

namespace {

Bits random_bits(std::size_t n, Rng& rng) {
    std::bernoulli_distribution b(0.5);
    Bits out(n);
    for (auto& x : out) x = b(rng) ? 1 : 0;
    return out;
}

cplx complex_noise(Rng& rng, double variance) {
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    const double re = g(rng);
    return {re, g(rng)};
}

std::vector<Vec> observe(const std::vector<cplx>& samples) {
    Eigen::MatrixXcd g(1, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t t = 0; t < samples.size(); ++t) g(0, static_cast<Eigen::Index>(t)) = samples[t];
    return build_generalized_observations(g);
}

}  // namespace

ConversionStreams make_conversion_streams(const ModulationScheme& source, const ModulationScheme& target,
                                          int n_target_symbols, double snr_db, bool noiseless, std::uint64_t seed) {
    if (n_target_symbols < 1) throw ConfigError("need at least one target symbol");
    const int bs = source.bits_per_symbol(), bt = target.bits_per_symbol();
    if (bt % bs != 0) throw ConfigError("target bits per symbol must be a multiple of the source's");
    const int gamma = bt / bs;
    auto bit_rng = make_rng(seed, 1);
    auto src_noise = make_rng(seed, 2);
    auto tgt_noise = make_rng(seed, 3);
    const double var = db_to_linear(-snr_db);

    ConversionStreams s;
    s.bits = random_bits(static_cast<std::size_t>(n_target_symbols) * static_cast<std::size_t>(bt), bit_rng);
    s.source_symbols = modulate(s.bits, source);
    s.target_symbols = modulate(s.bits, target);
    std::vector<cplx> src_rx(s.source_symbols.size()), tgt_rx(s.source_symbols.size());
    for (std::size_t t = 0; t < src_rx.size(); ++t) {
        const cplx ns = complex_noise(src_noise, var);
        const cplx nt = complex_noise(tgt_noise, var);
        src_rx[t] = s.source_symbols[t] + (noiseless ? cplx{} : ns);
        tgt_rx[t] = s.target_symbols[t / static_cast<std::size_t>(gamma)] + (noiseless ? cplx{} : nt);
    }
    s.source_obs = observe(src_rx);
    s.target_obs = observe(tgt_rx);
    return s;
}

std::vector<Vec> make_held_stream(const ModulationScheme& scheme, int hold, int n_symbols, double snr_db,
                                  std::uint64_t seed) {
    if (hold < 1 || n_symbols < 1) throw ConfigError("hold and symbol count must be positive");
    auto bit_rng = make_rng(seed, 1);
    auto noise_rng = make_rng(seed, 2);
    const double var = db_to_linear(-snr_db);
    const auto sym = modulate(random_bits(static_cast<std::size_t>(n_symbols * scheme.bits_per_symbol()), bit_rng), scheme);
    std::vector<cplx> rx;
    rx.reserve(sym.size() * static_cast<std::size_t>(hold));
    for (const auto& s : sym)
        for (int h = 0; h < hold; ++h) rx.push_back(s + complex_noise(noise_rng, var));
    return observe(rx);
}

Vocabulary learn_stream_vocabulary(const std::vector<Vec>& obs, int n_nodes, const std::string& tag,
                                   const GngConfig& gng) {
    VocabularyOptions vo;
    vo.gng = gng;
    vo.gng.max_nodes = n_nodes;
    vo.bootstrap_with_ukf = false;
    vo.conditional = true;
    return learn_vocabulary({obs}, 1, tag, vo);
}

ConversionResult convert_stream(const TransportPlan& plan, const ModulationScheme& target,
                                const std::vector<Vec>& source_obs) {
    std::vector<Vec> states;
    states.reserve(source_obs.size());
    for (const auto& z : source_obs) states.push_back(state_block(z));
    const auto labels = nearest_state_labels(states, plan.source_means);
    ConversionResult out;
    const auto g = static_cast<std::size_t>(plan.gamma);
    for (std::size_t first = 0; first + g <= states.size(); first += g) {
        const Vec c = convert_block(plan, states, labels, first);
        out.converted.emplace_back(c[0], c[1]);
    }
    out.bits = demodulate(out.converted, target);
    return out;
}

AmcResult amc_classify(const std::vector<Vec>& evidence, const Vocabulary& source, const std::vector<TransportPlan>& plans,
                       const Vec& r_diag, int alpha) {
    if (alpha < 1) throw ConfigError("alpha must be >= 1");
    std::vector<TransportPlan> hyp;
    hyp.push_back(identity_plan(source, "source"));
    hyp.insert(hyp.end(), plans.begin(), plans.end());
    int max_gamma = 1;
    for (const auto& h : hyp) max_gamma = std::max(max_gamma, h.gamma);
    AmcResult out;
    out.t_cc = alpha * max_gamma;
    if (evidence.size() < static_cast<std::size_t>(out.t_cc)) throw EmptyInputError("evidence shorter than one window");
    if (r_diag.size() != evidence.front().size()) throw LengthMismatchError("evidence noise length");

    std::vector<Vec> states;
    for (const auto& z : evidence) states.push_back(state_block(z));
    const Gauss ev_template{Vec(), r_diag.asDiagonal()};
    const auto n_windows = evidence.size() / static_cast<std::size_t>(out.t_cc);
    const auto H = hyp.size();

    // Per hypothesis, the converted prediction at every step.
    std::vector<std::vector<Vec>> pred(H);
    std::vector<std::vector<const Mat*>> pcov(H);
    for (std::size_t h = 0; h < H; ++h) {
        const auto& plan = hyp[h];
        const auto g = static_cast<std::size_t>(plan.gamma);
        for (std::size_t first = 0; first + g <= states.size(); first += g) {
            Vec block = Vec::Zero(states[first].size());
            for (std::size_t i = 0; i < g; ++i) block += states[first + i];
            block /= static_cast<double>(g);
            const int l = nearest_state_labels({block}, plan.target_means).front();
            // Route through the source tuple that fires l, as the conversion would.
            const auto tuple = plan.tuple_for(l);
            std::vector<Vec> xs;
            for (int k : tuple) xs.push_back(plan.source_means[static_cast<std::size_t>(k)]);
            const Vec c = plan.gamma == 1 ? plan.target_means[static_cast<std::size_t>(l)] : convert_block(plan, xs, tuple, 0);
            for (std::size_t i = 0; i < g; ++i) {
                pred[h].push_back(c);
                pcov[h].push_back(&plan.target_covs[static_cast<std::size_t>(l)]);
            }
        }
    }

    std::size_t windows = n_windows;
    for (const auto& p : pred) windows = std::min(windows, p.size() / static_cast<std::size_t>(out.t_cc));
    if (windows == 0) throw EmptyInputError("evidence shorter than one window");
    for (std::size_t w = 0; w < windows; ++w) {
        Vec score = Vec::Zero(static_cast<Eigen::Index>(H));
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t t = w * static_cast<std::size_t>(out.t_cc); t < (w + 1) * static_cast<std::size_t>(out.t_cc);
                 ++t) {
                const std::size_t tp = t == 0 ? 0 : t - 1;
                const Vec& p = pred[h][t];
                const Mat& c = *pcov[h][t];
                const Mat& cp = *pcov[h][tp];
                const auto k = p.size();
                Gauss g;
                g.mean.resize(2 * k);
                g.mean << p, p - pred[h][tp];
                g.cov.resize(2 * k, 2 * k);
                g.cov << c, c, c, c + cp;
                Gauss e = ev_template;
                e.mean = evidence[t];
                score[static_cast<Eigen::Index>(h)] += bhattacharyya(g, e).distance;
            }
        }
        score /= static_cast<double>(out.t_cc);
        Eigen::Index best = 0;
        score.minCoeff(&best);
        out.khat.push_back(static_cast<int>(best));
        out.scores.push_back(score);
    }
    return out;
}

}  // namespace jamaware
