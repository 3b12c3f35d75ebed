#include "jamaware/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace jamaware {

// ---------------------------------------------------------------- Vocabulary

Gauss Vocabulary::conditional(int m, int j) const {
    const auto& node = nodes.at(static_cast<std::size_t>(m));
    if (auto it = node.conditional.find(j); it != node.conditional.end()) return it->second;
    return {node.mean, node.cov};
}

Vec Vocabulary::control(int m) const {
    const auto& mu = nodes.at(static_cast<std::size_t>(m)).mean;
    const auto half = mu.size() / 2;
    return mu.tail(half);
}

const Mat& Vocabulary::transition_slice(int tau) const {
    if (pi_tau.empty()) return pi;
    const int idx = std::clamp(tau, 1, tau_max()) - 1;
    return pi_tau[static_cast<std::size_t>(idx)];
}

void Vocabulary::validate() const {
    const int m = size();
    if (m < 1) throw ConfigError("vocabulary needs at least one superstate");
    if (pi.rows() != m || pi.cols() != m) throw ConfigError("transition matrix size differs from superstate count");
    const auto check_rows = [&](const Mat& p) {
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            if (std::abs(p.row(i).sum() - 1.0) > 1e-9 || p.row(i).minCoeff() < 0.0)
                throw ConfigError("transition row is not a probability vector");
    };
    check_rows(pi);
    for (const auto& s : pi_tau) {
        if (s.rows() != m || s.cols() != m) throw ConfigError("dwell-time slice has the wrong size");
        check_rows(s);
    }
    for (const auto& n : nodes) {
        if (n.mean.size() != 4 * d || n.cov.rows() != 4 * d || n.cov.cols() != 4 * d)
            throw ConfigError("superstate statistics do not match 4d");
        for (const auto& [j, g] : n.conditional)
            if (j < 0 || j >= m) throw ConfigError("conditional statistics keyed by an unknown superstate");
    }
    if (r_diag.size() != 4 * d) throw ConfigError("observation noise must have 4d entries");
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(std::move(row));
    }
    return a;
}

nlohmann::json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Mat mat_from_json(const nlohmann::json& a) {
    const auto rows = static_cast<Eigen::Index>(a.size());
    const auto cols = rows ? static_cast<Eigen::Index>(a.at(0).size()) : 0;
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(a.at(i).size()) != cols) throw ConfigError("ragged matrix in JSON");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a.at(i).at(j).get<double>();
    }
    return m;
}

Vec vec_from_json(const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const Vocabulary& v) {
    j = nlohmann::json::object();
    j["schema_version"] = v.schema_version;
    j["tag"] = v.tag;
    j["d"] = v.d;
    auto nodes = nlohmann::json::array();
    for (const auto& n : v.nodes) {
        nlohmann::json o;
        o["id"] = n.id;
        o["mean"] = vec_to_json(n.mean);
        o["cov"] = mat_to_json(n.cov);
        o["count"] = n.count;
        o["empty"] = n.empty;
        auto cond = nlohmann::json::object();
        for (const auto& [k, g] : n.conditional) {
            nlohmann::json c;
            c["mean"] = vec_to_json(g.mean);
            c["cov"] = mat_to_json(g.cov);
            auto it = n.conditional_count.find(k);
            c["count"] = it == n.conditional_count.end() ? 0 : it->second;
            cond[std::to_string(k)] = std::move(c);
        }
        o["cond"] = std::move(cond);
        nodes.push_back(std::move(o));
    }
    j["nodes"] = std::move(nodes);
    j["pi"] = mat_to_json(v.pi);
    auto slices = nlohmann::json::array();
    for (const auto& s : v.pi_tau) slices.push_back(mat_to_json(s));
    j["pi_tau"] = std::move(slices);
    j["r_diag"] = vec_to_json(v.r_diag);
}

void from_json(const nlohmann::json& j, Vocabulary& v) {
    v.schema_version = j.at("schema_version").get<int>();
    if (v.schema_version != kVocabularySchemaVersion)
        throw ConfigError("unsupported vocabulary schema_version " + std::to_string(v.schema_version));
    v.tag = j.at("tag").get<std::string>();
    v.d = j.at("d").get<int>();
    v.nodes.clear();
    for (const auto& o : j.at("nodes")) {
        Superstate n;
        n.id = o.at("id").get<int>();
        n.mean = vec_from_json(o.at("mean"));
        n.cov = mat_from_json(o.at("cov"));
        n.count = o.value("count", 0);
        n.empty = o.value("empty", false);
        if (o.contains("cond"))
            for (const auto& [key, c] : o.at("cond").items()) {
                const int k = std::stoi(key);
                n.conditional[k] = Gauss{vec_from_json(c.at("mean")), mat_from_json(c.at("cov"))};
                n.conditional_count[k] = c.value("count", 0);
            }
        v.nodes.push_back(std::move(n));
    }
    v.pi = mat_from_json(j.at("pi"));
    v.pi_tau.clear();
    for (const auto& s : j.at("pi_tau")) v.pi_tau.push_back(mat_from_json(s));
    v.r_diag = vec_from_json(j.at("r_diag"));
    v.validate();
}

std::string serialize_vocabulary(const Vocabulary& v) {
    nlohmann::json j = v;
    return j.dump();
}

Vocabulary parse_vocabulary(const std::string& text) {
    try {
        return nlohmann::json::parse(text).get<Vocabulary>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed vocabulary JSON: ") + e.what());
    }
}

void save_vocabulary(const std::string& path, const Vocabulary& v) {
    std::ofstream f(path);
    if (!f) throw std::ios_base::failure("cannot write " + path);
    f << serialize_vocabulary(v);
}

Vocabulary load_vocabulary(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read vocabulary " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_vocabulary(ss.str());
}

// ------------------------------------------------------------- UKF bootstrap

UkfOutput ukf_bootstrap(const std::vector<Vec>& observations, const UkfConfig& cfg) {
    if (observations.size() < 2) throw EmptyInputError("ukf_bootstrap needs at least two observations");
    if (!(cfg.process_noise > 0.0) || !(cfg.measurement_noise > 0.0))
        throw NumericalError("ukf_bootstrap: noise covariances must be positive definite");
    // With isotropic noises and an identity model every component runs the
    // same scalar Kalman recursion, so the gain is shared.
    const auto n = observations.front().size();
    UkfOutput out;
    out.errors.reserve(observations.size());
    out.posterior.reserve(observations.size());
    Vec x = observations.front();
    double p = cfg.measurement_noise;
    for (const auto& z : observations) {
        if (z.size() != n) throw LengthMismatchError("observation length changed mid-sequence");
        const double pp = p + cfg.process_noise;
        const double k = pp / (pp + cfg.measurement_noise);
        Vec e(2 * n);
        e.head(n) = x;
        e.tail(n) = z - x;
        x += k * (z - x);
        p = (1.0 - k) * pp;
        out.errors.push_back(std::move(e));
        out.posterior.push_back(x);
    }
    return out;
}

// ---------------------------------------------------------------------- GNG

void GngConfig::validate() const {
    if (max_nodes < 2) throw ConfigError("GNG needs max_nodes >= 2");
    if (!(eps_n > 0.0 && eps_n < eps_b && eps_b < 1.0)) throw ConfigError("GNG needs 0 < eps_n < eps_b < 1");
    if (age_max < 1 || insert_interval < 1 || epochs < 1) throw ConfigError("GNG integer settings must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0) || !(decay > 0.0 && decay <= 1.0))
        throw ConfigError("GNG error factors must lie in (0, 1]");
}

Mat gng_feature_matrix(const std::vector<Vec>& samples, GngFeatures features) {
    if (samples.empty()) return Mat(0, 0);
    const auto full = samples.front().size();
    const auto dim = features == GngFeatures::FULL ? full : full / 2;
    Mat m(dim, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = samples[i].head(dim);
    return m;
}

namespace {

// Sorted unique columns. Presenting each distinct sample once per epoch makes
// the result independent of exact duplicates in the input.
Mat unique_columns(const Mat& s) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(s.cols()));
    std::iota(idx.begin(), idx.end(), 0);
    const auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            if (s(r, a) < s(r, b)) return true;
            if (s(r, b) < s(r, a)) return false;
        }
        return false;
    };
    std::sort(idx.begin(), idx.end(), less);
    std::vector<Eigen::Index> keep;
    for (auto i : idx)
        if (keep.empty() || less(keep.back(), i)) keep.push_back(i);
    Mat u(s.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) u.col(static_cast<Eigen::Index>(k)) = s.col(keep[k]);
    return u;
}

struct GngState {
    std::vector<Vec> w;
    std::vector<double> err;
    std::vector<std::vector<int>> age;  // -1 means no edge

    int size() const { return static_cast<int>(w.size()); }

    void add(const Vec& v, double e) {
        w.push_back(v);
        err.push_back(e);
        for (auto& row : age) row.push_back(-1);
        age.emplace_back(w.size(), -1);
    }

    void connect(int a, int b) { age[a][b] = age[b][a] = 0; }
    void disconnect(int a, int b) { age[a][b] = age[b][a] = -1; }

    bool has_edges(int a) const {
        return std::any_of(age[a].begin(), age[a].end(), [](int v) { return v >= 0; });
    }

    void remove(int a) {
        w.erase(w.begin() + a);
        err.erase(err.begin() + a);
        age.erase(age.begin() + a);
        for (auto& row : age) row.erase(row.begin() + a);
    }
};

}  // namespace

Mat gng_train(const Mat& samples, const GngConfig& cfg) {
    cfg.validate();
    if (samples.cols() < 2) throw EmptyInputError("GNG needs at least two samples");
    const Mat data = unique_columns(samples);
    const auto n = data.cols();
    auto rng = make_rng(cfg.seed, 0x9e3779b9ULL);

    GngState g;
    if (n == 1) {
        g.add(data.col(0), 0.0);
    } else {
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        const auto a = pick(rng);
        auto b = pick(rng);
        while (b == a) b = pick(rng);
        g.add(data.col(a), 0.0);
        g.add(data.col(b), 0.0);
        g.connect(0, 1);
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (auto idx : order) {
            if (g.size() < 2) break;
            const Vec x = data.col(idx);
            int s1 = -1, s2 = -1;
            double d1 = 0.0, d2 = 0.0;
            for (int k = 0; k < g.size(); ++k) {
                const double dk = (x - g.w[k]).squaredNorm();
                if (s1 < 0 || dk < d1) {
                    s2 = s1;
                    d2 = d1;
                    s1 = k;
                    d1 = dk;
                } else if (s2 < 0 || dk < d2) {
                    s2 = k;
                    d2 = dk;
                }
            }
            for (int k = 0; k < g.size(); ++k)
                if (g.age[s1][k] >= 0) {
                    ++g.age[s1][k];
                    g.age[k][s1] = g.age[s1][k];
                }
            g.err[s1] += d1;
            g.w[s1] += cfg.eps_b * (x - g.w[s1]);
            for (int k = 0; k < g.size(); ++k)
                if (g.age[s1][k] >= 0) g.w[k] += cfg.eps_n * (x - g.w[k]);
            g.connect(s1, s2);
            for (int a = 0; a < g.size(); ++a)
                for (int b = a + 1; b < g.size(); ++b)
                    if (g.age[a][b] > cfg.age_max) g.disconnect(a, b);
            for (int k = g.size() - 1; k >= 0 && g.size() > 2; --k)
                if (!g.has_edges(k)) g.remove(k);

            ++step;
            if (step % cfg.insert_interval == 0 && g.size() < cfg.max_nodes) {
                int q = 0;
                for (int k = 1; k < g.size(); ++k)
                    if (g.err[k] > g.err[q]) q = k;
                int f = -1;
                for (int k = 0; k < g.size(); ++k)
                    if (g.age[q][k] >= 0 && (f < 0 || g.err[k] > g.err[f])) f = k;
                if (f >= 0) {
                    g.add(0.5 * (g.w[q] + g.w[f]), 0.0);
                    const int r = g.size() - 1;
                    g.disconnect(q, f);
                    g.connect(q, r);
                    g.connect(r, f);
                    g.err[q] *= cfg.alpha;
                    g.err[f] *= cfg.alpha;
                    g.err[r] = g.err[q];
                }
            }
            for (auto& e : g.err) e *= cfg.decay;
        }
    }

    Mat nodes(data.rows(), g.size());
    for (int k = 0; k < g.size(); ++k) nodes.col(k) = g.w[k];
    return nodes;
}

std::vector<int> assign_labels(const Mat& samples, const Mat& nodes) {
    if (nodes.cols() == 0) throw EmptyInputError("assign_labels needs at least one node");
    if (samples.rows() != nodes.rows()) throw std::invalid_argument("assign_labels: feature dimension mismatch");
    std::vector<int> labels(static_cast<std::size_t>(samples.cols()));
    for (Eigen::Index i = 0; i < samples.cols(); ++i) {
        Eigen::Index best = 0;
        (nodes.colwise() - samples.col(i)).colwise().squaredNorm().minCoeff(&best);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

namespace {

Mat ridge_covariance(const Mat& scatter_unbiased) {
    const auto n = scatter_unbiased.rows();
    const double scale = std::max(1.0, scatter_unbiased.trace() / static_cast<double>(n));
    Mat c = 0.5 * (scatter_unbiased + scatter_unbiased.transpose());
    c.diagonal().array() += kRidgeEpsilon * scale;
    return c;
}

Gauss sample_gaussian(const std::vector<const Vec*>& members, Eigen::Index dim) {
    Vec mean = Vec::Zero(dim);
    for (const auto* v : members) mean += *v;
    mean /= static_cast<double>(members.size());
    Mat scatter = Mat::Zero(dim, dim);
    for (const auto* v : members) {
        const Vec c = *v - mean;
        scatter.noalias() += c * c.transpose();
    }
    if (members.size() > 1) scatter /= static_cast<double>(members.size() - 1);
    return {mean, ridge_covariance(scatter)};
}

}  // namespace

std::vector<Superstate> superstate_statistics(const std::vector<Vec>& samples, const std::vector<int>& labels,
                                              int n_nodes, const Mat* node_features) {
    if (samples.size() != labels.size()) throw LengthMismatchError("one label per sample is required");
    if (samples.empty()) throw EmptyInputError("superstate_statistics needs samples");
    const auto dim = samples.front().size();
    std::vector<std::vector<const Vec*>> members(static_cast<std::size_t>(n_nodes));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int l = labels[i];
        if (l < 0 || l >= n_nodes) throw std::out_of_range("label outside the node range");
        members[static_cast<std::size_t>(l)].push_back(&samples[i]);
    }
    std::vector<Superstate> out(static_cast<std::size_t>(n_nodes));
    for (int m = 0; m < n_nodes; ++m) {
        auto& s = out[static_cast<std::size_t>(m)];
        s.id = m;
        const auto& mem = members[static_cast<std::size_t>(m)];
        s.count = static_cast<int>(mem.size());
        if (mem.empty()) {
            s.empty = true;
            s.mean = Vec::Zero(dim);
            if (node_features) s.mean.head(node_features->rows()) = node_features->col(m);
            s.cov = kRidgeEpsilon * Mat::Identity(dim, dim);
            continue;
        }
        auto g = sample_gaussian(mem, dim);
        s.mean = std::move(g.mean);
        s.cov = std::move(g.cov);
    }
    return out;
}

// ---------------------------------------------------------------- transitions

TransitionCounts count_transitions(const std::vector<std::vector<int>>& seqs, int n_states, int tau_max) {
    if (tau_max < 1) throw ConfigError("tau_max must be >= 1");
    TransitionCounts tc;
    tc.counts = Mat::Zero(n_states, n_states);
    tc.tau_counts.assign(static_cast<std::size_t>(tau_max), Mat::Zero(n_states, n_states));
    for (const auto& labels : seqs) {
        int tau = 1;
        for (std::size_t t = 0; t + 1 < labels.size(); ++t) {
            const int i = labels[t];
            const int j = labels[t + 1];
            if (i < 0 || j < 0 || i >= n_states || j >= n_states) throw std::out_of_range("label outside state range");
            tc.counts(i, j) += 1.0;
            tc.tau_counts[static_cast<std::size_t>(std::min(tau, tau_max) - 1)](i, j) += 1.0;
            tau = (i == j) ? tau + 1 : 1;
        }
    }
    return tc;
}

Mat normalise_counts(const Mat& counts, double eps) {
    Mat p(counts.rows(), counts.cols());
    const double m = static_cast<double>(counts.cols());
    for (Eigen::Index i = 0; i < counts.rows(); ++i) {
        const double n = counts.row(i).sum();
        p.row(i) = (counts.row(i).array() + eps) / (n + m * eps);
    }
    return p;
}

namespace {

std::vector<Mat> slices_from_counts(const TransitionCounts& tc, const Mat& pi) {
    std::vector<Mat> out;
    for (const auto& c : tc.tau_counts) {
        Mat s = normalise_counts(c);
        // A dwell bucket with no data for a row reuses the plain transition row.
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            if (c.row(i).sum() == 0.0) s.row(i) = pi.row(i);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

Mat estimate_transition_matrix(const std::vector<int>& labels, int n_states) {
    if (labels.size() < 2 && n_states > 1) throw EmptyInputError("transition estimation needs at least two labels");
    return normalise_counts(count_transitions({labels}, n_states, 1).counts);
}

std::vector<Mat> estimate_time_varying(const std::vector<int>& labels, int n_states, int tau_max) {
    const auto tc = count_transitions({labels}, n_states, tau_max);
    return slices_from_counts(tc, normalise_counts(tc.counts));
}

void conditional_statistics(const std::vector<std::vector<Vec>>& sample_sequences,
                            const std::vector<std::vector<int>>& label_sequences, std::vector<Superstate>& nodes) {
    if (sample_sequences.size() != label_sequences.size())
        throw LengthMismatchError("one label sequence per sample sequence is required");
    std::map<std::pair<int, int>, std::vector<const Vec*>> groups;  // (m, j)
    for (std::size_t s = 0; s < sample_sequences.size(); ++s) {
        const auto& xs = sample_sequences[s];
        const auto& ls = label_sequences[s];
        if (xs.size() != ls.size()) throw LengthMismatchError("one label per sample is required");
        for (std::size_t t = 0; t < xs.size(); ++t) {
            const int m = ls[t];
            const int j = t == 0 ? m : ls[t - 1];
            groups[{m, j}].push_back(&xs[t]);
        }
    }
    for (auto& n : nodes) {
        n.conditional.clear();
        n.conditional_count.clear();
    }
    for (const auto& [key, members] : groups) {
        auto& node = nodes.at(static_cast<std::size_t>(key.first));
        node.conditional[key.second] = sample_gaussian(members, members.front()->size());
        node.conditional_count[key.second] = static_cast<int>(members.size());
    }
}

// ------------------------------------------------------------ learn pipeline

Vocabulary learn_vocabulary(const std::vector<std::vector<Vec>>& sequences, int d, const std::string& tag,
                            const VocabularyOptions& opts) {
    if (sequences.empty()) throw EmptyInputError("learn_vocabulary needs at least one sequence");
    std::vector<std::vector<Vec>> samples;
    for (const auto& seq : sequences) {
        if (seq.empty()) continue;
        for (const auto& z : seq)
            if (z.size() != 4 * d) throw LengthMismatchError("observation length differs from 4d");
        samples.push_back(opts.bootstrap_with_ukf ? ukf_bootstrap(seq, opts.ukf).posterior : seq);
    }
    std::vector<Vec> flat;
    for (const auto& s : samples) flat.insert(flat.end(), s.begin(), s.end());
    if (flat.size() < 2) throw EmptyInputError("learn_vocabulary needs at least two samples");

    const Mat features = gng_feature_matrix(flat, opts.gng.features);
    const Mat nodes = gng_train(features, opts.gng);
    const auto flat_labels = assign_labels(features, nodes);

    std::vector<std::vector<int>> labels;
    std::size_t off = 0;
    for (const auto& s : samples) {
        labels.emplace_back(flat_labels.begin() + static_cast<std::ptrdiff_t>(off),
                            flat_labels.begin() + static_cast<std::ptrdiff_t>(off + s.size()));
        off += s.size();
    }

    Vocabulary v;
    v.tag = tag;
    v.d = d;
    const int m = static_cast<int>(nodes.cols());
    v.nodes = superstate_statistics(flat, flat_labels, m, &nodes);
    conditional_statistics(samples, labels, v.nodes);
    const auto tc = count_transitions(labels, m, opts.tau_max);
    v.pi = normalise_counts(tc.counts);
    v.pi_tau = slices_from_counts(tc, v.pi);

    // Observation noise: spread of the raw observations around the
    // conditional superstate means (the model's best explanation).
    Vec acc = Vec::Zero(4 * d);
    double count = 0.0;
    for (std::size_t s = 0, k = 0; s < sequences.size(); ++s) {
        if (sequences[s].empty()) continue;
        const auto& ls = labels[k++];
        for (std::size_t t = 0; t < ls.size(); ++t) {
            const int j = t == 0 ? ls[t] : ls[t - 1];
            const Vec r = sequences[s][t] - v.conditional(ls[t], j).mean;
            acc += r.cwiseProduct(r);
            count += 1.0;
        }
    }
    v.r_diag = (acc / std::max(1.0, count - 1.0)).cwiseMax(kRidgeEpsilon);
    if (!opts.conditional)
        for (auto& n : v.nodes) {
            n.conditional.clear();
            n.conditional_count.clear();
        }
    v.validate();
    return v;
}

}  // namespace jamaware
