#include "jamaware/jammer_ops.hpp"

#include <algorithm>
#include <cmath>

namespace jamaware {

std::vector<int> attack_steps(const std::vector<StepOutput>& trace, double eta) {
    std::vector<int> out;
    for (std::size_t k = 0; k < trace.size(); ++k)
        if (trace[k].abnormality.cla > eta) out.push_back(static_cast<int>(k));
    return out;
}

CharacterizationLog characterize_discrete(const std::vector<StepOutput>& trace, const std::vector<int>& steps) {
    if (steps.empty()) throw EmptyInputError("nothing to characterize");
    CharacterizationLog log;
    for (int k : steps) {
        const auto& s = trace.at(static_cast<std::size_t>(k));
        const int p = static_cast<int>(argmax_lowest(s.pi_S));
        const int l = static_cast<int>(argmax_lowest(s.lambda_S));
        log.steps.push_back(k);
        log.s_pi.push_back(p);
        log.s_lambda.push_back(l);
        ++log.shift_map[{p, l}];
    }
    return log;
}

namespace {

Vec quantise(const Vec& v, double grid) { return (v / grid).array().round().matrix() * grid; }

}  // namespace

void characterize_continuous(const std::vector<StepOutput>& trace, CharacterizationLog& log, double grid) {
    if (log.steps.empty()) throw EmptyInputError("nothing to characterize");
    if (!(grid > 0.0)) throw ConfigError("vote grid must be positive");
    log.grid = grid;
    log.branch.clear();
    log.votes.clear();
    std::vector<Vec> values;
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
        const auto k = static_cast<std::size_t>(log.steps[i]);
        const auto& s = trace.at(k);
        // eps_X2 already carries both branches: obs - mu(lambda) when the
        // prediction held, mu(lambda) - mu(pi) otherwise.
        const Vec& dval = s.errors.eps_X2;
        log.branch.push_back(log.s_pi[i] == log.s_lambda[i] ? 1 : 2);
        const Vec q = quantise(dval, grid);
        values.push_back(q);
        auto it = std::find_if(log.votes.begin(), log.votes.end(),
                               [&](const VoteEntry& e) { return e.predicted == log.s_pi[i] && e.value == q; });
        if (it == log.votes.end())
            log.votes.push_back({q, 1, log.s_pi[i]});
        else
            ++it->votes;
    }

    // The force is read from steps where the prediction held: a shift
    // between superstates contributes the difference of two superstate means,
    // which describes the nominal dynamics rather than an added force. With no
    // such step every value votes.
    std::vector<const Vec*> voters;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (log.branch[i] == 1) voters.push_back(&values[i]);
    if (voters.empty())
        for (const auto& v : values) voters.push_back(&v);

    // Whole 4d vectors almost never repeat under noise, so the majority is
    // taken per coordinate; ties go to the value seen first.
    const auto dim = values.front().size();
    log.d_vote.resize(dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
        std::vector<std::pair<long, int>> tally;  // (grid index, count) in order of first appearance
        for (const Vec* vp : voters) {
            const Vec& v = *vp;
            const long key = std::lround(v[c] / grid);
            auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& e) { return e.first == key; });
            if (it == tally.end())
                tally.emplace_back(key, 1);
            else
                ++it->second;
        }
        auto best = tally.begin();
        for (auto it = tally.begin(); it != tally.end(); ++it)
            if (it->second > best->second) best = it;
        log.d_vote[c] = static_cast<double>(best->first) * grid;
    }
    log.u_jammer = log.d_vote.tail(dim / 2);
}

nlohmann::json characterization_to_json(const CharacterizationLog& log) {
    nlohmann::json j;
    j["steps"] = log.steps;
    j["s_pi"] = log.s_pi;
    j["s_lambda"] = log.s_lambda;
    j["branch"] = log.branch;
    auto shifts = nlohmann::json::array();
    for (const auto& [k, c] : log.shift_map) shifts.push_back({{"from", k.first}, {"to", k.second}, {"count", c}});
    j["shift_map"] = shifts;
    auto votes = nlohmann::json::array();
    for (const auto& v : log.votes)
        votes.push_back({{"value", std::vector<double>(v.value.data(), v.value.data() + v.value.size())},
                         {"votes", v.votes},
                         {"predicted", v.predicted}});
    j["votes"] = votes;
    j["d_vote"] = std::vector<double>(log.d_vote.data(), log.d_vote.data() + log.d_vote.size());
    j["u_jammer"] = std::vector<double>(log.u_jammer.data(), log.u_jammer.data() + log.u_jammer.size());
    j["grid"] = log.grid;
    return j;
}

std::vector<Vec> extract_jammer(const std::vector<StepOutput>& trace, const Vec& w_hat) {
    std::vector<Vec> out;
    out.reserve(trace.size());
    for (const auto& s : trace) {
        if (w_hat.size() != 0 && w_hat.size() != s.errors.eps_Z2.size())
            throw LengthMismatchError("noise estimate length differs from the observation length");
        out.push_back(w_hat.size() ? Vec(s.errors.eps_Z2 - w_hat) : s.errors.eps_Z2);
    }
    return out;
}

std::vector<Vec> suppress(const std::vector<Vec>& observations, const std::vector<Vec>& j_hat) {
    if (observations.size() != j_hat.size()) throw LengthMismatchError("suppress: stream lengths differ");
    std::vector<Vec> out(observations.size());
    for (std::size_t t = 0; t < observations.size(); ++t) {
        if (observations[t].size() != j_hat[t].size()) throw LengthMismatchError("suppress: vector lengths differ");
        out[t] = observations[t] - j_hat[t];
    }
    return out;
}

Eigen::MatrixXcd suppress(const Eigen::MatrixXcd& grid, const Eigen::MatrixXcd& j_hat) {
    if (grid.rows() != j_hat.rows() || grid.cols() != j_hat.cols())
        throw LengthMismatchError("suppress: grid shapes differ");
    return grid - j_hat;
}

Mat update_transition_matrix(const Mat& pi, const std::vector<StepOutput>& trace, const std::vector<int>& steps) {
    const auto m = pi.rows();
    Mat acc = Mat::Zero(m, m);
    std::vector<int> touched(static_cast<std::size_t>(m), 0);
    for (int k : steps) {
        const auto& s = trace.at(static_cast<std::size_t>(k));
        if (s.errors.eps_S.size() != m) throw LengthMismatchError("eps_S length differs from the superstate count");
        // The row that produced the prediction belongs to the superstate the
        // ensemble occupied before the proposal.
        const auto w = static_cast<Eigen::Index>(argmax_lowest(s.prev_occupancy));
        acc.row(w) += pi.row(w) + s.errors.eps_S.transpose();
        ++touched[static_cast<std::size_t>(w)];
    }
    Mat out = pi;
    for (Eigen::Index i = 0; i < m; ++i) {
        const int n = touched[static_cast<std::size_t>(i)];
        if (n == 0) continue;
        Vec row = (acc.row(i) / static_cast<double>(n)).transpose().cwiseMax(0.0);
        const double s = row.sum();
        if (s > 0.0) out.row(i) = (row / s).transpose();
    }
    return out;
}

FilterOptions update_dynamic_model(const FilterOptions& base, const Vec& u_jammer) {
    FilterOptions out = base;
    out.control_overlay = base.control_overlay ? Vec(*base.control_overlay + u_jammer) : u_jammer;
    return out;
}

FilterOptions remove_dynamic_update(const FilterOptions& updated) {
    FilterOptions out = updated;
    out.control_overlay.reset();
    return out;
}

std::vector<int> switch_models(const std::vector<StepOutput>& reference, const std::vector<StepOutput>& updated) {
    if (reference.size() != updated.size()) throw LengthMismatchError("switch_models: traces differ in length");
    std::vector<int> out(reference.size());
    for (std::size_t k = 0; k < reference.size(); ++k)
        out[k] = updated[k].abnormality.cla < reference[k].abnormality.cla ? 1 : 0;
    return out;
}

}  // namespace jamaware
