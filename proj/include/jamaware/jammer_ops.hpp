#pragma once

#include "jamaware/gdbn.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace jamaware {

struct VoteEntry {
    Vec value;  // quantised D vector
    int votes = 0;
    int predicted = 0;  // superstate predicted when the value was cast
};

struct CharacterizationLog {
    std::vector<int> steps;  // indices into the trace
    std::vector<int> s_pi;
    std::vector<int> s_lambda;
    std::map<std::pair<int, int>, int> shift_map;  // (predicted, observed) -> count
    std::vector<int> branch;                       // 1: predicted == observed, 2: shift
    std::vector<VoteEntry> votes;                  // in order of first appearance
    Vec d_vote;                                    // per-coordinate majority of the quantised D values
    Vec u_jammer;                                  // derivative block of d_vote
    double grid = 0.1;
};

// Trace indices whose CLA exceeds eta.
std::vector<int> attack_steps(const std::vector<StepOutput>& trace, double eta);

CharacterizationLog characterize_discrete(const std::vector<StepOutput>& trace, const std::vector<int>& steps);
// D per step: observation minus the observed superstate's mean when the
// prediction held, otherwise the observed mean minus the predicted mean.
void characterize_continuous(const std::vector<StepOutput>& trace, CharacterizationLog& log, double grid = 0.1);

nlohmann::json characterization_to_json(const CharacterizationLog& log);

// Per trace step: eps_Z2 - w_hat. observations[k + 1] pairs with trace[k].
std::vector<Vec> extract_jammer(const std::vector<StepOutput>& trace, const Vec& w_hat);

std::vector<Vec> suppress(const std::vector<Vec>& observations, const std::vector<Vec>& j_hat);
Eigen::MatrixXcd suppress(const Eigen::MatrixXcd& grid, const Eigen::MatrixXcd& j_hat);

// Row-wise average of (row + eps_S) over the attacked steps that touched it.
Mat update_transition_matrix(const Mat& pi, const std::vector<StepOutput>& trace, const std::vector<int>& steps);

// Adds the jammer force to every control vector as a removable overlay.
FilterOptions update_dynamic_model(const FilterOptions& base, const Vec& u_jammer);
FilterOptions remove_dynamic_update(const FilterOptions& updated);

// 0 = reference, 1 = updated; lower CLA wins, ties go to the reference.
std::vector<int> switch_models(const std::vector<StepOutput>& reference, const std::vector<StepOutput>& updated);

}  // namespace jamaware
