#pragma once

#include "jamaware/gdbn.hpp"
#include "jamaware/radio_env.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace jamaware {

// Three tau-indexed stacks of N x N row-stochastic matrices. Slice k holds
// dwell tau = k + 1; the last slice is open-ended.
struct ActiveBeliefs {
    int n = 0;
    std::vector<Mat> P_u;   // agent transitions
    std::vector<Mat> P_j;   // believed jammer transitions
    std::vector<Mat> Pi_a;  // state -> action
    std::vector<Mat> u_counts;  // transition counts behind P_u

    int tau_max() const { return static_cast<int>(P_u.size()); }
    std::size_t slice(int tau) const;
    void validate() const;
};

ActiveBeliefs init_beliefs(int n, int tau_max = 4);

// score(a) = Pi_a[state, a] * (1 - P_j[jammer_row, a]); jammer_row < 0 means
// no collision seen yet, which leaves the second factor constant. Equal
// scores (within 1e-12) are broken uniformly at random.
int select_action(const ActiveBeliefs& beliefs, int state, int tau, int jammer_row, Rng& rng);

// Dirac gate: weight 1 on the selected PRB, 0 elsewhere.
Vec gate_weights(int n, int action);
Eigen::VectorXcd fuse_observations(const std::vector<Eigen::VectorXcd>& per_prb, int action);

struct Perception {
    double upsilon_S = 0.0;  // KLDA
    double upsilon_X = 0.0;  // CLA
    bool collision = false;
};

// M-MJPF perception on whatever PRB the agent listens to. Observations that
// exceed the threshold are not assimilated; after max_rejections in a row the
// filter is re-initialised on the current observation.
class Perceiver {
public:
    Perceiver(const Vocabulary& reference, double threshold, FilterOptions opts = {}, int max_rejections = 2);

    // First call initialises the filter and reports no collision.
    Perception perceive(const Eigen::VectorXcd& samples);

private:
    Mmjpf filter_;
    double threshold_;
    int max_rejections_;
    int rejections_ = 0;
    std::optional<Eigen::VectorXcd> last_accepted_;
};

struct BeliefUpdate {
    int state = 0;
    int action = 0;
    int tau = 1;
    bool collision = false;
    double upsilon = 0.0;
    double eta = 1.0;
    double gamma_max = 0.5;
};

// gamma* = gamma_max * min(1, upsilon / eta).
double gamma_star(double upsilon, double eta, double gamma_max);

// Counts the agent transition and, on a collision, moves Pi_a away from the
// action and the believed jammer row towards it. jammer_row is updated to the
// collided PRB.
void update_beliefs(ActiveBeliefs& beliefs, const BeliefUpdate& u, int& jammer_row);

enum class AgentKind { AIN, QL, FH };
const char* agent_name(AgentKind kind);

struct QlConfig {
    double learning_rate = 0.1;
    double discount = 0.9;
    double explore_fraction = 0.5;  // epsilon falls linearly from 1 to 0 over this share of the episode
};

struct EpisodeConfig {
    int n_prbs = 6;
    int steps = 2000;
    int d = 9;
    double snr_db = 15.0;
    double jsr_db = 6.0;
    JammerStrategy jammer{JammerPattern::CONSTANT, {}, {}, 0.4, 7};
    int tau_max = 4;
    double gamma_max = 0.5;
    QlConfig ql;
    int n_particles = 50;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpisodeStep {
    int t = 0;
    int action = 0;
    std::vector<int> jammed;
    bool collision = false;    // ground truth
    bool flagged = false;      // perceived
    int reward = 1;
    double abn_S = 0.0;
    double abn_X = 0.0;
    double sinr = 0.0;
};

struct EpisodeLog {
    AgentKind agent = AgentKind::AIN;
    double eta = 0.0;
    std::vector<EpisodeStep> steps;
    std::vector<double> cumulative_reward;
    // Running sum of (abn_X - eta): below-threshold steps lower it.
    std::vector<double> cumulative_abnormality;
    ActiveBeliefs beliefs;  // final AIN beliefs (empty for the baselines)

    double collision_rate(std::size_t first, std::size_t last) const;
};

// The PRBs hit by the jammer: CONSTANT with no explicit targets attacks
// round(JHR * N) PRBs drawn once from the jammer seed.
JammerStrategy resolve_episode_jammer(const EpisodeConfig& cfg);

EpisodeLog run_episode(const EpisodeConfig& cfg, AgentKind agent, const Vocabulary& reference, double eta);

void write_episode_csv(std::ostream& out, const EpisodeLog& log);
void write_episode_csv(const std::string& path, const EpisodeLog& log);

}  // namespace jamaware
