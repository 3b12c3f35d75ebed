#pragma once

#include "jamaware/abnormality.hpp"
#include "jamaware/vocab.hpp"

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace jamaware {

struct Particle {
    int superstate = 0;
    int previous = 0;  // superstate before the latest proposal
    int dwell = 1;
    double weight = 1.0;
    Vec mean;
    // Covariances are shared between particles that carry identical filter
    // histories; the Kalman covariance recursion does not depend on the data.
    std::shared_ptr<const Mat> cov;
};

struct BeliefState {
    std::vector<Particle> particles;
    int t = 0;
    bool predicted = false;
    bool weights_reset = false;  // set when an update left every weight at zero
};

struct FilterOptions {
    int n_particles = 50;
    // Prediction uses statistics of superstate m entered from j when set, and
    // a particle's weight then follows the distance to that conditional
    // Gaussian instead of the unconditional superstate.
    bool use_conditional = false;
    double resample_fraction = 0.5;
    std::uint64_t seed = 1;
    // Added to every control vector; removing it restores the plain model.
    std::optional<Vec> control_overlay;
    // Replaces the vocabulary's observation noise when set.
    std::optional<Vec> r_diag;
};

struct StepOutput {
    int t = 0;
    Vec pi_S;            // occupancy of proposed superstates (prior weights)
    Vec prev_occupancy;  // occupancy before the proposal, used by KLDA
    Vec lambda_S;
    Gauss pi_X;
    Gauss lambda_X;
    int winner = 0;  // superstate of the winning particle
    int winner_index = 0;
    Vec posterior_mean;  // winning particle after the Kalman update
    double ess = 0.0;
    bool resampled = false;
    AbnormalitySnapshot abnormality;
    GeneralizedErrors errors;
};

void sir_resample(BeliefState& belief, Rng& rng);
double effective_sample_size(const BeliefState& belief);

// Markov jump particle filter over a learned vocabulary.
class Mmjpf {
public:
    Mmjpf(const Vocabulary& vocab, FilterOptions opts = {});

    const Vocabulary& vocabulary() const { return *vocab_; }
    const FilterOptions& options() const { return opts_; }
    const BeliefState& belief() const { return belief_; }
    BeliefState& belief() { return belief_; }
    const Mat& R() const { return R_; }
    Rng& rng() { return rng_; }

    void init(const Vec& first_obs);
    void predict();
    StepOutput update(const Vec& obs);
    // predict -> update -> abnormality -> resample. Requires init().
    StepOutput step(const Vec& obs);
    // As step(), but when the CLA exceeds reject_above the update is undone
    // and the particles keep their predicted Gaussians.
    StepOutput step_gated(const Vec& obs, double reject_above);
    bool initialised() const { return !belief_.particles.empty(); }

    // Filtering everything in one go; the first observation only initialises.
    std::vector<StepOutput> run(const std::vector<Vec>& observations);

    // Diagnostic message over superstates for an observation.
    Vec lambda_superstates(const Vec& obs) const;

private:
    const Mat& sigma_w(int m, int j) const;
    Vec control(int m, int j) const;

    std::shared_ptr<const Vocabulary> vocab_;
    FilterOptions opts_;
    Mat R_;
    std::vector<FixedBhattacharyya> node_bc_;
    std::map<std::pair<int, int>, FixedBhattacharyya> cond_bc_;  // (m, j) when conditional
    std::vector<Gauss> node_gauss_;
    BeliefState belief_;
    Rng rng_;
    Vec prior_weights_;
    Vec prev_occupancy_;
    std::vector<std::shared_ptr<const Mat>> pred_cov_;
};

void write_trace_csv(std::ostream& out, const std::vector<StepOutput>& trace);
void write_trace_csv(const std::string& path, const std::vector<StepOutput>& trace);

}  // namespace jamaware
