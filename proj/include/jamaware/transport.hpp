#pragma once

#include "jamaware/radio_env.hpp"
#include "jamaware/vocab.hpp"

#include <json.hpp>
#include <string>
#include <vector>

namespace jamaware {

// A vocabulary viewed as a directed graph weighted by its transition matrix.
struct VocabGraph {
    Mat weights;             // pi with self-loops removed and zero entries pruned
    bool connected = false;  // every vertex reachable from every other one
};

VocabGraph make_graph(const Vocabulary& vocab);

// Pairwise symmetric Gaussian KL, each row normalised to sum to one.
Mat matching_matrix(const Vocabulary& source, const Vocabulary& target);

// log2 N_T / log2 N_S, rejected unless it is an integer >= 1.
int retiming_factor(int n_source, int n_target);

// Index of a tuple of gamma source labels (first label most significant).
std::size_t tuple_index(const std::vector<int>& labels, std::size_t first, int gamma, int n_source);

// Joint firing of source-label tuples and target labels, row-normalised.
// source_labels carries gamma entries per target label. Rows that never
// fired are uniform.
Mat interaction_matrix(const std::vector<int>& source_labels, const std::vector<int>& target_labels, int n_source,
                       int n_target, int gamma);

struct TransportPair {
    int k = 0;  // source superstate
    int l = 0;  // target superstate
    Vec force;  // state-block mean difference mu_l - mu_k
    Mat cov;    // cross-covariance of paired state samples
    int count = 0;
};

struct TransportPlan {
    std::string source;
    std::string target;
    int gamma = 1;
    int n_source = 0;
    int n_target = 0;
    Mat M;  // n_source x n_target
    Mat J;  // n_source^gamma x n_target
    std::vector<TransportPair> pairs;
    std::vector<Vec> source_means;  // state blocks
    std::vector<Vec> target_means;
    std::vector<Mat> target_covs;

    // Target superstate for a tuple of source labels: the largest J entry,
    // ties broken by the smallest summed matching distance.
    int target_for(const std::vector<int>& labels, std::size_t first = 0) const;
    // Most likely source tuple given a target superstate (column argmax of J).
    std::vector<int> tuple_for(int target) const;
    Vec force(int k, int l) const;
};

struct PairedSamples {
    std::vector<int> source_labels;  // gamma per target step
    std::vector<int> target_labels;
    std::vector<Vec> source_states;  // state blocks, aligned with source_labels
    std::vector<Vec> target_states;  // aligned with target_labels
};

TransportPlan transport_plan(const Vocabulary& source, const Vocabulary& target, const PairedSamples& paired,
                             const std::string& source_name = "source", const std::string& target_name = "target");

// Plan mapping a vocabulary to itself with zero forces and gamma = 1.
TransportPlan identity_plan(const Vocabulary& vocab, const std::string& name = "identity");

// Converted target state for one block of gamma source steps: the mean of
// x_i + (mu_l - mu_{k_i}) with l chosen from the tuple of source labels.
Vec convert_block(const TransportPlan& plan, const std::vector<Vec>& source_states, const std::vector<int>& source_labels,
                  std::size_t first);

// Nearest superstate by the state block of the means.
std::vector<int> nearest_state_labels(const std::vector<Vec>& states, const std::vector<Vec>& means);
std::vector<Vec> state_means(const Vocabulary& vocab);

nlohmann::json plan_to_json(const TransportPlan& plan);

// Streams carrying the same bits through two modulations on one sub-carrier:
// the source symbol changes every step, the target symbol is held gamma
// steps.
struct ConversionStreams {
    Bits bits;
    std::vector<cplx> source_symbols;  // one per step, noiseless
    std::vector<cplx> target_symbols;  // one per block, noiseless
    std::vector<Vec> source_obs;       // generalized observations (d = 1), one per step
    std::vector<Vec> target_obs;       // one per step, the block symbol held
};

ConversionStreams make_conversion_streams(const ModulationScheme& source, const ModulationScheme& target,
                                          int n_target_symbols, double snr_db, bool noiseless, std::uint64_t seed);

// Single-stream evidence of one scheme at the source clock, each symbol held
// long enough to carry as many bits as gamma source symbols.
std::vector<Vec> make_held_stream(const ModulationScheme& scheme, int hold, int n_symbols, double snr_db,
                                  std::uint64_t seed);

// Vocabulary of one modulated stream with a node per constellation point.
Vocabulary learn_stream_vocabulary(const std::vector<Vec>& obs, int n_nodes, const std::string& tag,
                                   const GngConfig& gng = {});

struct ConversionResult {
    std::vector<cplx> converted;  // one per target block
    Bits bits;                    // demodulated with the target scheme
};

ConversionResult convert_stream(const TransportPlan& plan, const ModulationScheme& target,
                                const std::vector<Vec>& source_obs);

struct AmcResult {
    int t_cc = 0;
    std::vector<int> khat;     // per window
    std::vector<Vec> scores;   // per window, one entry per hypothesis
};

// Hypothesis 0 is the source model itself; plans[i] converts into the i-th
// further hypothesis. Evidence is a d = 1 generalized stream at the source
// clock, r_diag its observation noise.
AmcResult amc_classify(const std::vector<Vec>& evidence, const Vocabulary& source, const std::vector<TransportPlan>& plans,
                       const Vec& r_diag, int alpha = 2);

}  // namespace jamaware
