#pragma once

#include "jamaware/core.hpp"

#include <map>
#include <json.hpp>
#include <string>
#include <vector>

namespace jamaware {

inline constexpr int kVocabularySchemaVersion = 1;
inline constexpr double kLaplaceEpsilon = 1e-6;
inline constexpr double kRidgeEpsilon = 1e-6;
inline constexpr int kDefaultTauMax = 20;

struct Superstate {
    int id = 0;
    Vec mean;  // state block followed by derivative block
    Mat cov;
    std::map<int, Gauss> conditional;  // keyed by predecessor id
    std::map<int, int> conditional_count;
    int count = 0;
    bool empty = false;  // no training sample landed here; statistics are a fallback
};

struct Vocabulary {
    int schema_version = kVocabularySchemaVersion;
    std::string tag = "REFERENCE";
    int d = 1;
    std::vector<Superstate> nodes;
    Mat pi;
    std::vector<Mat> pi_tau;  // slice k holds dwell tau = k + 1; the last slice is open-ended
    Vec r_diag;               // observation-noise variances (clean-training residual)

    int size() const { return static_cast<int>(nodes.size()); }
    int tau_max() const { return static_cast<int>(pi_tau.size()); }
    Mat R() const { return r_diag.asDiagonal(); }
    Gauss gaussian(int m) const { return {nodes.at(static_cast<std::size_t>(m)).mean, nodes.at(static_cast<std::size_t>(m)).cov}; }
    // Superstate m entered from j; unconditional statistics when the pair was never seen.
    Gauss conditional(int m, int j) const;
    // Control vector: derivative block of the superstate mean.
    Vec control(int m) const;
    const Mat& transition_slice(int tau) const;
    void validate() const;
};

void to_json(nlohmann::json& j, const Vocabulary& v);
void from_json(const nlohmann::json& j, Vocabulary& v);
std::string serialize_vocabulary(const Vocabulary& v);
Vocabulary parse_vocabulary(const std::string& text);
void save_vocabulary(const std::string& path, const Vocabulary& v);
Vocabulary load_vocabulary(const std::string& path);

struct UkfConfig {
    double process_noise = 1.0;
    double measurement_noise = 0.01;
};

struct UkfOutput {
    // [predicted state, observation - predicted state] per step (length 8d).
    std::vector<Vec> errors;
    // Filtered generalized state per step (length 4d); the clustering input.
    std::vector<Vec> posterior;
};

UkfOutput ukf_bootstrap(const std::vector<Vec>& observations, const UkfConfig& cfg = {});

enum class GngFeatures { STATE_BLOCK, FULL };

struct GngConfig {
    int max_nodes = 4;
    double eps_b = 0.2;
    double eps_n = 0.006;
    int age_max = 50;
    int insert_interval = 100;
    double alpha = 0.5;
    double decay = 0.995;
    int epochs = 5;
    std::uint64_t seed = 11;
    GngFeatures features = GngFeatures::STATE_BLOCK;

    void validate() const;
};

// Feature vectors GNG sees for a given generalized sample.
Mat gng_feature_matrix(const std::vector<Vec>& samples, GngFeatures features);

// Returns node codebook vectors as columns.
Mat gng_train(const Mat& samples_by_column, const GngConfig& cfg);

std::vector<int> assign_labels(const Mat& samples_by_column, const Mat& nodes);

std::vector<Superstate> superstate_statistics(const std::vector<Vec>& samples, const std::vector<int>& labels,
                                              int n_nodes, const Mat* node_features = nullptr);

struct TransitionCounts {
    Mat counts;
    std::vector<Mat> tau_counts;
};

TransitionCounts count_transitions(const std::vector<std::vector<int>>& label_sequences, int n_states,
                                   int tau_max = kDefaultTauMax);
Mat estimate_transition_matrix(const std::vector<int>& labels, int n_states);
std::vector<Mat> estimate_time_varying(const std::vector<int>& labels, int n_states, int tau_max = kDefaultTauMax);
Mat normalise_counts(const Mat& counts, double eps = kLaplaceEpsilon);

// Fills the conditional maps. The first sample of every sequence counts as
// entering its own superstate.
void conditional_statistics(const std::vector<std::vector<Vec>>& sample_sequences,
                            const std::vector<std::vector<int>>& label_sequences, std::vector<Superstate>& nodes);

struct VocabularyOptions {
    GngConfig gng;
    UkfConfig ukf;
    int tau_max = kDefaultTauMax;
    bool bootstrap_with_ukf = true;  // false: cluster the given vectors directly
    bool conditional = true;
};

// Builds a vocabulary from one or more observation sequences.
Vocabulary learn_vocabulary(const std::vector<std::vector<Vec>>& sequences, int d, const std::string& tag,
                            const VocabularyOptions& opts);

}  // namespace jamaware
