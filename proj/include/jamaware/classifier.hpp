#pragma once

#include "jamaware/gdbn.hpp"
#include "jamaware/radio_env.hpp"

#include <optional>
#include <vector>

namespace jamaware {

struct ModelBank {
    std::vector<Vocabulary> models;  // one jammer vocabulary per scheme
    std::vector<ModulationScheme> schemes;

    int size() const { return static_cast<int>(models.size()); }
    void validate() const;
};

// Sub-carrier n of a generalized observation: (I_n, Q_n, dI_n, dQ_n).
Vec cell_block(const Vec& z, int n, int d);
// One 4-vector sequence per sub-carrier, used to train single-cell jammer models.
std::vector<std::vector<Vec>> split_cells(const std::vector<Vec>& zs, int d);

struct JammerModelOptions {
    int n_nodes = 4;  // L
    GngConfig gng;
    int tau_max = kDefaultTauMax;
};

// Learns a single-cell vocabulary from extracted jammer evidence (eps_Z2 on
// attacked steps). Sub-carriers are pooled as separate sequences.
Vocabulary learn_jammer_model(const std::vector<Vec>& evidence, int d, const ModulationScheme& scheme,
                              const JammerModelOptions& opts = {});

struct AjcOptions {
    int n_particles = 50;
    std::uint64_t seed = 1;
    // Per-cell observation noise (4 entries). Defaults to each model's own.
    std::optional<Vec> r_diag;
};

struct AjcDecision {
    Vec omega;  // abnormality per model
    int khat = 0;
};

// Runs every jammer model of the bank on every sub-carrier in parallel; a
// model's abnormality is the CLA summed over sub-carriers.
class AjcBank {
public:
    AjcBank(const ModelBank& bank, int d, AjcOptions opts = {});

    // The first evidence vector initialises the filters and yields no decision.
    std::optional<AjcDecision> step(const Vec& evidence);
    int size() const { return static_cast<int>(filters_.size()); }

private:
    int d_;
    std::vector<std::vector<Mmjpf>> filters_;  // [model][cell]
};

struct ClassificationResult {
    std::vector<Vec> omega;
    std::vector<int> khat;
    int window_label = 0;
};

ClassificationResult classify_evidence(const ModelBank& bank, const std::vector<Vec>& evidence, int d,
                                       const AjcOptions& opts = {});

// Most frequent label; ties go to the lower index.
int majority_label(const std::vector<int>& labels, int n_classes);

}  // namespace jamaware
