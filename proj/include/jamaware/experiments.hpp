#pragma once

#include "jamaware/active_inference.hpp"
#include "jamaware/gdbn.hpp"
#include "jamaware/radio_env.hpp"

#include <json.hpp>
#include <string>
#include <vector>

namespace jamaware {

enum class ExperimentKind { DETECT, ROC, SUPPRESS, CHARACTERIZE, CLASSIFY, CONVERT, AMC, ANTIJAM, KERNELS, FUZZ, CALIBRATE };

std::string kind_name(ExperimentKind kind);
// Case-insensitive; throws ConfigError on an unknown name.
ExperimentKind kind_from_name(const std::string& name);
// Every kind that produces measurements (CALIBRATE only fits a model).
const std::vector<ExperimentKind>& measured_kinds();

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::DETECT;
    ScenarioConfig scenario;
    std::vector<double> snr_db;
    std::vector<double> jsr_db;
    std::vector<int> L;                    // nodes per jammer model (CLASSIFY)
    std::vector<double> bandwidth_mhz;     // sets the PRB count (ANTIJAM)
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int vocab_nodes = 8;                   // reference vocabulary size
    int n_particles = 50;
    bool quick = false;                    // short streams for smoke and determinism runs
    EpisodeConfig episode;                 // ANTIJAM only; seed, SNR, JSR and PRB count come from the sweep

    void validate() const;
};

// Defaults for a kind: the sweep axes and scenario it is normally run on.
ExperimentSpec default_spec(ExperimentKind kind, bool quick = false);

struct Artifact {
    std::string name;  // relative path, '/' separated
    std::string content;
};

struct ExperimentResult {
    ExperimentKind kind = ExperimentKind::DETECT;
    nlohmann::json summary;
    std::vector<Artifact> artifacts;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Clean-trained vocabulary with thresholds from an independent clean run.
struct ReferenceModel {
    Vocabulary vocab;
    CalibrationStats calibration;
    Vec w_hat;  // mean clean residual eps_Z2, the noise estimate used by suppression
};

ReferenceModel build_reference(const ScenarioConfig& base, std::uint64_t train_seed, std::uint64_t calibration_seed,
                               int vocab_nodes, int n_particles = 50);

// PRB count of an LTE channel bandwidth in MHz.
int prbs_for_bandwidth(double mhz);

}  // namespace jamaware
