#pragma once

#include "jamaware/core.hpp"

#include <array>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace jamaware {

enum class Modulation { BPSK, QPSK, PSK8, QAM16, PSK32, QAM64, QAM256 };

struct ModulationScheme {
    Modulation kind = Modulation::QPSK;

    int order() const;
    int bits_per_symbol() const;
    std::string name() const;
    bool operator==(const ModulationScheme&) const = default;

    static ModulationScheme from_name(const std::string& name);
};

// Constellation indexed by the integer value of the bit word it carries
// (first bit is the most significant). Unit average power.
const std::vector<cplx>& constellation(const ModulationScheme& scheme);

std::vector<cplx> modulate(const Bits& bits, const ModulationScheme& scheme);
// Hard decision, nearest point; equidistant points resolve to the lowest index.
Bits demodulate(const std::vector<cplx>& symbols, const ModulationScheme& scheme);
std::size_t demodulate_index(cplx symbol, const ModulationScheme& scheme);

struct ResourceGrid {
    Eigen::MatrixXcd samples;  // d sub-carriers x T symbol slots
    double subcarrier_spacing = 15e3;
    double slot_duration = 1.0 / 14e3;

    Eigen::Index subcarriers() const { return samples.rows(); }
    Eigen::Index slots() const { return samples.cols(); }
};

enum class PathLossModel { NONE, RMA_AV, CTU_AD };

struct CtuParams {
    double alpha = 3.04;
    double C = -23.29;
    double D = 4.14;
    double theta0 = -3.61;
    double eta0 = 20.70;
    double a = -0.41;
    double sigma_uav = 5.86;          // offset of the angle-dependent shadowing std
    double sigma_terrestrial = 8.52;  // only used when terrestrial_shadowing is set
    bool shadowing = true;
    bool terrestrial_shadowing = false;
};

struct ChannelConfig {
    double snr_db = 15.0;
    double jsr_db = 6.0;
    double carrier_freq_ghz = 2.0;
    double building_height = 5.0;
    PathLossModel pathloss = PathLossModel::NONE;
    CtuParams ctu;

    // Signal power is 1, so the AWGN power follows from the SNR.
    double noise_power() const { return std::pow(10.0, -snr_db / 10.0); }
    void validate() const;
};

enum class JammerPattern { CONSTANT, RANDOM, SWEEP, WINDOWED };
enum class JammerWaveform { SYMBOLS, DRIFT };

struct JammerStrategy {
    JammerPattern pattern = JammerPattern::WINDOWED;
    std::vector<int> target_prbs;  // empty means every unit
    std::vector<std::pair<int, int>> on_windows;
    double hit_rate = 0.4;
    std::uint64_t seed = 7;
    JammerWaveform waveform = JammerWaveform::SYMBOLS;
    // DRIFT only: per-step displacement added on every attacked cell, the
    // displacement restarting at zero at the beginning of each window.
    cplx drift_per_step{0.0, 0.0};
    bool enabled = true;

    void validate(int n_steps) const;
};

// Units attacked at time t out of n_units (sub-carriers or PRBs).
std::set<int> jammer_schedule(const JammerStrategy& strategy, int t, int n_units);
bool jammer_active_at(const JammerStrategy& strategy, int t);

struct Trajectory {
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector3i> commands;  // (pitch, yaw, roll) in {-1, 0, 1}
};

// Euler integration of velocity = k * command, 50 ms steps.
Trajectory integrate_trajectory(const std::vector<Eigen::Vector3i>& commands,
                                const Eigen::Vector3d& start = Eigen::Vector3d::Zero(),
                                double k = 1.0, double dt = 0.05);

double path_loss_rma_av(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const ChannelConfig& cfg);
double path_loss_ctu_ad(double d2d, std::pair<double, double> heights, const ChannelConfig& cfg, Rng& rng);
// Linear power gain from a path loss in dB (h = 1 / PL_linear).
inline double gain_from_path_loss_db(double pl_db) { return std::pow(10.0, -pl_db / 10.0); }

double sinr(double p_user, double p_jam, double gain_user, double gain_jam, bool jammer_present,
            double noise_power);

// Piecewise-constant command stream: a small alphabet of manoeuvres, each
// held for a random dwell and encoded as one symbol per sub-carrier.
struct CommandConfig {
    int n_words = 6;
    int dwell_min = 20;
    int dwell_max = 60;
};

struct ScenarioConfig {
    int n_subcarriers = 9;
    int n_steps = 600;
    ModulationScheme signal_scheme{Modulation::QPSK};
    ModulationScheme jammer_scheme{Modulation::QPSK};
    ChannelConfig channel;
    JammerStrategy jammer;
    CommandConfig commands;
    double bandwidth_mhz = 1.4;
    int n_prbs = 6;
    double velocity_gain = 1.0;
    Eigen::Vector3d uav_start{100.0, 0.0, 60.0};
    Eigen::Vector3d base_station{0.0, 0.0, 30.0};
    Eigen::Vector3d jammer_position{150.0, 80.0, 2.0};
    std::uint64_t seed = 1;

    void validate() const;
};

struct Scenario {
    ResourceGrid grid;              // received samples
    Eigen::MatrixXcd signal;        // transmitted command symbols (noiseless)
    Eigen::MatrixXcd jammer;        // jammer contribution as received
    Eigen::MatrixXcd noise;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> cell_labels;  // 1 = H1
    std::vector<std::uint8_t> step_labels;
    std::vector<int> command_words;
    Bits bits;  // payload bits, sub-carrier major within each slot
    Trajectory trajectory;

    ResourceGrid clean_grid() const;  // signal + noise, jammer removed
};

// Command-word table used by the scenario: (pitch, yaw, roll) per word.
std::vector<Eigen::Vector3i> command_alphabet(int n_words);
Bits command_word_bits(const Eigen::Vector3i& command, int n_bits);

Scenario synthesize_scenario(const ScenarioConfig& cfg);

// Column layout (I_1..I_d, Q_1..Q_d, dI_1..dI_d, dQ_1..dQ_d).
std::vector<Vec> build_generalized_observations(const ResourceGrid& grid);
std::vector<Vec> build_generalized_observations(const Eigen::MatrixXcd& samples);
Vec generalized_observation(const Eigen::VectorXcd& current, const Eigen::VectorXcd* previous);

void write_grid_csv(const std::string& path, const Scenario& scenario);

}  // namespace jamaware
