#include "jamaware/radio_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

namespace jamaware {

namespace {

unsigned gray(unsigned k) { return k ^ (k >> 1); }

unsigned gray_inverse(unsigned g) {
    unsigned k = 0;
    for (; g; g >>= 1) k ^= g;
    return k;
}

std::vector<cplx> build_psk(int m) {
    std::vector<cplx> pts(m);
    const double offset = (m == 8 || m == 32) ? std::numbers::pi / m : 0.0;
    for (int k = 0; k < m; ++k) {
        const double ang = 2.0 * std::numbers::pi * k / m + offset;
        pts[gray(static_cast<unsigned>(k))] = std::polar(1.0, ang);
    }
    return pts;
}

// Square QAM: the first half of the bit word selects the I level, the
// second half the Q level, each through a Gray-coded PAM ladder.
std::vector<cplx> build_square_qam(int m) {
    const int bits = static_cast<int>(std::lround(std::log2(m)));
    const int half = bits / 2;
    const int levels = 1 << half;
    const double norm = std::sqrt(2.0 * (levels * levels - 1) / 3.0);
    std::vector<cplx> pts(m);
    for (int v = 0; v < m; ++v) {
        const unsigned vi = static_cast<unsigned>(v) >> half;
        const unsigned vq = static_cast<unsigned>(v) & ((1u << half) - 1u);
        const double ai = 2.0 * gray_inverse(vi) - (levels - 1);
        const double aq = 2.0 * gray_inverse(vq) - (levels - 1);
        pts[v] = cplx(ai, aq) / norm;
    }
    return pts;
}

std::vector<cplx> build_constellation(Modulation kind) {
    switch (kind) {
        case Modulation::BPSK: return {cplx(-1.0, 0.0), cplx(1.0, 0.0)};
        case Modulation::QPSK: return build_square_qam(4);
        case Modulation::PSK8: return build_psk(8);
        case Modulation::QAM16: return build_square_qam(16);
        case Modulation::PSK32: return build_psk(32);
        case Modulation::QAM64: return build_square_qam(64);
        case Modulation::QAM256: return build_square_qam(256);
    }
    throw ConfigError("unknown modulation");
}

std::complex<double> complex_normal(Rng& rng, double variance) {
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

}  // namespace

int ModulationScheme::order() const {
    switch (kind) {
        case Modulation::BPSK: return 2;
        case Modulation::QPSK: return 4;
        case Modulation::PSK8: return 8;
        case Modulation::QAM16: return 16;
        case Modulation::PSK32: return 32;
        case Modulation::QAM64: return 64;
        case Modulation::QAM256: return 256;
    }
    return 0;
}

int ModulationScheme::bits_per_symbol() const {
    return static_cast<int>(std::lround(std::log2(order())));
}

std::string ModulationScheme::name() const {
    switch (kind) {
        case Modulation::BPSK: return "BPSK";
        case Modulation::QPSK: return "QPSK";
        case Modulation::PSK8: return "8PSK";
        case Modulation::QAM16: return "16QAM";
        case Modulation::PSK32: return "32PSK";
        case Modulation::QAM64: return "64QAM";
        case Modulation::QAM256: return "256QAM";
    }
    return "?";
}

ModulationScheme ModulationScheme::from_name(const std::string& name) {
    static const std::map<std::string, Modulation> table{
        {"BPSK", Modulation::BPSK},   {"QPSK", Modulation::QPSK},   {"8PSK", Modulation::PSK8},
        {"16QAM", Modulation::QAM16}, {"32PSK", Modulation::PSK32}, {"64QAM", Modulation::QAM64},
        {"256QAM", Modulation::QAM256}};
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown modulation scheme '" + name + "'");
    return ModulationScheme{it->second};
}

const std::vector<cplx>& constellation(const ModulationScheme& scheme) {
    static const std::array<std::vector<cplx>, 7> tables{
        build_constellation(Modulation::BPSK),  build_constellation(Modulation::QPSK),
        build_constellation(Modulation::PSK8),  build_constellation(Modulation::QAM16),
        build_constellation(Modulation::PSK32), build_constellation(Modulation::QAM64),
        build_constellation(Modulation::QAM256)};
    return tables[static_cast<std::size_t>(scheme.kind)];
}

std::vector<cplx> modulate(const Bits& bits, const ModulationScheme& scheme) {
    const int k = scheme.bits_per_symbol();
    if (bits.size() % static_cast<std::size_t>(k) != 0)
        throw LengthMismatchError("bit count " + std::to_string(bits.size()) +
                                  " not divisible by bits per symbol " + std::to_string(k));
    const auto& pts = constellation(scheme);
    std::vector<cplx> out;
    out.reserve(bits.size() / k);
    for (std::size_t i = 0; i < bits.size(); i += k) {
        unsigned v = 0;
        for (int b = 0; b < k; ++b) v = (v << 1) | (bits[i + b] & 1u);
        out.push_back(pts[v]);
    }
    return out;
}

std::size_t demodulate_index(cplx symbol, const ModulationScheme& scheme) {
    const auto& pts = constellation(scheme);
    std::size_t best = 0;
    double best_d = std::norm(symbol - pts[0]);
    for (std::size_t v = 1; v < pts.size(); ++v) {
        const double d = std::norm(symbol - pts[v]);
        if (d < best_d) {
            best_d = d;
            best = v;
        }
    }
    return best;
}

Bits demodulate(const std::vector<cplx>& symbols, const ModulationScheme& scheme) {
    const int k = scheme.bits_per_symbol();
    Bits out;
    out.reserve(symbols.size() * k);
    for (const auto& s : symbols) {
        const auto v = demodulate_index(s, scheme);
        for (int b = k - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((v >> b) & 1u));
    }
    return out;
}

void ChannelConfig::validate() const {
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite (noise power must be > 0)");
    if (pathloss == PathLossModel::RMA_AV && !(building_height > 0.0))
        throw ConfigError("building_height must be > 0 for the RMa-AV model");
    if (!(carrier_freq_ghz > 0.0)) throw ConfigError("carrier frequency must be > 0");
}

void JammerStrategy::validate(int n_steps) const {
    if (hit_rate < 0.0 || hit_rate > 1.0) throw ConfigError("jammer hit rate must lie in [0, 1]");
    auto w = on_windows;
    std::sort(w.begin(), w.end());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i].first < 0 || w[i].second > n_steps || w[i].first >= w[i].second)
            throw ConfigError("jammer window outside [0, T) or empty");
        if (i > 0 && w[i].first < w[i - 1].second) throw ConfigError("jammer windows overlap");
    }
    if (enabled && pattern == JammerPattern::WINDOWED && on_windows.empty())
        throw ConfigError("WINDOWED jammer needs at least one window");
}

bool jammer_active_at(const JammerStrategy& strategy, int t) {
    if (!strategy.enabled) return false;
    if (strategy.on_windows.empty()) return true;
    return std::any_of(strategy.on_windows.begin(), strategy.on_windows.end(),
                       [t](const auto& w) { return t >= w.first && t < w.second; });
}

std::set<int> jammer_schedule(const JammerStrategy& strategy, int t, int n_units) {
    std::set<int> out;
    if (!jammer_active_at(strategy, t)) return out;
    std::vector<int> pool = strategy.target_prbs;
    if (pool.empty()) {
        pool.resize(n_units);
        for (int i = 0; i < n_units; ++i) pool[i] = i;
    }
    switch (strategy.pattern) {
        case JammerPattern::CONSTANT:
        case JammerPattern::WINDOWED: out.insert(pool.begin(), pool.end()); break;
        case JammerPattern::SWEEP: out.insert(pool[static_cast<std::size_t>(t) % pool.size()]); break;
        case JammerPattern::RANDOM: {
            const auto count = static_cast<std::size_t>(std::lround(strategy.hit_rate * pool.size()));
            auto rng = make_rng(strategy.seed, static_cast<std::uint64_t>(t) + 1);
            std::shuffle(pool.begin(), pool.end(), rng);
            out.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
            break;
        }
    }
    return out;
}

Trajectory integrate_trajectory(const std::vector<Eigen::Vector3i>& commands, const Eigen::Vector3d& start,
                                double k, double dt) {
    Trajectory tr;
    tr.commands = commands;
    tr.positions.reserve(commands.size() + 1);
    tr.positions.push_back(start);
    for (const auto& c : commands) {
        // pitch drives x, roll drives y, yaw is mapped onto the vertical axis
        const Eigen::Vector3d v(k * c[0], k * c[2], k * c[1]);
        tr.positions.push_back(tr.positions.back() + dt * v);
    }
    return tr;
}

double path_loss_rma_av(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const ChannelConfig& cfg) {
    const double d = (a - b).norm();
    if (!(d > 0.0)) throw DomainError("RMa-AV path loss needs a positive 3D distance");
    const double kappa = cfg.building_height;
    if (!(kappa > 0.0)) throw DomainError("building height must be positive");
    return 20.0 * std::log10(40.0 * std::numbers::pi * d * cfg.carrier_freq_ghz / 3.0) +
           std::min(0.03 * kappa, 10.0) * std::log10(d) + std::min(0.044 * kappa, 14.77) +
           0.002 * std::log10(kappa) * d;
}

double path_loss_ctu_ad(double d2d, std::pair<double, double> heights, const ChannelConfig& cfg, Rng& rng) {
    if (!(d2d > 0.0)) throw DomainError("CtU-AD path loss needs a positive 2D distance");
    const auto& p = cfg.ctu;
    const double theta = std::atan((heights.second - heights.first) / d2d) * 180.0 / std::numbers::pi;
    const double excess = p.C * (theta - p.theta0) * std::exp(-(theta - p.theta0) / p.D) + p.eta0;
    double shadow = 0.0;
    if (p.shadowing) {
        const double sigma = std::max(0.0, p.a * theta + p.sigma_uav);
        shadow = std::normal_distribution<double>(0.0, 1.0)(rng) * sigma;
        if (p.terrestrial_shadowing)
            shadow += std::normal_distribution<double>(0.0, 1.0)(rng) * p.sigma_terrestrial;
    }
    return 10.0 * p.alpha * std::log10(d2d) + excess + shadow;
}

double sinr(double p_user, double p_jam, double gain_user, double gain_jam, bool jammer_present,
            double noise_power) {
    if (p_user < 0.0 || p_jam < 0.0) throw DomainError("powers must be non-negative");
    if (!(noise_power > 0.0)) throw DomainError("noise power must be positive");
    const double a = jammer_present ? 1.0 : 0.0;
    return p_user * gain_user / (a * p_jam * gain_jam + noise_power);
}

void ScenarioConfig::validate() const {
    if (n_subcarriers < 1 || n_steps < 1) throw ConfigError("grid needs d >= 1 and T >= 1");
    channel.validate();
    jammer.validate(n_steps);
    if (commands.n_words < 1 || commands.n_words > 27) throw ConfigError("n_words must be in [1, 27]");
    if (commands.dwell_min < 1 || commands.dwell_max < commands.dwell_min)
        throw ConfigError("invalid command dwell range");
    static const std::vector<double> bw{1.4, 3, 5, 10, 15, 20};
    static const std::vector<int> prbs{6, 15, 25, 50, 75, 100};
    if (std::none_of(bw.begin(), bw.end(), [&](double b) { return std::abs(b - bandwidth_mhz) < 1e-9; }))
        throw ConfigError("bandwidth_mhz must be one of 1.4, 3, 5, 10, 15, 20");
    if (std::find(prbs.begin(), prbs.end(), n_prbs) == prbs.end())
        throw ConfigError("n_prbs must be one of 6, 15, 25, 50, 75, 100");
}

ResourceGrid Scenario::clean_grid() const {
    ResourceGrid g = grid;
    g.samples = signal + noise;
    return g;
}

std::vector<Eigen::Vector3i> command_alphabet(int n_words) {
    // Hover first, then single-axis manoeuvres, then combinations.
    std::vector<Eigen::Vector3i> all{{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}, {0, 1, 0}, {0, -1, 0}};
    for (int p = -1; p <= 1; ++p)
        for (int y = -1; y <= 1; ++y)
            for (int r = -1; r <= 1; ++r) {
                Eigen::Vector3i c(p, y, r);
                if (std::find(all.begin(), all.end(), c) == all.end()) all.push_back(c);
            }
    if (n_words < 1 || n_words > static_cast<int>(all.size())) throw ConfigError("n_words out of range");
    all.resize(static_cast<std::size_t>(n_words));
    return all;
}

Bits command_word_bits(const Eigen::Vector3i& command, int n_bits) {
    // Two bits per axis value (-1 -> 00, 0 -> 01, +1 -> 11), cycling
    // pitch, yaw, roll until the word is full.
    Bits out;
    out.reserve(static_cast<std::size_t>(n_bits));
    int axis = 0;
    while (static_cast<int>(out.size()) < n_bits) {
        const int v = command[axis];
        const std::uint8_t hi = v > 0 ? 1 : 0;
        const std::uint8_t lo = v >= 0 ? 1 : 0;
        out.push_back(hi);
        if (static_cast<int>(out.size()) < n_bits) out.push_back(lo);
        axis = (axis + 1) % 3;
    }
    return out;
}

Scenario synthesize_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const int d = cfg.n_subcarriers;
    const int T = cfg.n_steps;
    auto cmd_rng = make_rng(cfg.seed, 1);
    auto noise_rng = make_rng(cfg.seed, 2);
    auto jam_rng = make_rng(cfg.jammer.seed, 3);
    auto shadow_rng = make_rng(cfg.seed, 4);

    Scenario sc;
    const auto alphabet = command_alphabet(cfg.commands.n_words);
    const int k = cfg.signal_scheme.bits_per_symbol();
    std::vector<Bits> word_bits;
    for (const auto& c : alphabet) word_bits.push_back(command_word_bits(c, k * d));

    // Command manoeuvres as a semi-Markov chain with uniform dwell.
    std::uniform_int_distribution<int> dwell(cfg.commands.dwell_min, cfg.commands.dwell_max);
    std::uniform_int_distribution<int> first(0, cfg.commands.n_words - 1);
    int word = first(cmd_rng);
    int remaining = dwell(cmd_rng);
    std::vector<Eigen::Vector3i> cmds;
    for (int t = 0; t < T; ++t) {
        if (remaining == 0) {
            if (cfg.commands.n_words > 1) {
                std::uniform_int_distribution<int> other(0, cfg.commands.n_words - 2);
                int nxt = other(cmd_rng);
                if (nxt >= word) ++nxt;
                word = nxt;
            }
            remaining = dwell(cmd_rng);
        }
        --remaining;
        sc.command_words.push_back(word);
        cmds.push_back(alphabet[static_cast<std::size_t>(word)]);
    }
    sc.trajectory = integrate_trajectory(cmds, cfg.uav_start, cfg.velocity_gain);

    // Per-step power gains, normalised to unit mean so SNR and JSR keep their
    // configured averages.
    std::vector<double> gu(T, 1.0), gj(T, 1.0);
    if (cfg.channel.pathloss != PathLossModel::NONE) {
        for (int t = 0; t < T; ++t) {
            const auto& pos = sc.trajectory.positions[static_cast<std::size_t>(t)];
            if (cfg.channel.pathloss == PathLossModel::RMA_AV) {
                gu[t] = gain_from_path_loss_db(path_loss_rma_av(cfg.base_station, pos, cfg.channel));
                gj[t] = gain_from_path_loss_db(path_loss_rma_av(cfg.jammer_position, pos, cfg.channel));
            } else {
                const auto d2 = [&](const Eigen::Vector3d& e) { return (pos.head<2>() - e.head<2>()).norm(); };
                gu[t] = gain_from_path_loss_db(
                    path_loss_ctu_ad(d2(cfg.base_station), {cfg.base_station.z(), pos.z()}, cfg.channel, shadow_rng));
                gj[t] = gain_from_path_loss_db(path_loss_ctu_ad(d2(cfg.jammer_position),
                                                                {cfg.jammer_position.z(), pos.z()}, cfg.channel,
                                                                shadow_rng));
            }
        }
        const auto normalise = [](std::vector<double>& g) {
            double m = 0.0;
            for (double v : g) m += v;
            m /= static_cast<double>(g.size());
            for (double& v : g) v /= m;
        };
        normalise(gu);
        normalise(gj);
    }

    const double sigma2 = cfg.channel.noise_power();
    const double jam_amp = std::sqrt(db_to_linear(cfg.channel.jsr_db));
    const auto& jpts = constellation(cfg.jammer_scheme);
    std::uniform_int_distribution<std::size_t> jpick(0, jpts.size() - 1);

    sc.signal.resize(d, T);
    sc.jammer = Eigen::MatrixXcd::Zero(d, T);
    sc.noise.resize(d, T);
    sc.cell_labels = decltype(sc.cell_labels)::Zero(d, T);
    sc.step_labels.assign(static_cast<std::size_t>(T), 0);

    std::vector<int> window_start(T, 0);
    for (int t = 0, start = 0; t < T; ++t) {
        if (!jammer_active_at(cfg.jammer, t)) start = t + 1;
        window_start[t] = start;
    }

    for (int t = 0; t < T; ++t) {
        const Bits& wb = word_bits[static_cast<std::size_t>(sc.command_words[t])];
        const auto syms = modulate(wb, cfg.signal_scheme);
        sc.bits.insert(sc.bits.end(), wb.begin(), wb.end());
        const auto attacked = jammer_schedule(cfg.jammer, t, d);
        for (int n = 0; n < d; ++n) {
            sc.signal(n, t) = std::sqrt(gu[t]) * syms[static_cast<std::size_t>(n)];
            sc.noise(n, t) = complex_normal(noise_rng, sigma2);
            // The jammer stream is drawn for every cell so its state does not
            // depend on which cells end up attacked.
            const cplx jsym = jpts[jpick(jam_rng)];
            if (attacked.count(n)) {
                cplx j;
                if (cfg.jammer.waveform == JammerWaveform::DRIFT)
                    j = cfg.jammer.drift_per_step * static_cast<double>(t - window_start[t] + 1);
                else
                    j = jam_amp * std::sqrt(gj[t]) * jsym;
                sc.jammer(n, t) = j;
                sc.cell_labels(n, t) = 1;
                sc.step_labels[t] = 1;
            }
        }
    }
    sc.grid.samples = sc.signal + sc.jammer + sc.noise;
    return sc;
}

Vec generalized_observation(const Eigen::VectorXcd& current, const Eigen::VectorXcd* previous) {
    const auto d = current.size();
    Vec z = Vec::Zero(4 * d);
    z.segment(0, d) = current.real();
    z.segment(d, d) = current.imag();
    if (previous) {
        z.segment(2 * d, d) = current.real() - previous->real();
        z.segment(3 * d, d) = current.imag() - previous->imag();
    }
    return z;
}

std::vector<Vec> build_generalized_observations(const Eigen::MatrixXcd& samples) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(samples.cols()));
    Eigen::VectorXcd prev;
    for (Eigen::Index t = 0; t < samples.cols(); ++t) {
        Eigen::VectorXcd cur = samples.col(t);
        out.push_back(generalized_observation(cur, t > 0 ? &prev : nullptr));
        prev = std::move(cur);
    }
    return out;
}

std::vector<Vec> build_generalized_observations(const ResourceGrid& grid) {
    return build_generalized_observations(grid.samples);
}

void write_grid_csv(const std::string& path, const Scenario& scenario) {
    std::ofstream f(path);
    if (!f) throw std::ios_base::failure("cannot write " + path);
    f.precision(17);
    f << "t,subcarrier,I,Q,label\n";
    const auto& s = scenario.grid.samples;
    for (Eigen::Index t = 0; t < s.cols(); ++t)
        for (Eigen::Index n = 0; n < s.rows(); ++n)
            f << t << ',' << n << ',' << s(n, t).real() << ',' << s(n, t).imag() << ','
              << static_cast<int>(scenario.cell_labels(n, t)) << '\n';
}

}  // namespace jamaware
