#include "jamaware/harness.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace jamaware {

namespace {

using nlohmann::json;

// Rejects keys outside the allowed set so typos do not pass silently.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
void read_axis(const json& obj, const char* key, std::vector<T>& out) {
    if (!obj.contains(key)) return;
    read(obj, key, out);
    if (out.empty()) throw ConfigError(std::string("sweep axis '") + key + "' is empty");
}

template <typename E, std::size_t N>
E enum_from(const std::string& name, const std::pair<const char*, E> (&table)[N], const char* what) {
    for (const auto& [n, e] : table)
        if (name == n) return e;
    throw ConfigError(std::string("unknown ") + what + " '" + name + "'");
}

template <typename E, std::size_t N>
std::string enum_name(E e, const std::pair<const char*, E> (&table)[N]) {
    for (const auto& [n, v] : table)
        if (v == e) return n;
    return "?";
}

constexpr std::pair<const char*, JammerPattern> kPatterns[] = {{"CONSTANT", JammerPattern::CONSTANT},
                                                               {"RANDOM", JammerPattern::RANDOM},
                                                               {"SWEEP", JammerPattern::SWEEP},
                                                               {"WINDOWED", JammerPattern::WINDOWED}};
constexpr std::pair<const char*, JammerWaveform> kWaveforms[] = {{"SYMBOLS", JammerWaveform::SYMBOLS},
                                                                 {"DRIFT", JammerWaveform::DRIFT}};
constexpr std::pair<const char*, PathLossModel> kPathLoss[] = {
    {"NONE", PathLossModel::NONE}, {"RMA_AV", PathLossModel::RMA_AV}, {"CTU_AD", PathLossModel::CTU_AD}};

ModulationScheme scheme_from(const json& v) {
    try {
        return ModulationScheme::from_name(v.get<std::string>());
    } catch (const json::exception&) {
        throw ConfigError("modulation must be a name");
    }
}

void parse_jammer(const json& j, JammerStrategy& s) {
    check_keys(j, {"pattern", "target_prbs", "on_windows", "hit_rate", "seed", "waveform", "drift_per_step", "enabled"},
               "jammer");
    if (j.contains("pattern")) s.pattern = enum_from(j["pattern"].get<std::string>(), kPatterns, "jammer pattern");
    if (j.contains("waveform")) s.waveform = enum_from(j["waveform"].get<std::string>(), kWaveforms, "jammer waveform");
    read(j, "target_prbs", s.target_prbs);
    read(j, "hit_rate", s.hit_rate);
    read(j, "seed", s.seed);
    read(j, "enabled", s.enabled);
    if (j.contains("on_windows")) {
        s.on_windows.clear();
        for (const auto& w : j["on_windows"]) {
            if (!w.is_array() || w.size() != 2) throw ConfigError("on_windows entries are [start, end) pairs");
            s.on_windows.emplace_back(w[0].get<int>(), w[1].get<int>());
        }
    }
    if (j.contains("drift_per_step")) {
        const auto& d = j["drift_per_step"];
        if (!d.is_array() || d.size() != 2) throw ConfigError("drift_per_step is [re, im]");
        s.drift_per_step = {d[0].get<double>(), d[1].get<double>()};
    }
}

json jammer_json(const JammerStrategy& s) {
    json w = json::array();
    for (const auto& [a, b] : s.on_windows) w.push_back({a, b});
    return {{"pattern", enum_name(s.pattern, kPatterns)},
            {"target_prbs", s.target_prbs},
            {"on_windows", w},
            {"hit_rate", s.hit_rate},
            {"seed", s.seed},
            {"waveform", enum_name(s.waveform, kWaveforms)},
            {"drift_per_step", {s.drift_per_step.real(), s.drift_per_step.imag()}},
            {"enabled", s.enabled}};
}

void parse_scenario(const json& j, ScenarioConfig& sc) {
    check_keys(j,
               {"n_subcarriers", "n_steps", "signal_scheme", "jammer_scheme", "bandwidth_mhz", "n_prbs", "channel",
                "jammer", "commands"},
               "scenario");
    read(j, "n_subcarriers", sc.n_subcarriers);
    read(j, "n_steps", sc.n_steps);
    read(j, "bandwidth_mhz", sc.bandwidth_mhz);
    read(j, "n_prbs", sc.n_prbs);
    if (j.contains("signal_scheme")) sc.signal_scheme = scheme_from(j["signal_scheme"]);
    if (j.contains("jammer_scheme")) sc.jammer_scheme = scheme_from(j["jammer_scheme"]);
    if (j.contains("channel")) {
        const auto& c = j["channel"];
        check_keys(c, {"snr_db", "jsr_db", "carrier_freq_ghz", "building_height", "pathloss"}, "channel");
        read(c, "snr_db", sc.channel.snr_db);
        read(c, "jsr_db", sc.channel.jsr_db);
        read(c, "carrier_freq_ghz", sc.channel.carrier_freq_ghz);
        read(c, "building_height", sc.channel.building_height);
        if (c.contains("pathloss")) sc.channel.pathloss = enum_from(c["pathloss"].get<std::string>(), kPathLoss, "path loss");
    }
    if (j.contains("jammer")) parse_jammer(j["jammer"], sc.jammer);
    if (j.contains("commands")) {
        const auto& c = j["commands"];
        check_keys(c, {"n_words", "dwell_min", "dwell_max"}, "commands");
        read(c, "n_words", sc.commands.n_words);
        read(c, "dwell_min", sc.commands.dwell_min);
        read(c, "dwell_max", sc.commands.dwell_max);
    }
}

void parse_episode(const json& j, EpisodeConfig& e) {
    check_keys(j, {"steps", "tau_max", "gamma_max", "jammer", "ql"}, "episode");
    read(j, "steps", e.steps);
    read(j, "tau_max", e.tau_max);
    read(j, "gamma_max", e.gamma_max);
    if (j.contains("jammer")) parse_jammer(j["jammer"], e.jammer);
    if (j.contains("ql")) {
        const auto& q = j["ql"];
        check_keys(q, {"learning_rate", "discount", "explore_fraction"}, "ql");
        read(q, "learning_rate", e.ql.learning_rate);
        read(q, "discount", e.ql.discount);
        read(q, "explore_fraction", e.ql.explore_fraction);
    }
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot open " + p.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::ios_base::failure("write failed for " + p.string());
}

}  // namespace

ExperimentConfig parse_config(const json& doc, std::optional<ExperimentKind> default_kind) {
    check_keys(doc, {"kind", "scenario", "sweep", "seeds", "output_dir", "vocab_nodes", "n_particles", "quick", "episode"},
               "config");
    ExperimentKind kind = default_kind.value_or(ExperimentKind::DETECT);
    if (doc.contains("kind")) {
        kind = kind_from_name(doc["kind"].get<std::string>());
    } else if (!default_kind) {
        throw ConfigError("config must name an experiment kind");
    }
    bool quick = false;
    read(doc, "quick", quick);

    ExperimentConfig cfg;
    cfg.spec = default_spec(kind, quick);
    auto& s = cfg.spec;
    if (doc.contains("scenario")) parse_scenario(doc["scenario"], s.scenario);
    if (doc.contains("sweep")) {
        const auto& w = doc["sweep"];
        check_keys(w, {"snr_db", "jsr_db", "L", "bandwidth_mhz"}, "sweep");
        read_axis(w, "snr_db", s.snr_db);
        read_axis(w, "jsr_db", s.jsr_db);
        read_axis(w, "L", s.L);
        read_axis(w, "bandwidth_mhz", s.bandwidth_mhz);
    }
    read(doc, "seeds", s.seeds);
    read(doc, "vocab_nodes", s.vocab_nodes);
    read(doc, "n_particles", s.n_particles);
    read(doc, "output_dir", cfg.output_dir);
    if (doc.contains("episode")) parse_episode(doc["episode"], s.episode);
    s.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<ExperimentKind> default_kind) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(doc, default_kind);
}

json config_to_json(const ExperimentConfig& cfg) {
    const auto& s = cfg.spec;
    const auto& sc = s.scenario;
    const auto& e = s.episode;
    return {{"kind", kind_name(s.kind)},
            {"scenario",
             {{"n_subcarriers", sc.n_subcarriers},
              {"n_steps", sc.n_steps},
              {"signal_scheme", sc.signal_scheme.name()},
              {"jammer_scheme", sc.jammer_scheme.name()},
              {"bandwidth_mhz", sc.bandwidth_mhz},
              {"n_prbs", sc.n_prbs},
              {"channel",
               {{"snr_db", sc.channel.snr_db},
                {"jsr_db", sc.channel.jsr_db},
                {"carrier_freq_ghz", sc.channel.carrier_freq_ghz},
                {"building_height", sc.channel.building_height},
                {"pathloss", enum_name(sc.channel.pathloss, kPathLoss)}}},
              {"jammer", jammer_json(sc.jammer)},
              {"commands",
               {{"n_words", sc.commands.n_words}, {"dwell_min", sc.commands.dwell_min}, {"dwell_max", sc.commands.dwell_max}}}}},
            {"sweep", {{"snr_db", s.snr_db}, {"jsr_db", s.jsr_db}, {"L", s.L}, {"bandwidth_mhz", s.bandwidth_mhz}}},
            {"seeds", s.seeds},
            {"output_dir", cfg.output_dir},
            {"vocab_nodes", s.vocab_nodes},
            {"n_particles", s.n_particles},
            {"quick", s.quick},
            {"episode",
             {{"steps", e.steps},
              {"tau_max", e.tau_max},
              {"gamma_max", e.gamma_max},
              {"jammer", jammer_json(e.jammer)},
              {"ql",
               {{"learning_rate", e.ql.learning_rate},
                {"discount", e.ql.discount},
                {"explore_fraction", e.ql.explore_fraction}}}}}};
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    std::ostringstream o;
    for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return o.str();
}

RunReport run(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.result = run_experiment(cfg.spec);
    rep.output_dir = cfg.output_dir;

    std::vector<Artifact> files = rep.result.artifacts;
    files.push_back({"summary.json", rep.result.summary.dump(2) + "\n"});
    files.push_back({"config.json", config_to_json(cfg).dump(2) + "\n"});

    json list = json::array();
    for (const auto& a : files) {
        write_file(rep.output_dir / a.name, a.content);
        list.push_back({{"path", a.name}, {"bytes", a.content.size()}, {"sha256", sha256_hex(a.content)}});
    }
    rep.manifest = {{"kind", kind_name(cfg.spec.kind)}, {"artifacts", list}};
    write_file(rep.output_dir / "manifest.json", rep.manifest.dump(2) + "\n");
    return rep;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const LengthMismatchError*>(&e) ||
        dynamic_cast<const EmptyInputError*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e))
        return kExitConfig;
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kExitNumerical;
    if (dynamic_cast<const std::ios_base::failure*>(&e) || dynamic_cast<const std::filesystem::filesystem_error*>(&e))
        return kExitIo;
    return kExitNumerical;
}

}  // namespace jamaware
