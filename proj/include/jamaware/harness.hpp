#pragma once

#include "jamaware/experiments.hpp"

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

namespace jamaware {

// Process exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

struct ExperimentConfig {
    ExperimentSpec spec;
    std::string output_dir = "out";
};

// Starts from the defaults of the configured kind (or default_kind when the
// document names none) and overlays every field present. Unknown keys and
// empty sweep axes are rejected with ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc, std::optional<ExperimentKind> default_kind = std::nullopt);
ExperimentConfig load_config(const std::string& path, std::optional<ExperimentKind> default_kind = std::nullopt);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& bytes);

struct RunReport {
    std::filesystem::path output_dir;
    nlohmann::json manifest;
    ExperimentResult result;
};

// Runs the experiment and writes every artifact plus summary.json,
// config.json and manifest.json (path, size and SHA-256 of each file).
RunReport run(const ExperimentConfig& cfg);

// Maps an exception escaping run() to an exit code.
int exit_code_for(const std::exception& e);

}  // namespace jamaware
