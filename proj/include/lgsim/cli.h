#pragma once

// Command-line front end. The entry point takes its arguments and streams
// explicitly so tests can drive it in-process.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "lgsim/estimators.h"
#include "lgsim/experiment.h"

namespace lgsim::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kInternalError = 4 };

/// Invalid configuration; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct RunConfig {
    CampaignConfig campaign;
    ResamplingOptions bootstrap{};
    ResamplingOptions monte_carlo{};
    double band_tau_low_us = 75.0;
    double band_tau_high_us = 200.0;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> shots_per_arm;
};

/// Parses and validates a campaign config. Unknown keys are errors.
RunConfig parse_run_config(const nlohmann::json& doc, ProtocolKind protocol, const Overrides& overrides = {});
/// Fully resolved config (all defaults filled in); parses back to itself.
nlohmann::json to_json(const RunConfig& config);

struct RenderedOutputs {
    std::string records_csv;
    std::string summary_csv;
    std::string manifest_json;
};

/// Summary table and manifest for a record set produced by `config`.
RenderedOutputs render_outputs(const RunConfig& config, const std::vector<ShotRecord>& records);

/// Runs `lgsim <args...>`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lgsim::cli
