#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace equistab {

inline constexpr const char *version_string = "0.1.0";

struct CommandFlags {
    std::uint64_t seed = 1;
    double step = 1e-2;
    double horizon = 1e3;
    double eps = 1e-2;
    std::vector<double> deltas{1e-3};
    int samples = -1; // -1: command default (0 for analyze, 64 for probe)
    double tol_releq = 1e-9;
    std::optional<double> tol_nondeg;
    double radius_hint = 0.5;
    std::optional<double> A_override;
    std::string field = "h"; // simulate: "h" or "h_aug:xi1,xi2,..."
    int threads = 0;
};

struct CommandResult {
    int exit_code = 0;
    std::string report; // JSON document
    std::string text;   // human-readable summary (verify table, simulate summary line)
    std::string csv;    // simulate trajectory, probe witness trajectory
};

// Exit codes: analyze 0 = StableModGmu, 2 = Inconclusive; probe 0 = no escape
// observed, 2 = escaped; verify 0 = all checks pass. Errors are reported by
// throwing; the CLI maps them to exit code 1.
CommandResult cmd_analyze(const std::string &model_path, const std::string &point, const CommandFlags &flags);
CommandResult cmd_simulate(const std::string &model_path, const std::string &point, const CommandFlags &flags);
CommandResult cmd_probe(const std::string &model_path, const std::string &point, const CommandFlags &flags);
CommandResult cmd_verify(const std::string &model_path, const CommandFlags &flags);

} // namespace equistab
