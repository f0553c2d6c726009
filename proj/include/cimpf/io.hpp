#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cimpf/network.hpp"
#include "cimpf/solver.hpp"

namespace cimpf {

/// Solver settings a network file may override. CLI flags take precedence.
struct SettingsOverrides {
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<double> eps_tf;
    std::optional<double> shunt_floor;
    std::optional<double> switch_admittance;
    std::optional<double> damping;
    std::optional<EngineKind> engine;

    void apply(SolverConfig& config) const;
    bool operator==(const SettingsOverrides&) const = default;
};

struct NetworkDocument {
    NetworkModel network;
    SettingsOverrides settings;
};

/// Parses the JSON network format. Syntax errors raise ParseError with line
/// and column; schema errors raise ParseError naming the offending entry;
/// model errors are forwarded from build_network.
[[nodiscard]] NetworkDocument parse_network_document(std::string_view text);
[[nodiscard]] NetworkDocument load_network_document(const std::filesystem::path& path);
[[nodiscard]] NetworkModel parse_network(const std::filesystem::path& path);

/// Writes the source description of `net` (linecodes inlined). Parsing the
/// result yields an equal model.
[[nodiscard]] std::string serialize_network(const NetworkModel& net, const SettingsOverrides& settings = {});

[[nodiscard]] std::string serialize_solution(const Solution& solution, const NetworkModel& net);

/// Terminal voltages and convergence metadata read back from a solution file.
struct SolutionFile {
    bool converged = false;
    int iterations = 0;
    double tolerance = 0.0;
    std::vector<TerminalVoltage> voltages;
};

[[nodiscard]] SolutionFile parse_solution(std::string_view text);
[[nodiscard]] SolutionFile load_solution(const std::filesystem::path& path);

struct BusError {
    std::string bus;
    double max_error = 0.0;
};

struct ComparisonReport {
    /// U_max^pu = max over (bus, terminal) of |U^A - U^B|.
    double max_error = 0.0;
    std::optional<TerminalRef> argmax;
    std::vector<BusError> per_bus;
};

/// Throws TerminalSetMismatch unless both cover the same (bus, terminal) set.
[[nodiscard]] ComparisonReport compare(std::span<const TerminalVoltage> a, std::span<const TerminalVoltage> b);

}  // namespace cimpf
