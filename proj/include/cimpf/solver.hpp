#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cimpf/admittance.hpp"
#include "cimpf/compensation.hpp"
#include "cimpf/linalg.hpp"
#include "cimpf/network.hpp"

namespace cimpf {

struct SolverConfig {
    /// ‖U_k - U_{k-1}‖∞ stopping threshold (pu).
    double tol = 1e-8;
    int max_iter = 1000;
    double eps_tf = 1e-10;
    double shunt_floor = 1e-8;
    double switch_admittance = 1e4;
    EngineKind engine = EngineKind::Sparse;
    /// Relaxation of the fixed-point update; 1.0 is the plain iteration.
    double damping = 1.0;
    /// Any variable voltage above this modulus (pu) aborts with NonFinite.
    double divergence_limit = 100.0;
    /// Called after every iteration with (k, ‖U_k - U_{k-1}‖∞).
    std::function<void(int, double)> on_iteration;

    /// Throws InvalidArgument.
    void validate() const;
    [[nodiscard]] AdmittanceSettings admittance() const noexcept {
        return {.eps_tf = eps_tf, .shunt_floor = shunt_floor, .switch_admittance = switch_admittance};
    }
};

/// U^f, U^v at the current iterate, the iterate before it, and the I^v
/// (evaluated at `previous`) that produced it.
struct StateVector {
    ComplexVector fixed;
    ComplexVector variable;
    ComplexVector previous;
    ComplexVector injection;
};

struct TerminalVoltage {
    std::string bus;
    Phase phase = Phase::A;
    Complex value{};
    bool internal = false;
};

/// Terminal currents (flowing from the bus into the component) and complex
/// powers U∘conj(I) of one component, in conn order. Device currents are the
/// realized consumption currents Y_d·U - I^nl.
struct BranchResult {
    std::string id;
    ComponentKind kind = ComponentKind::Line;
    std::vector<TerminalRef> terminals;
    ComplexVector currents;
    ComplexVector powers;
};

struct Solution {
    bool converged = false;
    int iterations = 0;
    double tolerance = 0.0;
    double final_delta = 0.0;
    std::vector<double> delta_history;

    std::vector<TerminalVoltage> terminal_voltages;
    std::vector<BranchResult> branches;

    /// Max |Σ incident currents| over variable rows (bus terminals and
    /// transformer auxiliary rows).
    double kcl_residual_max = 0.0;
    /// Max per-branch |realized - demanded| device power.
    double device_power_residual_max = 0.0;
    /// Max residual of the ideal transformer winding equations.
    double transformer_residual_max = 0.0;
    /// Max |Σ terminal power| over ideal transformers.
    double transformer_power_max = 0.0;

    std::size_t factorizations = 0;
    double wall_time_s = 0.0;

    [[nodiscard]] std::optional<Complex> voltage(std::string_view bus, Phase phase) const;
    [[nodiscard]] const BranchResult* branch(std::string_view id) const;
};

struct Initialization {
    std::unique_ptr<Factorization> factorization;
    ComplexVector variable;
};

/// Factorizes Y^vv (once) and returns U^v_0 = solve(-Y^vf·U^f). Throws
/// SingularMatrix with a shunt-floor hint.
[[nodiscard]] Initialization initialize(const SystemMatrices& sys, std::span<const Complex> fixed,
                                        LinearEngine& engine);

struct IterationResult {
    ComplexVector variable;
    ComplexVector injection;
};

/// One fixed-point step with the retained factorization:
/// U^v_k = solve(I^v(U_{k-1}) - Y^vf·U^f). Throws VoltageCollapse.
[[nodiscard]] IterationResult iterate(const SystemMatrices& sys, const Factorization& factorization,
                                      std::span<const Complex> fixed, std::span<const Complex> previous,
                                      std::span<const DeviceInstance> devices, double damping = 1.0);

/// max_i |a_i - b_i| <= tol.
[[nodiscard]] bool converged(std::span<const Complex> current, std::span<const Complex> previous, double tol);

/// Device instances sharing the stamped device primitives.
[[nodiscard]] std::vector<DeviceInstance> build_devices(const NetworkModel& net,
                                                        std::span<const StampedComponent> primitives);

/// Fills voltages, branch flows and the residual diagnostics of `solution`.
void post_process(const NetworkModel& net, const SystemMatrices& sys, std::span<const StampedComponent> primitives,
                  std::span<const DeviceInstance> devices, const StateVector& state, Solution& solution);

/// Build, assemble, factorize once, iterate and post-process. Hitting
/// max_iter is reported through `converged == false`, not an exception.
/// `engine` overrides config.engine (used to observe factorize calls);
/// `warm_start` seeds U^v_0 from a previous solution's terminal voltages.
[[nodiscard]] Solution solve_network(const NetworkModel& net, const SolverConfig& config,
                                     LinearEngine* engine = nullptr, const Solution* warm_start = nullptr);

}  // namespace cimpf
