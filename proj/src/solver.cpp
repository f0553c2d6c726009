#include "cimpf/solver.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "cimpf/error.hpp"

namespace cimpf {

void SolverConfig::validate() const {
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
    if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
    if (!(eps_tf >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_tf must be >= 0");
    if (!(shunt_floor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "shunt_floor must be >= 0");
    if (!(switch_admittance > 0.0)) throw Error(ErrorCode::InvalidArgument, "switch_admittance must be > 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorCode::InvalidArgument, "damping must be in (0, 1]");
    if (!(divergence_limit > 0.0)) throw Error(ErrorCode::InvalidArgument, "divergence_limit must be > 0");
}

std::optional<Complex> Solution::voltage(std::string_view bus, Phase phase) const {
    for (const auto& v : terminal_voltages) {
        if (v.bus == bus && v.phase == phase) return v.value;
    }
    return std::nullopt;
}

const BranchResult* Solution::branch(std::string_view id) const {
    for (const auto& b : branches) {
        if (b.id == id) return &b;
    }
    return nullptr;
}

namespace {

ComplexVector negated(ComplexVector v) {
    for (auto& x : v) x = -x;
    return v;
}

ComplexVector local_values(std::span<const Slot> slots, std::span<const Complex> fixed,
                           std::span<const Complex> variable) {
    ComplexVector u;
    u.reserve(slots.size());
    for (const Slot& s : slots) u.push_back(s.partition == Partition::Fixed ? fixed[s.index] : variable[s.index]);
    return u;
}

ComplexVector multiply(const ComplexMatrix& m, std::span<const Complex> u) {
    const Eigen::Map<const Eigen::VectorXcd> x(u.data(), static_cast<Eigen::Index>(u.size()));
    const Eigen::VectorXcd y = m * x;
    return ComplexVector(y.data(), y.data() + y.size());
}

/// Winding equations of the ideal transformer (voltage ratio, current ratio and
/// per-side current balance) evaluated at the solved terminal voltages.
double transformer_residual(const IdealTransformerPayload& p, std::span<const Complex> u,
                            std::span<const Complex> i) {
    const double r = p.ratio;
    double worst = 0.0;
    auto take = [&](Complex x) { worst = std::max(worst, std::abs(x)); };
    switch (p.grounding) {
        case TransformerGrounding::None:
            take((u[0] - u[1]) - r * (u[2] - u[3]));
            take(i[0] + i[2] / r);
            take(i[0] + i[1]);
            take(i[2] + i[3]);
            break;
        case TransformerGrounding::SendingEnd:
            take(u[0] - r * (u[1] - u[2]));
            take(i[0] + i[1] / r);
            take(i[1] + i[2]);
            break;
        case TransformerGrounding::Both:
            take(u[0] - r * u[1]);
            take(i[0] + i[1] / r);
            break;
    }
    return worst;
}

/// |realized - demanded| branch power of one device. The realized branch
/// current is the linear part at U minus the compensation the last solve used
/// (evaluated at the previous iterate), both in the branch domain.
double device_residual(const DeviceInstance& device, std::span<const Complex> u, std::span<const Complex> u_prev) {
    const DevicePayload& p = *device.payload;
    const std::vector<Complex> y = reference_admittances(p);
    const ComplexVector v = branch_voltages(p, u);
    const ComplexVector s_now = demanded_power(p, v);
    ComplexVector v_prev = branch_voltages(p, u_prev);
    const ComplexVector s_prev = demanded_power(p, v_prev);
    double worst = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        Complex i_prev_demand{};
        if (p.model == LoadModel::ConstantImpedance) {
            i_prev_demand = y[k] * v_prev[k];
        } else if (s_prev[k] != Complex{}) {
            i_prev_demand = std::conj(s_prev[k] / v_prev[k]);
        }
        const Complex realized_current = y[k] * v[k] - (y[k] * v_prev[k] - i_prev_demand);
        worst = std::max(worst, std::abs(v[k] * std::conj(realized_current) - s_now[k]));
    }
    return worst;
}

}  // namespace

Initialization initialize(const SystemMatrices& sys, std::span<const Complex> fixed, LinearEngine& engine) {
    Initialization init;
    init.factorization = engine.factorize(sys.vv);
    init.variable = init.factorization->solve(negated(sys.vf.multiply(fixed)));
    return init;
}

IterationResult iterate(const SystemMatrices& sys, const Factorization& factorization,
                        std::span<const Complex> fixed, std::span<const Complex> previous,
                        std::span<const DeviceInstance> devices, double damping) {
    std::vector<ComplexVector> values;
    values.reserve(devices.size());
    for (const DeviceInstance& d : devices) {
        values.push_back(compensation(*d.payload, d.admittance, gather(d, fixed, previous)));
    }
    IterationResult result;
    result.injection = scatter(devices, values, sys.index.variable_size());

    ComplexVector rhs = sys.vf.multiply(fixed);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = result.injection[k] - rhs[k];
    result.variable = factorization.solve(rhs);
    if (damping != 1.0) {
        for (std::size_t k = 0; k < result.variable.size(); ++k) {
            result.variable[k] = previous[k] + damping * (result.variable[k] - previous[k]);
        }
    }
    for (const Complex& x : result.variable) {
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
            throw Error(ErrorCode::NonFinite, "non-finite voltage after a fixed-point step");
        }
    }
    return result;
}

bool converged(std::span<const Complex> current, std::span<const Complex> previous, double tol) {
    if (current.size() != previous.size()) throw Error(ErrorCode::DimensionMismatch, "iterates differ in length");
    for (std::size_t k = 0; k < current.size(); ++k) {
        if (!(std::abs(current[k] - previous[k]) <= tol)) return false;
    }
    return true;
}

std::vector<DeviceInstance> build_devices(const NetworkModel& net, std::span<const StampedComponent> primitives) {
    std::vector<DeviceInstance> devices;
    for (const StampedComponent& s : primitives) {
        const Component& c = net.components()[s.component];
        if (!is_device(c.kind)) continue;
        devices.push_back(DeviceInstance{.component = s.component,
                                         .payload = &std::get<DevicePayload>(c.payload),
                                         .admittance = s.primitive.matrix,
                                         .indices = s.primitive.indices});
    }
    return devices;
}

void post_process(const NetworkModel& net, const SystemMatrices& sys, std::span<const StampedComponent> primitives,
                  std::span<const DeviceInstance> devices, const StateVector& state, Solution& solution) {
    const IndexMap& index = sys.index;
    const auto& fixed = state.fixed;
    const auto& variable = state.variable;
    const auto& previous = state.previous.empty() ? state.variable : state.previous;

    solution.terminal_voltages.clear();
    for (const auto& [b, p] : net.bus_terminals()) {
        const Slot s = index.terminal(b, p);
        const Complex value = s.partition == Partition::Fixed ? fixed[s.index] : variable[s.index];
        solution.terminal_voltages.push_back({net.buses()[b].id, p, value, net.buses()[b].internal});
    }

    std::map<std::size_t, const DeviceInstance*> device_of;
    for (const auto& d : devices) device_of.emplace(d.component, &d);

    ComplexVector kcl(index.variable_size(), Complex{});
    solution.branches.clear();
    solution.device_power_residual_max = 0.0;
    solution.transformer_residual_max = 0.0;
    solution.transformer_power_max = 0.0;

    for (const StampedComponent& s : primitives) {
        const Component& c = net.components()[s.component];
        const auto& slots = s.primitive.indices;
        const ComplexVector u = local_values(slots, fixed, variable);
        ComplexVector current = multiply(s.primitive.matrix, u);

        if (auto it = device_of.find(s.component); it != device_of.end()) {
            const DeviceInstance& d = *it->second;
            const ComplexVector u_prev = local_values(slots, fixed, previous);
            const ComplexVector comp = compensation(*d.payload, d.admittance, u_prev);
            for (std::size_t k = 0; k < current.size(); ++k) current[k] -= comp[k];
            solution.device_power_residual_max =
                std::max(solution.device_power_residual_max, device_residual(d, u, u_prev));
        }
        for (std::size_t k = 0; k < slots.size(); ++k) {
            if (slots[k].partition == Partition::Variable) kcl[slots[k].index] += current[k];
        }

        BranchResult result{.id = c.id, .kind = c.kind, .terminals = c.conn, .currents = {}, .powers = {}};
        const std::size_t terminals = c.conn.size();
        result.currents.assign(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(terminals));
        Complex total_power{};
        for (std::size_t k = 0; k < terminals; ++k) {
            result.powers.push_back(u[k] * std::conj(current[k]));
            total_power += result.powers.back();
        }
        if (c.kind == ComponentKind::IdealTransformer) {
            const auto& p = std::get<IdealTransformerPayload>(c.payload);
            solution.transformer_residual_max =
                std::max(solution.transformer_residual_max, transformer_residual(p, u, current));
            solution.transformer_power_max = std::max(solution.transformer_power_max, std::abs(total_power));
        }
        solution.branches.push_back(std::move(result));
    }
    for (const EarthShunt& e : sys.earth_shunts) {
        if (e.slot.partition == Partition::Variable) kcl[e.slot.index] += e.admittance * variable[e.slot.index];
    }
    solution.kcl_residual_max = inf_norm(kcl);
}

Solution solve_network(const NetworkModel& net, const SolverConfig& config, LinearEngine* engine,
                       const Solution* warm_start) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    const IndexMap index = index_terminals(net);
    const std::vector<StampedComponent> primitives = build_primitives(net, index, config.admittance());
    const SystemMatrices sys = assemble_system(net, primitives, index, config.shunt_floor);
    const std::vector<DeviceInstance> devices = build_devices(net, primitives);

    std::unique_ptr<LinearEngine> owned;
    if (engine == nullptr) {
        owned = make_engine(config.engine);
        engine = owned.get();
    }
    const std::size_t factorized_before = engine->factorize_count();

    StateVector state;
    state.fixed = index.fixed_voltages(net);
    Initialization init = initialize(sys, state.fixed, *engine);
    state.variable = std::move(init.variable);
    if (warm_start != nullptr) {
        for (std::size_t k = 0; k < index.variable_size(); ++k) {
            const VariableEntry& e = index.variable_entries()[k];
            if (e.auxiliary) continue;
            if (auto v = warm_start->voltage(net.buses()[e.bus].id, e.phase)) state.variable[k] = *v;
        }
    }
    state.injection.assign(index.variable_size(), Complex{});

    Solution solution;
    solution.tolerance = config.tol;
    for (int k = 1; k <= config.max_iter; ++k) {
        IterationResult step = iterate(sys, *init.factorization, state.fixed, state.variable, devices, config.damping);

        double delta = 0.0;
        for (std::size_t i = 0; i < step.variable.size(); ++i) {
            delta = std::max(delta, std::abs(step.variable[i] - state.variable[i]));
            if (!index.variable_entries()[i].auxiliary && std::abs(step.variable[i]) > config.divergence_limit) {
                throw Error(ErrorCode::NonFinite, "iteration " + std::to_string(k) + " diverged: |U| = " +
                                                      std::to_string(std::abs(step.variable[i])) + " pu");
            }
        }
        state.previous = std::move(state.variable);
        state.variable = std::move(step.variable);
        state.injection = std::move(step.injection);

        solution.iterations = k;
        solution.final_delta = delta;
        solution.delta_history.push_back(delta);
        if (config.on_iteration) config.on_iteration(k, delta);
        if (converged(state.variable, state.previous, config.tol)) {
            solution.converged = true;
            break;
        }
    }

    post_process(net, sys, primitives, devices, state, solution);
    solution.factorizations = engine->factorize_count() - factorized_before;
    solution.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return solution;
}

}  // namespace cimpf
