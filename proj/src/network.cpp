#include "cimpf/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "cimpf/admittance.hpp"
#include "cimpf/error.hpp"

namespace cimpf {

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
        case Phase::A: return "a";
        case Phase::B: return "b";
        case Phase::C: return "c";
        case Phase::N: return "n";
    }
    return "?";
}

std::optional<Phase> parse_phase(std::string_view text) noexcept {
    if (text == "a") return Phase::A;
    if (text == "b") return Phase::B;
    if (text == "c") return Phase::C;
    if (text == "n") return Phase::N;
    return std::nullopt;
}

bool Bus::has_terminal(Phase phase) const noexcept {
    return std::find(terminals.begin(), terminals.end(), phase) != terminals.end();
}

bool Bus::is_grounded(Phase phase) const noexcept {
    return std::find(grounded.begin(), grounded.end(), phase) != grounded.end();
}

std::string to_string(const TerminalRef& ref) {
    return ref.bus + "." + std::string(to_string(ref.phase));
}

std::string_view to_string(ComponentKind kind) noexcept {
    switch (kind) {
        case ComponentKind::Line: return "line";
        case ComponentKind::Switch: return "switch";
        case ComponentKind::IdealTransformer: return "ideal_transformer";
        case ComponentKind::TwoWindingTransformer: return "two_winding_transformer";
        case ComponentKind::Load: return "load";
        case ComponentKind::Generator: return "generator";
    }
    return "?";
}

bool LinePayload::operator==(const LinePayload& other) const {
    auto same = [](const ComplexMatrix& x, const ComplexMatrix& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    return same(series, other.series) && same(shunt_from, other.shunt_from) && same(shunt_to, other.shunt_to);
}

std::string_view to_string(TransformerGrounding grounding) noexcept {
    switch (grounding) {
        case TransformerGrounding::None: return "none";
        case TransformerGrounding::SendingEnd: return "sending_end";
        case TransformerGrounding::Both: return "both";
    }
    return "?";
}

std::size_t terminal_count(TransformerGrounding grounding) noexcept {
    switch (grounding) {
        case TransformerGrounding::None: return 4;
        case TransformerGrounding::SendingEnd: return 3;
        case TransformerGrounding::Both: return 2;
    }
    return 0;
}

std::string_view to_string(WindingConfig config) noexcept {
    switch (config) {
        case WindingConfig::WyeGrounded: return "wye_grounded";
        case WindingConfig::WyeFloating: return "wye_floating";
        case WindingConfig::Delta: return "delta";
    }
    return "?";
}

std::size_t terminal_count(WindingConfig config) noexcept {
    return config == WindingConfig::WyeFloating ? 4 : 3;
}

std::string_view to_string(Connection connection) noexcept {
    return connection == Connection::Wye ? "wye" : "delta";
}

std::string_view to_string(LoadModel model) noexcept {
    switch (model) {
        case LoadModel::ConstantImpedance: return "constant_impedance";
        case LoadModel::ConstantPower: return "constant_power";
        case LoadModel::ConstantCurrent: return "constant_current";
        case LoadModel::Exponential: return "exponential";
    }
    return "?";
}

std::size_t device_branch_count(const DevicePayload& payload, std::size_t terminals) noexcept {
    if (payload.connection == Connection::Delta) {
        return terminals == 2 ? 1 : terminals;
    }
    if (payload.explicit_neutral) {
        return terminals == 0 ? 0 : terminals - 1;
    }
    return terminals;
}

bool is_device(ComponentKind kind) noexcept {
    return kind == ComponentKind::Load || kind == ComponentKind::Generator;
}

// -----------------------------------------------------------------------------
// Validation
// -----------------------------------------------------------------------------

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidModel, what); }

std::string component_label(const Component& c) {
    return std::string(to_string(c.kind)) + " '" + c.id + "'";
}

bool all_finite(const ComplexMatrix& m) {
    return m.allFinite();
}

void validate_bus(Bus& bus) {
    if (bus.id.empty()) invalid("bus with empty id");
    if (bus.terminals.empty() || bus.terminals.size() > 4) {
        invalid("bus '" + bus.id + "' must have between 1 and 4 terminals");
    }
    std::set<Phase> seen(bus.terminals.begin(), bus.terminals.end());
    if (seen.size() != bus.terminals.size()) invalid("bus '" + bus.id + "' repeats a terminal label");
    if (!(bus.vbase > 0.0) || !std::isfinite(bus.vbase)) invalid("bus '" + bus.id + "' needs vbase > 0");
    for (Phase g : bus.grounded) {
        if (!bus.has_terminal(g)) invalid("bus '" + bus.id + "' grounds a terminal it does not have");
        if (!is_neutral(g)) invalid("bus '" + bus.id + "' may only ground its neutral terminal");
    }
    if (!bus.fixed_phasors.empty() && !bus.reference) {
        invalid("bus '" + bus.id + "' has fixed phasors but is not the reference bus");
    }
    for (const auto& [phase, value] : bus.fixed_phasors) {
        if (!bus.has_terminal(phase) || is_neutral(phase)) {
            invalid("reference bus '" + bus.id + "' fixes a phasor on a non-phase terminal");
        }
        if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
            invalid("reference bus '" + bus.id + "' has a non-finite phasor");
        }
    }
    if (bus.reference) {
        const double shift = 2.0 * std::numbers::pi / 3.0;
        bool any_phase = false;
        for (Phase p : bus.terminals) {
            if (is_neutral(p)) continue;
            any_phase = true;
            if (!bus.fixed_phasors.contains(p)) {
                bus.fixed_phasors[p] = std::polar(1.0, -shift * static_cast<double>(p));
            }
        }
        if (!any_phase) invalid("reference bus '" + bus.id + "' has no phase terminal");
    }
}

class BusLookup {
public:
    explicit BusLookup(const std::vector<Bus>& buses) : buses_(buses) {
        for (std::size_t i = 0; i < buses.size(); ++i) index_.emplace(buses[i].id, i);
    }

    std::size_t resolve(const Component& c, const TerminalRef& ref) const {
        auto it = index_.find(ref.bus);
        if (it == index_.end()) {
            throw Error(ErrorCode::DanglingTerminalRef,
                        component_label(c) + " references unknown bus '" + ref.bus + "'");
        }
        if (!buses_[it->second].has_terminal(ref.phase)) {
            throw Error(ErrorCode::DanglingTerminalRef,
                        component_label(c) + " references missing terminal " + to_string(ref));
        }
        return it->second;
    }

private:
    const std::vector<Bus>& buses_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

void require_terminals(const Component& c, std::size_t expected) {
    if (c.conn.size() != expected) {
        invalid(component_label(c) + " expects " + std::to_string(expected) + " terminals, got " +
                std::to_string(c.conn.size()));
    }
}

/// All refs in [first, last) must be on one bus.
void require_single_bus(const Component& c, std::size_t first, std::size_t last, const char* side) {
    for (std::size_t k = first + 1; k < last; ++k) {
        if (c.conn[k].bus != c.conn[first].bus) {
            invalid(component_label(c) + ": " + side + " terminals must lie on a single bus");
        }
    }
}

void validate_line(const Component& c, const LinePayload& p) {
    const auto n = p.series.rows();
    if (n < 1 || n > 4 || p.series.cols() != n) invalid(component_label(c) + ": series matrix must be n×n, 1 <= n <= 4");
    if (p.shunt_from.rows() != n || p.shunt_from.cols() != n || p.shunt_to.rows() != n || p.shunt_to.cols() != n) {
        invalid(component_label(c) + ": shunt matrices must match the series dimension");
    }
    if (!all_finite(p.series) || !all_finite(p.shunt_from) || !all_finite(p.shunt_to)) {
        invalid(component_label(c) + ": non-finite admittance entry");
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        if (p.series.row(r).isZero(0.0)) {
            invalid(component_label(c) + ": series admittance row " + std::to_string(r) +
                    " is all zero (rank-deficient padding is not allowed; drop the missing conductor)");
        }
    }
    const double scale = std::max(1.0, p.series.cwiseAbs().maxCoeff());
    if ((p.series - p.series.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        invalid(component_label(c) + ": series admittance must be symmetric");
    }
    const auto size = static_cast<std::size_t>(n);
    require_terminals(c, 2 * size);
    require_single_bus(c, 0, size, "from-side");
    require_single_bus(c, size, 2 * size, "to-side");
}

void validate_switch(const Component& c, const SwitchPayload& p) {
    if (p.conductors < 1 || p.conductors > 4) invalid(component_label(c) + ": 1 to 4 conductors required");
    require_terminals(c, 2 * p.conductors);
    require_single_bus(c, 0, p.conductors, "from-side");
    require_single_bus(c, p.conductors, 2 * p.conductors, "to-side");
}

void validate_ideal_transformer(const Component& c, const IdealTransformerPayload& p) {
    if (!(p.ratio > 0.0) || !std::isfinite(p.ratio)) invalid(component_label(c) + ": ratio must be > 0");
    require_terminals(c, terminal_count(p.grounding));
    const std::size_t from_count = p.grounding == TransformerGrounding::None ? 2 : 1;
    require_single_bus(c, 0, from_count, "from-side");
    require_single_bus(c, from_count, c.conn.size(), "to-side");
}

void validate_two_winding(const Component& c, const TwoWindingTransformerPayload& p) {
    if (!(p.ratio > 0.0) || !std::isfinite(p.ratio)) invalid(component_label(c) + ": ratio must be > 0");
    if (std::abs(p.series_impedance) == 0.0) {
        throw Error(ErrorCode::UnsupportedConfiguration,
                    component_label(c) + ": zero series impedance; model it as an ideal transformer");
    }
    const std::size_t from = terminal_count(p.from_config);
    require_terminals(c, from + terminal_count(p.to_config));
    require_single_bus(c, 0, from, "from-side");
    require_single_bus(c, from, c.conn.size(), "to-side");
    if (c.conn[0].bus == c.conn[from].bus) invalid(component_label(c) + ": windings must connect different buses");
}

void validate_device(const Component& c, DevicePayload& p) {
    const std::size_t t = c.conn.size();
    require_single_bus(c, 0, t, "device");
    if (p.connection == Connection::Delta) {
        if (p.explicit_neutral) invalid(component_label(c) + ": delta devices have no neutral");
        if (t != 2 && t != 3) invalid(component_label(c) + ": delta devices connect 2 or 3 terminals");
    } else if (p.explicit_neutral) {
        if (t < 2 || t > 4) invalid(component_label(c) + ": explicit-neutral wye devices connect 2 to 4 terminals");
    } else if (t < 1 || t > 3) {
        invalid(component_label(c) + ": Kron-reduced wye devices connect 1 to 3 terminals");
    }
    const std::size_t branches = device_branch_count(p, t);
    if (p.s_ref.size() != branches) {
        invalid(component_label(c) + ": s_ref needs " + std::to_string(branches) + " entries");
    }
    if (p.u_ref.empty() && p.model == LoadModel::ConstantPower) {
        const double nominal = p.connection == Connection::Delta ? std::numbers::sqrt3 : 1.0;
        p.u_ref.assign(branches, nominal);
    }
    if (p.u_ref.size() != branches) {
        invalid(component_label(c) + ": u_ref needs " + std::to_string(branches) + " entries");
    }
    if (p.model != LoadModel::ConstantPower) {
        for (double u : p.u_ref) {
            if (!(u > 0.0) || !std::isfinite(u)) invalid(component_label(c) + ": u_ref entries must be > 0");
        }
    }
    if (p.model == LoadModel::Exponential) {
        if (p.exp_p.size() != branches || p.exp_q.size() != branches) {
            invalid(component_label(c) + ": exponential model needs xP and xQ per branch");
        }
    }
    for (const Complex& s : p.s_ref) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) invalid(component_label(c) + ": non-finite s_ref");
    }
}

template <class T>
T& payload_as(Component& c) {
    auto* p = std::get_if<T>(&c.payload);
    if (p == nullptr) invalid(component_label(c) + ": payload does not match its kind");
    return *p;
}

void validate_component(Component& c, const BusLookup& lookup) {
    if (c.id.empty()) invalid("component with empty id");
    for (const auto& ref : c.conn) (void)lookup.resolve(c, ref);
    std::set<TerminalRef> unique(c.conn.begin(), c.conn.end());
    if (unique.size() != c.conn.size()) invalid(component_label(c) + " connects a terminal twice");

    switch (c.kind) {
        case ComponentKind::Line: validate_line(c, payload_as<LinePayload>(c)); break;
        case ComponentKind::Switch: validate_switch(c, payload_as<SwitchPayload>(c)); break;
        case ComponentKind::IdealTransformer:
            validate_ideal_transformer(c, payload_as<IdealTransformerPayload>(c));
            break;
        case ComponentKind::TwoWindingTransformer:
            validate_two_winding(c, payload_as<TwoWindingTransformerPayload>(c));
            break;
        case ComponentKind::Load:
        case ComponentKind::Generator: validate_device(c, payload_as<DevicePayload>(c)); break;
    }
}

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

bool conducts(const Component& c) {
    if (const auto* sw = std::get_if<SwitchPayload>(&c.payload)) return sw->closed;
    return true;
}

}  // namespace

// -----------------------------------------------------------------------------
// NetworkModel
// -----------------------------------------------------------------------------

std::optional<std::size_t> NetworkModel::find_bus(std::string_view id) const {
    auto it = bus_lookup_.find(id);
    if (it == bus_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> NetworkModel::find_component(std::string_view id) const {
    auto it = component_lookup_.find(id);
    if (it == component_lookup_.end()) return std::nullopt;
    return it->second;
}

std::size_t NetworkModel::bus_index(const TerminalRef& ref) const {
    auto idx = find_bus(ref.bus);
    if (!idx) throw Error(ErrorCode::DanglingTerminalRef, "unknown bus '" + ref.bus + "'");
    return *idx;
}

bool NetworkModel::operator==(const NetworkModel& other) const {
    return source_buses_ == other.source_buses_ && source_components_ == other.source_components_;
}

NetworkModel build_network(std::vector<Bus> buses, std::vector<Component> components) {
    NetworkModel net;

    std::set<std::string, std::less<>> bus_ids;
    std::optional<std::size_t> reference;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        Bus& bus = buses[i];
        if (!bus_ids.insert(bus.id).second) throw Error(ErrorCode::DuplicateId, "bus id '" + bus.id + "'");
        validate_bus(bus);
        if (bus.reference) {
            if (reference) invalid("more than one reference bus ('" + buses[*reference].id + "', '" + bus.id + "')");
            reference = i;
        }
    }
    if (!reference) throw Error(ErrorCode::NoReferenceBus, "no bus is marked as reference");

    std::set<std::string, std::less<>> component_ids;
    {
        const BusLookup lookup(buses);
        for (Component& c : components) {
            if (!component_ids.insert(c.id).second) throw Error(ErrorCode::DuplicateId, "component id '" + c.id + "'");
            validate_component(c, lookup);
        }
    }

    net.source_buses_ = buses;
    net.source_components_ = components;

    // Expand two-winding transformers.
    for (std::size_t i = 0; i < buses.size(); ++i) net.bus_lookup_.emplace(buses[i].id, i);
    net.buses_ = std::move(buses);
    for (const Component& c : components) {
        if (c.kind != ComponentKind::TwoWindingTransformer) {
            net.components_.push_back(c);
            continue;
        }
        const double vbase = net.buses_[net.bus_lookup_.at(c.conn.front().bus)].vbase;
        TransformerDecomposition parts = decompose_two_winding(c, vbase);
        for (Bus& bus : parts.internal_buses) {
            if (!net.bus_lookup_.emplace(bus.id, net.buses_.size()).second) {
                throw Error(ErrorCode::DuplicateId, "internal bus id '" + bus.id + "' of " + component_label(c));
            }
            net.buses_.push_back(std::move(bus));
        }
        for (Component& part : parts.components) net.components_.push_back(std::move(part));
    }
    net.reference_bus_ = *reference;

    for (std::size_t ci = 0; ci < net.components_.size(); ++ci) {
        const Component& c = net.components_[ci];
        if (!net.component_lookup_.emplace(c.id, ci).second) {
            throw Error(ErrorCode::DuplicateId, "component id '" + c.id + "'");
        }
    }

    // T^bt with a dense node id per terminal.
    std::vector<std::array<std::size_t, 4>> node_of(net.buses_.size());
    for (std::size_t b = 0; b < net.buses_.size(); ++b) {
        for (Phase p : net.buses_[b].terminals) {
            node_of[b][static_cast<std::size_t>(p)] = net.bus_terminals_.size();
            net.bus_terminals_.push_back({b, p});
        }
    }

    for (std::size_t ci = 0; ci < net.components_.size(); ++ci) {
        std::set<std::size_t> seen_buses;
        for (const TerminalRef& ref : net.components_[ci].conn) {
            const std::size_t b = net.bus_index(ref);
            net.component_terminals_.push_back({ci, b, ref.phase});
            if (seen_buses.insert(b).second) net.component_buses_.push_back({ci, b});
        }
    }

    // Every terminal must be tied to earth through the reference bus, a
    // grounded neutral, or a chain of conducting components.
    const std::size_t earth = net.bus_terminals_.size();
    DisjointSet sets(earth + 1);
    for (std::size_t t = 0; t < net.bus_terminals_.size(); ++t) {
        const auto& [b, p] = net.bus_terminals_[t];
        const Bus& bus = net.buses_[b];
        if (bus.is_grounded(p) || (bus.reference && !is_neutral(p))) sets.unite(t, earth);
    }
    for (const Component& c : net.components_) {
        if (!conducts(c) || c.conn.empty()) continue;
        const auto& first = c.conn.front();
        const std::size_t root = node_of[net.bus_index(first)][static_cast<std::size_t>(first.phase)];
        for (const TerminalRef& ref : c.conn) {
            sets.unite(node_of[net.bus_index(ref)][static_cast<std::size_t>(ref.phase)], root);
        }
    }
    std::vector<std::string> unreachable;
    for (std::size_t t = 0; t < net.bus_terminals_.size(); ++t) {
        if (sets.find(t) != sets.find(earth)) {
            const auto& [b, p] = net.bus_terminals_[t];
            unreachable.push_back(to_string(TerminalRef{net.buses_[b].id, p}));
        }
    }
    if (!unreachable.empty()) {
        std::ostringstream msg;
        msg << "terminals not connected to the reference:";
        for (const auto& name : unreachable) msg << ' ' << name;
        throw Error(ErrorCode::DisconnectedTerminal, msg.str());
    }
    return net;
}

// -----------------------------------------------------------------------------
// IndexMap
// -----------------------------------------------------------------------------

Slot IndexMap::terminal(std::size_t bus, Phase phase) const {
    if (bus >= terminal_slots_.size() || !terminal_slots_[bus][static_cast<std::size_t>(phase)]) {
        throw Error(ErrorCode::IndexOutOfBounds, "no slot for bus " + std::to_string(bus) + " terminal " +
                                                     std::string(to_string(phase)));
    }
    return *terminal_slots_[bus][static_cast<std::size_t>(phase)];
}

std::size_t IndexMap::auxiliary(std::size_t component) const {
    if (!has_auxiliary(component)) {
        throw Error(ErrorCode::IndexOutOfBounds, "component " + std::to_string(component) + " has no auxiliary");
    }
    return *auxiliary_slots_[component];
}

bool IndexMap::has_auxiliary(std::size_t component) const noexcept {
    return component < auxiliary_slots_.size() && auxiliary_slots_[component].has_value();
}

std::vector<Complex> IndexMap::fixed_voltages(const NetworkModel& net) const {
    std::vector<Complex> values;
    values.reserve(fixed_.size());
    for (const auto& [b, p] : fixed_) {
        const Bus& bus = net.buses()[b];
        if (is_neutral(p)) {
            values.emplace_back(0.0, 0.0);
        } else {
            values.push_back(bus.fixed_phasors.at(p));
        }
    }
    return values;
}

IndexMap index_terminals(const NetworkModel& net) {
    IndexMap map;
    map.terminal_slots_.resize(net.buses().size());
    for (const auto& [b, p] : net.bus_terminals()) {
        const Bus& bus = net.buses()[b];
        const bool fixed = (bus.reference && !is_neutral(p)) || (is_neutral(p) && bus.is_grounded(p));
        auto& slot = map.terminal_slots_[b][static_cast<std::size_t>(p)];
        if (fixed) {
            slot = Slot{Partition::Fixed, map.fixed_.size()};
            map.fixed_.push_back({b, p});
        } else {
            slot = Slot{Partition::Variable, map.variable_.size()};
            map.variable_.push_back(VariableEntry{.auxiliary = false, .bus = b, .phase = p});
        }
    }
    map.auxiliary_slots_.resize(net.components().size());
    for (std::size_t ci = 0; ci < net.components().size(); ++ci) {
        if (net.components()[ci].kind != ComponentKind::IdealTransformer) continue;
        map.auxiliary_slots_[ci] = map.variable_.size();
        map.variable_.push_back(VariableEntry{.auxiliary = true, .component = ci});
        ++map.auxiliary_count_;
    }
    return map;
}

}  // namespace cimpf
