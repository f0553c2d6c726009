#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace cimpf {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

// -----------------------------------------------------------------------------
// Terminals and buses
// -----------------------------------------------------------------------------

enum class Phase : std::uint8_t { A = 0, B = 1, C = 2, N = 3 };

inline constexpr std::array<Phase, 4> kAllPhases{Phase::A, Phase::B, Phase::C, Phase::N};

[[nodiscard]] std::string_view to_string(Phase phase) noexcept;
[[nodiscard]] std::optional<Phase> parse_phase(std::string_view text) noexcept;
[[nodiscard]] constexpr bool is_neutral(Phase phase) noexcept { return phase == Phase::N; }

struct Bus {
    std::string id;
    std::vector<Phase> terminals;
    /// Line-to-neutral base voltage in volts. Only used to report SI values.
    double vbase = 1.0;
    std::vector<Phase> grounded;
    bool reference = false;
    /// Per-unit phasors of the reference bus. Missing phase entries are filled
    /// with the balanced set 1∠0°, 1∠-120°, 1∠120° by build_network.
    std::map<Phase, Complex> fixed_phasors;
    /// Set on buses generated by transformer decomposition.
    bool internal = false;

    [[nodiscard]] bool has_terminal(Phase phase) const noexcept;
    [[nodiscard]] bool is_grounded(Phase phase) const noexcept;

    bool operator==(const Bus&) const = default;
};

struct TerminalRef {
    std::string bus;
    Phase phase = Phase::A;

    auto operator<=>(const TerminalRef&) const = default;
};

[[nodiscard]] std::string to_string(const TerminalRef& ref);

// -----------------------------------------------------------------------------
// Components
// -----------------------------------------------------------------------------

enum class ComponentKind { Line, Switch, IdealTransformer, TwoWindingTransformer, Load, Generator };

[[nodiscard]] std::string_view to_string(ComponentKind kind) noexcept;

/// Per-unit series and shunt admittances of an n-conductor line (n <= 4).
struct LinePayload {
    ComplexMatrix series;
    ComplexMatrix shunt_from;
    ComplexMatrix shunt_to;

    [[nodiscard]] Eigen::Index conductors() const noexcept { return series.rows(); }
    bool operator==(const LinePayload& other) const;
};

struct SwitchPayload {
    std::size_t conductors = 1;
    bool closed = true;

    bool operator==(const SwitchPayload&) const = default;
};

/// Terminal layout of the single-phase ideal transformer. `None` has two
/// terminals per side, `SendingEnd` grounds the second sending terminal,
/// `Both` grounds the second terminal on both sides.
enum class TransformerGrounding { None, SendingEnd, Both };

[[nodiscard]] std::string_view to_string(TransformerGrounding grounding) noexcept;
[[nodiscard]] std::size_t terminal_count(TransformerGrounding grounding) noexcept;

struct IdealTransformerPayload {
    double ratio = 1.0;
    TransformerGrounding grounding = TransformerGrounding::Both;

    bool operator==(const IdealTransformerPayload&) const = default;
};

enum class WindingConfig { WyeGrounded, WyeFloating, Delta };

[[nodiscard]] std::string_view to_string(WindingConfig config) noexcept;
/// Number of bus terminals a three-phase winding occupies (4 for a floating
/// wye, whose neutral is an explicit terminal).
[[nodiscard]] std::size_t terminal_count(WindingConfig config) noexcept;

/// Three-phase two-winding transformer. The series impedance is referred to
/// the from-side winding; `ratio` is the per-unit winding voltage ratio
/// (from winding / to winding).
struct TwoWindingTransformerPayload {
    WindingConfig from_config = WindingConfig::WyeGrounded;
    WindingConfig to_config = WindingConfig::WyeGrounded;
    double ratio = 1.0;
    Complex series_impedance{0.0, 0.0};
    std::optional<Complex> magnetizing_admittance;

    bool operator==(const TwoWindingTransformerPayload&) const = default;
};

enum class Connection { Wye, Delta };
enum class LoadModel { ConstantImpedance, ConstantPower, ConstantCurrent, Exponential };

[[nodiscard]] std::string_view to_string(Connection connection) noexcept;
[[nodiscard]] std::string_view to_string(LoadModel model) noexcept;

/// Load or generator parameters, one entry per device branch (phase-to-neutral
/// for wye, phase-to-phase for delta). Powers are consumption-positive: a
/// generator stores its setpoint negated.
struct DevicePayload {
    Connection connection = Connection::Wye;
    LoadModel model = LoadModel::ConstantPower;
    std::vector<Complex> s_ref;
    std::vector<double> u_ref;
    std::vector<double> exp_p;
    std::vector<double> exp_q;
    bool explicit_neutral = false;

    bool operator==(const DevicePayload&) const = default;
};

/// Number of device branches implied by a connection and a terminal count.
[[nodiscard]] std::size_t device_branch_count(const DevicePayload& payload, std::size_t terminals) noexcept;

using Payload = std::variant<LinePayload, SwitchPayload, IdealTransformerPayload,
                             TwoWindingTransformerPayload, DevicePayload>;

struct Component {
    std::string id;
    ComponentKind kind = ComponentKind::Line;
    /// Component-bus-terminal rows; for two-bus elements the from side comes first.
    std::vector<TerminalRef> conn;
    Payload payload;

    bool operator==(const Component&) const = default;
};

[[nodiscard]] bool is_device(ComponentKind kind) noexcept;

// -----------------------------------------------------------------------------
// Network model
// -----------------------------------------------------------------------------

struct BusTerminal {
    std::size_t bus = 0;
    Phase phase = Phase::A;

    auto operator<=>(const BusTerminal&) const = default;
};

struct ComponentBus {
    std::size_t component = 0;
    std::size_t bus = 0;

    auto operator<=>(const ComponentBus&) const = default;
};

struct ComponentTerminal {
    std::size_t component = 0;
    std::size_t bus = 0;
    Phase phase = Phase::A;

    auto operator<=>(const ComponentTerminal&) const = default;
};

/// Validated, immutable network. Two-winding transformers are expanded into
/// ideal transformers, impedance lines and internal buses; `buses()` and
/// `components()` describe the expanded circuit while `source_buses()` and
/// `source_components()` keep the input as given.
class NetworkModel {
public:
    [[nodiscard]] const std::vector<Bus>& buses() const noexcept { return buses_; }
    [[nodiscard]] const std::vector<Component>& components() const noexcept { return components_; }
    [[nodiscard]] const std::vector<Bus>& source_buses() const noexcept { return source_buses_; }
    [[nodiscard]] const std::vector<Component>& source_components() const noexcept { return source_components_; }

    [[nodiscard]] std::size_t reference_bus() const noexcept { return reference_bus_; }
    [[nodiscard]] std::optional<std::size_t> find_bus(std::string_view id) const;
    [[nodiscard]] std::optional<std::size_t> find_component(std::string_view id) const;
    [[nodiscard]] std::size_t bus_index(const TerminalRef& ref) const;

    /// T^bt, ordered by bus then terminal position.
    [[nodiscard]] const std::vector<BusTerminal>& bus_terminals() const noexcept { return bus_terminals_; }
    /// T^bus, ordered by component.
    [[nodiscard]] const std::vector<ComponentBus>& component_buses() const noexcept { return component_buses_; }
    /// T^term, in component conn order.
    [[nodiscard]] const std::vector<ComponentTerminal>& component_terminals() const noexcept { return component_terminals_; }

    /// Equality of the input description (source buses and components).
    bool operator==(const NetworkModel& other) const;

private:
    friend NetworkModel build_network(std::vector<Bus> buses, std::vector<Component> components);

    std::vector<Bus> source_buses_;
    std::vector<Component> source_components_;
    std::vector<Bus> buses_;
    std::vector<Component> components_;
    std::map<std::string, std::size_t, std::less<>> bus_lookup_;
    std::map<std::string, std::size_t, std::less<>> component_lookup_;
    std::size_t reference_bus_ = 0;
    std::vector<BusTerminal> bus_terminals_;
    std::vector<ComponentBus> component_buses_;
    std::vector<ComponentTerminal> component_terminals_;
};

/// Validates the input, expands two-winding transformers and derives the
/// topology sets. Throws cimpf::Error with DuplicateId, DanglingTerminalRef,
/// NoReferenceBus, DisconnectedTerminal, InvalidModel or
/// UnsupportedConfiguration.
[[nodiscard]] NetworkModel build_network(std::vector<Bus> buses, std::vector<Component> components);

// -----------------------------------------------------------------------------
// Fixed / variable partition
// -----------------------------------------------------------------------------

enum class Partition : std::uint8_t { Fixed, Variable };

struct Slot {
    Partition partition = Partition::Variable;
    std::size_t index = 0;

    auto operator<=>(const Slot&) const = default;
};

/// What a variable index stands for: a bus terminal voltage or the auxiliary
/// current of an ideal transformer.
struct VariableEntry {
    bool auxiliary = false;
    std::size_t bus = 0;        // valid when !auxiliary
    Phase phase = Phase::A;     // valid when !auxiliary
    std::size_t component = 0;  // valid when auxiliary

    bool operator==(const VariableEntry&) const = default;
};

class IndexMap {
public:
    [[nodiscard]] Slot terminal(std::size_t bus, Phase phase) const;
    [[nodiscard]] std::size_t auxiliary(std::size_t component) const;
    [[nodiscard]] bool has_auxiliary(std::size_t component) const noexcept;

    [[nodiscard]] std::size_t fixed_size() const noexcept { return fixed_.size(); }
    [[nodiscard]] std::size_t variable_size() const noexcept { return variable_.size(); }
    [[nodiscard]] std::size_t auxiliary_count() const noexcept { return auxiliary_count_; }

    [[nodiscard]] const std::vector<BusTerminal>& fixed_entries() const noexcept { return fixed_; }
    [[nodiscard]] const std::vector<VariableEntry>& variable_entries() const noexcept { return variable_; }

    /// U^f: reference phasors and zeros for grounded neutrals.
    [[nodiscard]] std::vector<Complex> fixed_voltages(const NetworkModel& net) const;

    bool operator==(const IndexMap&) const = default;

private:
    friend IndexMap index_terminals(const NetworkModel& net);

    std::vector<std::array<std::optional<Slot>, 4>> terminal_slots_;
    std::vector<std::optional<std::size_t>> auxiliary_slots_;
    std::vector<BusTerminal> fixed_;
    std::vector<VariableEntry> variable_;
    std::size_t auxiliary_count_ = 0;
};

/// Fixed: reference bus phase terminals and grounded neutrals. Everything else,
/// plus one auxiliary per ideal transformer, is variable.
[[nodiscard]] IndexMap index_terminals(const NetworkModel& net);

}  // namespace cimpf
