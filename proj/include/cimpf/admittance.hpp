#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cimpf/linalg.hpp"
#include "cimpf/network.hpp"

namespace cimpf {

/// Dense primitive matrix of one component plus the system slot of each local
/// row/column. `indices` is filled by `build_primitives`; the per-kind
/// constructors below leave it empty.
struct PrimitiveAdmittance {
    ComplexMatrix matrix;
    std::vector<Slot> indices;
};

struct AdmittanceSettings {
    /// Diagonal regularization of ideal transformer matrices (pu).
    double eps_tf = 1e-10;
    /// Capacitive susceptance added at terminals lacking any shunt (pu).
    double shunt_floor = 1e-8;
    /// Series admittance of a closed switch (pu).
    double switch_admittance = 1e4;
};

// -----------------------------------------------------------------------------
// Per-kind primitive matrices
// -----------------------------------------------------------------------------

/// [[Ys + Ysh_from, -Ys], [-Ys, Ys + Ysh_to]]. Throws DimensionMismatch.
[[nodiscard]] PrimitiveAdmittance line_primitive(const LinePayload& payload);

/// Closed switches behave as a line with Ys = y_sw·I and Ysh = j·shunt·I on
/// both ends; open switches yield nothing.
[[nodiscard]] std::optional<PrimitiveAdmittance> switch_primitive(const SwitchPayload& payload,
                                                                  double series_admittance,
                                                                  double shunt_susceptance);

/// Augmented matrix over [from terminals, to terminals, I_aux], + eps·I.
/// The auxiliary row carries a zero current on the right-hand side.
[[nodiscard]] PrimitiveAdmittance ideal_transformer_primitive(const IdealTransformerPayload& payload,
                                                              double eps);

/// Y_ref = conj(S_ref) ⊘ U_ref²; diag(Y_ref) when Kron-reduced, bordered with
/// the neutral row/column when the neutral is explicit.
[[nodiscard]] PrimitiveAdmittance wye_device_admittance(const DevicePayload& payload);

/// Mᵀ·diag(Y^Δ_ref)·M with M the phase-to-phase incidence matrix.
[[nodiscard]] PrimitiveAdmittance delta_device_admittance(const DevicePayload& payload);

/// Phase-to-phase incidence matrix for a delta device with 2 or 3 terminals
/// (1×2 or 3×3).
[[nodiscard]] Eigen::MatrixXd delta_incidence(std::size_t terminals);

/// Per-branch reference admittances conj(S_ref) / U_ref². Throws
/// ZeroReferenceVoltage.
[[nodiscard]] std::vector<Complex> reference_admittances(const DevicePayload& payload);

// -----------------------------------------------------------------------------
// Two-winding transformer decomposition
// -----------------------------------------------------------------------------

struct TransformerDecomposition {
    std::vector<Bus> internal_buses;
    std::vector<Component> components;
};

/// Expands a three-phase two-winding transformer into, per winding, an ideal
/// single-phase transformer and a one-wire series impedance line through an
/// internal bus (plus a magnetizing branch when given). `from_vbase` sets the
/// internal bus base voltage. Throws UnsupportedConfiguration.
[[nodiscard]] TransformerDecomposition decompose_two_winding(const Component& transformer, double from_vbase);

// -----------------------------------------------------------------------------
// System assembly
// -----------------------------------------------------------------------------

struct StampedComponent {
    std::size_t component = 0;
    PrimitiveAdmittance primitive;
    /// Whether the shunt floor is applied at this component's bus terminals.
    bool shunt_floor = false;
};

/// Diagonal admittance to earth added by the shunt floor.
struct EarthShunt {
    Slot slot;
    Complex admittance;
};

struct SystemMatrices {
    SparseComplexMatrix ff;
    SparseComplexMatrix fv;
    SparseComplexMatrix vf;
    SparseComplexMatrix vv;
    IndexMap index;
    std::vector<EarthShunt> earth_shunts;
};

/// Primitive of every stampable component (open switches dropped), with
/// system slots resolved through `index`.
[[nodiscard]] std::vector<StampedComponent> build_primitives(const NetworkModel& net, const IndexMap& index,
                                                             const AdmittanceSettings& settings);

/// Adds every primitive into the four partition blocks and the shunt floor at
/// the terminals of flagged components.
[[nodiscard]] SystemMatrices assemble_system(const NetworkModel& net, std::span<const StampedComponent> primitives,
                                             const IndexMap& index, double shunt_floor);

}  // namespace cimpf
