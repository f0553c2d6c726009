#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cimpf/linalg.hpp"
#include "cimpf/network.hpp"

namespace cimpf {

/// Branch voltages below this modulus (pu) raise VoltageCollapse for the
/// voltage-dependent load models.
inline constexpr double kVoltageCollapseThreshold = 1e-6;

/// A load or generator ready for iteration: its fixed admittance Y_d and the
/// system slots of its terminals, in conn order.
struct DeviceInstance {
    std::size_t component = 0;
    const DevicePayload* payload = nullptr;
    ComplexMatrix admittance;
    std::vector<Slot> indices;
};

/// Voltage across each device branch: U_p for Kron-reduced wye, U_p - U_n with
/// an explicit neutral, M·U for delta.
[[nodiscard]] ComplexVector branch_voltages(const DevicePayload& payload, std::span<const Complex> terminal_voltages);

/// P_ref·(|V|/U_ref)^xP + j·Q_ref·(|V|/U_ref)^xQ per branch.
[[nodiscard]] ComplexVector exponential_power(const DevicePayload& payload, std::span<const Complex> branch_v);

/// Power the device model demands at the given branch voltages.
[[nodiscard]] ComplexVector demanded_power(const DevicePayload& payload, std::span<const Complex> branch_v);

/// Consumption-positive terminal currents the model demands at the given
/// terminal voltages (before splitting into linear part and compensation).
[[nodiscard]] ComplexVector demanded_currents(const DevicePayload& payload, const ComplexMatrix& admittance,
                                              std::span<const Complex> terminal_voltages);

/// I^nl = Y_d·U - I_d for a wye device (3/4-entry rows generalize to 1..4).
[[nodiscard]] ComplexVector wye_compensation(const DevicePayload& payload, const ComplexMatrix& admittance,
                                             std::span<const Complex> terminal_voltages);

/// I^nl = Y_d·U - Mᵀ·I^Δ for a delta device.
[[nodiscard]] ComplexVector delta_compensation(const DevicePayload& payload, const ComplexMatrix& admittance,
                                               std::span<const Complex> terminal_voltages);

[[nodiscard]] ComplexVector compensation(const DevicePayload& payload, const ComplexMatrix& admittance,
                                         std::span<const Complex> terminal_voltages);

/// Terminal voltages of a device from the partitioned state.
[[nodiscard]] ComplexVector gather(const DeviceInstance& device, std::span<const Complex> fixed,
                                   std::span<const Complex> variable);

/// Adds each device vector into I^v at its variable slots; entries on fixed
/// slots are dropped.
[[nodiscard]] ComplexVector scatter(std::span<const DeviceInstance> devices, std::span<const ComplexVector> values,
                                    std::size_t variable_size);

}  // namespace cimpf
