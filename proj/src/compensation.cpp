#include "cimpf/compensation.hpp"

#include <cmath>
#include <string>

#include "cimpf/error.hpp"

namespace cimpf {

namespace {

void check_terminals(const DevicePayload& payload, std::size_t terminals) {
    const std::size_t branches = device_branch_count(payload, terminals);
    if (branches == 0 || branches != payload.s_ref.size()) {
        throw Error(ErrorCode::DimensionMismatch, std::to_string(terminals) + " terminal voltages do not fit a device with " +
                                                      std::to_string(payload.s_ref.size()) + " branches");
    }
}

ComplexVector linear_part(const ComplexMatrix& admittance, std::span<const Complex> u) {
    if (static_cast<std::size_t>(admittance.rows()) != u.size() || admittance.cols() != admittance.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "device admittance does not match its terminal voltages");
    }
    ComplexVector out(u.size(), Complex{});
    for (Eigen::Index r = 0; r < admittance.rows(); ++r) {
        Complex sum{};
        for (Eigen::Index c = 0; c < admittance.cols(); ++c) sum += admittance(r, c) * u[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = sum;
    }
    return out;
}

/// conj(S_k / V_k) per branch; branches without demand carry no current.
ComplexVector branch_currents(const ComplexVector& power, const ComplexVector& branch_v) {
    ComplexVector current(power.size());
    for (std::size_t k = 0; k < power.size(); ++k) {
        if (power[k] == Complex{}) {
            current[k] = Complex{};
            continue;
        }
        if (!(std::abs(branch_v[k]) >= kVoltageCollapseThreshold)) {
            throw Error(ErrorCode::VoltageCollapse, "branch " + std::to_string(k) + " voltage " +
                                                        std::to_string(std::abs(branch_v[k])) + " pu is below " +
                                                        std::to_string(kVoltageCollapseThreshold));
        }
        current[k] = std::conj(power[k] / branch_v[k]);
    }
    return current;
}

ComplexVector compensation_impl(const DevicePayload& payload, const ComplexMatrix& admittance,
                                std::span<const Complex> u) {
    check_terminals(payload, u.size());
    if (payload.model == LoadModel::ConstantImpedance) {
        (void)linear_part(admittance, u);
        return ComplexVector(u.size(), Complex{});
    }
    ComplexVector out = linear_part(admittance, u);
    const ComplexVector demanded = demanded_currents(payload, admittance, u);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= demanded[k];
    return out;
}

}  // namespace

ComplexVector branch_voltages(const DevicePayload& payload, std::span<const Complex> u) {
    check_terminals(payload, u.size());
    if (payload.connection == Connection::Delta) {
        if (u.size() == 2) return {u[0] - u[1]};
        return {u[0] - u[1], u[1] - u[2], u[2] - u[0]};
    }
    if (!payload.explicit_neutral) return ComplexVector(u.begin(), u.end());
    const Complex neutral = u.back();
    ComplexVector v(u.size() - 1);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = u[k] - neutral;
    return v;
}

ComplexVector exponential_power(const DevicePayload& payload, std::span<const Complex> branch_v) {
    if (payload.exp_p.size() != branch_v.size() || payload.exp_q.size() != branch_v.size() ||
        payload.s_ref.size() != branch_v.size() || payload.u_ref.size() != branch_v.size()) {
        throw Error(ErrorCode::DimensionMismatch, "exponential model parameters do not match the branch count");
    }
    ComplexVector s(branch_v.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double ratio = std::abs(branch_v[k]) / payload.u_ref[k];
        s[k] = Complex(payload.s_ref[k].real() * std::pow(ratio, payload.exp_p[k]),
                       payload.s_ref[k].imag() * std::pow(ratio, payload.exp_q[k]));
    }
    return s;
}

ComplexVector demanded_power(const DevicePayload& payload, std::span<const Complex> branch_v) {
    if (payload.s_ref.size() != branch_v.size()) {
        throw Error(ErrorCode::DimensionMismatch, "s_ref does not match the branch count");
    }
    ComplexVector s(branch_v.size());
    switch (payload.model) {
        case LoadModel::ConstantPower:
            s.assign(payload.s_ref.begin(), payload.s_ref.end());
            break;
        case LoadModel::ConstantCurrent:
            for (std::size_t k = 0; k < s.size(); ++k) {
                s[k] = payload.s_ref[k] * (std::abs(branch_v[k]) / payload.u_ref[k]);
            }
            break;
        case LoadModel::ConstantImpedance:
            for (std::size_t k = 0; k < s.size(); ++k) {
                const double ratio = std::abs(branch_v[k]) / payload.u_ref[k];
                s[k] = payload.s_ref[k] * (ratio * ratio);
            }
            break;
        case LoadModel::Exponential:
            s = exponential_power(payload, branch_v);
            break;
    }
    return s;
}

ComplexVector demanded_currents(const DevicePayload& payload, const ComplexMatrix& admittance,
                                std::span<const Complex> u) {
    check_terminals(payload, u.size());
    if (payload.model == LoadModel::ConstantImpedance) return linear_part(admittance, u);

    const ComplexVector v = branch_voltages(payload, u);
    const ComplexVector i = branch_currents(demanded_power(payload, v), v);
    if (payload.connection == Connection::Delta) {
        // Mᵀ·I^Δ
        if (i.size() == 1) return {i[0], -i[0]};
        return {i[0] - i[2], i[1] - i[0], i[2] - i[1]};
    }
    if (!payload.explicit_neutral) return i;
    ComplexVector out(i);
    Complex neutral{};
    for (const Complex& x : i) neutral -= x;
    out.push_back(neutral);
    return out;
}

ComplexVector wye_compensation(const DevicePayload& payload, const ComplexMatrix& admittance,
                               std::span<const Complex> u) {
    if (payload.connection != Connection::Wye) {
        throw Error(ErrorCode::InvalidArgument, "wye compensation requested for a delta device");
    }
    return compensation_impl(payload, admittance, u);
}

ComplexVector delta_compensation(const DevicePayload& payload, const ComplexMatrix& admittance,
                                 std::span<const Complex> u) {
    if (payload.connection != Connection::Delta) {
        throw Error(ErrorCode::InvalidArgument, "delta compensation requested for a wye device");
    }
    return compensation_impl(payload, admittance, u);
}

ComplexVector compensation(const DevicePayload& payload, const ComplexMatrix& admittance,
                           std::span<const Complex> u) {
    return payload.connection == Connection::Wye ? wye_compensation(payload, admittance, u)
                                                 : delta_compensation(payload, admittance, u);
}

ComplexVector gather(const DeviceInstance& device, std::span<const Complex> fixed, std::span<const Complex> variable) {
    ComplexVector u;
    u.reserve(device.indices.size());
    for (const Slot& s : device.indices) {
        const auto& source = s.partition == Partition::Fixed ? fixed : variable;
        if (s.index >= source.size()) throw Error(ErrorCode::IndexOutOfBounds, "device slot outside the state vector");
        u.push_back(source[s.index]);
    }
    return u;
}

ComplexVector scatter(std::span<const DeviceInstance> devices, std::span<const ComplexVector> values,
                      std::size_t variable_size) {
    if (devices.size() != values.size()) {
        throw Error(ErrorCode::DimensionMismatch, "one compensation vector per device expected");
    }
    ComplexVector injection(variable_size, Complex{});
    for (std::size_t d = 0; d < devices.size(); ++d) {
        const auto& indices = devices[d].indices;
        if (values[d].size() != indices.size()) {
            throw Error(ErrorCode::DimensionMismatch, "compensation vector does not match the device terminals");
        }
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (indices[k].partition != Partition::Variable) continue;
            if (indices[k].index >= variable_size) throw Error(ErrorCode::IndexOutOfBounds, "device slot outside I^v");
            injection[indices[k].index] += values[d][k];
        }
    }
    return injection;
}

}  // namespace cimpf
