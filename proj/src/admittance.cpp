#include "cimpf/admittance.hpp"

#include <cmath>
#include <string>

#include "cimpf/error.hpp"

namespace cimpf {

PrimitiveAdmittance line_primitive(const LinePayload& payload) {
    const Eigen::Index n = payload.series.rows();
    if (payload.series.cols() != n || payload.shunt_from.rows() != n || payload.shunt_from.cols() != n ||
        payload.shunt_to.rows() != n || payload.shunt_to.cols() != n) {
        throw Error(ErrorCode::DimensionMismatch, "line series and shunt matrices must share one square dimension");
    }
    PrimitiveAdmittance prim;
    prim.matrix.resize(2 * n, 2 * n);
    prim.matrix.topLeftCorner(n, n) = payload.series + payload.shunt_from;
    prim.matrix.topRightCorner(n, n) = -payload.series;
    prim.matrix.bottomLeftCorner(n, n) = -payload.series;
    prim.matrix.bottomRightCorner(n, n) = payload.series + payload.shunt_to;
    return prim;
}

std::optional<PrimitiveAdmittance> switch_primitive(const SwitchPayload& payload, double series_admittance,
                                                    double shunt_susceptance) {
    if (!payload.closed) return std::nullopt;
    const auto n = static_cast<Eigen::Index>(payload.conductors);
    LinePayload equivalent;
    equivalent.series = ComplexMatrix::Identity(n, n) * Complex(series_admittance, 0.0);
    equivalent.shunt_from = ComplexMatrix::Identity(n, n) * Complex(0.0, shunt_susceptance);
    equivalent.shunt_to = equivalent.shunt_from;
    return line_primitive(equivalent);
}

PrimitiveAdmittance ideal_transformer_primitive(const IdealTransformerPayload& payload, double eps) {
    const double inv = 1.0 / payload.ratio;
    // Coupling column of the auxiliary current, one entry per terminal.
    std::vector<double> coupling;
    switch (payload.grounding) {
        case TransformerGrounding::None: coupling = {inv, -inv, -1.0, 1.0}; break;
        case TransformerGrounding::SendingEnd: coupling = {inv, -1.0, 1.0}; break;
        case TransformerGrounding::Both: coupling = {inv, -1.0}; break;
    }
    const auto k = static_cast<Eigen::Index>(coupling.size());
    PrimitiveAdmittance prim;
    prim.matrix = ComplexMatrix::Zero(k + 1, k + 1);
    for (Eigen::Index i = 0; i < k; ++i) {
        prim.matrix(i, k) = coupling[static_cast<std::size_t>(i)];
        prim.matrix(k, i) = coupling[static_cast<std::size_t>(i)];
    }
    prim.matrix.diagonal().array() += Complex(eps, 0.0);
    return prim;
}

std::vector<Complex> reference_admittances(const DevicePayload& payload) {
    if (payload.u_ref.size() != payload.s_ref.size()) {
        throw Error(ErrorCode::DimensionMismatch, "s_ref and u_ref lengths differ");
    }
    std::vector<Complex> y(payload.s_ref.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double u = payload.u_ref[k];
        if (!(u > 0.0)) throw Error(ErrorCode::ZeroReferenceVoltage, "u_ref[" + std::to_string(k) + "] must be > 0");
        y[k] = std::conj(payload.s_ref[k]) / (u * u);
    }
    return y;
}

PrimitiveAdmittance wye_device_admittance(const DevicePayload& payload) {
    const std::vector<Complex> y = reference_admittances(payload);
    const auto k = static_cast<Eigen::Index>(y.size());
    PrimitiveAdmittance prim;
    if (!payload.explicit_neutral) {
        prim.matrix = ComplexMatrix::Zero(k, k);
        for (Eigen::Index i = 0; i < k; ++i) prim.matrix(i, i) = y[static_cast<std::size_t>(i)];
        return prim;
    }
    prim.matrix = ComplexMatrix::Zero(k + 1, k + 1);
    Complex total{};
    for (Eigen::Index i = 0; i < k; ++i) {
        const Complex yi = y[static_cast<std::size_t>(i)];
        prim.matrix(i, i) = yi;
        prim.matrix(i, k) = -yi;
        prim.matrix(k, i) = -yi;
        total += yi;
    }
    prim.matrix(k, k) = total;
    return prim;
}

Eigen::MatrixXd delta_incidence(std::size_t terminals) {
    if (terminals == 2) {
        Eigen::MatrixXd m(1, 2);
        m << 1.0, -1.0;
        return m;
    }
    if (terminals == 3) {
        Eigen::MatrixXd m(3, 3);
        m << 1.0, -1.0, 0.0,
             0.0, 1.0, -1.0,
            -1.0, 0.0, 1.0;
        return m;
    }
    throw Error(ErrorCode::DimensionMismatch, "delta devices connect 2 or 3 terminals");
}

PrimitiveAdmittance delta_device_admittance(const DevicePayload& payload) {
    const std::vector<Complex> y = reference_admittances(payload);
    const std::size_t terminals = y.size() == 1 ? 2 : y.size();
    const Eigen::MatrixXcd m = delta_incidence(terminals).cast<Complex>();
    const Eigen::VectorXcd yv = Eigen::Map<const Eigen::VectorXcd>(y.data(), static_cast<Eigen::Index>(y.size()));
    PrimitiveAdmittance prim;
    prim.matrix = m.transpose() * yv.asDiagonal() * m;
    return prim;
}

// -----------------------------------------------------------------------------
// Two-winding transformers
// -----------------------------------------------------------------------------

namespace {

LinePayload one_wire(Complex series) {
    LinePayload p;
    p.series = ComplexMatrix::Constant(1, 1, series);
    p.shunt_from = ComplexMatrix::Zero(1, 1);
    p.shunt_to = ComplexMatrix::Zero(1, 1);
    return p;
}

bool known(WindingConfig config) {
    return config == WindingConfig::WyeGrounded || config == WindingConfig::WyeFloating ||
           config == WindingConfig::Delta;
}

/// Low end of winding k on a side starting at conn[offset]; nullopt is earth.
std::optional<TerminalRef> winding_low(const Component& tx, WindingConfig config, std::size_t offset, std::size_t k) {
    switch (config) {
        case WindingConfig::WyeGrounded: return std::nullopt;
        case WindingConfig::WyeFloating: return tx.conn[offset + 3];
        case WindingConfig::Delta: return tx.conn[offset + (k + 1) % 3];
    }
    return std::nullopt;
}

}  // namespace

TransformerDecomposition decompose_two_winding(const Component& transformer, double from_vbase) {
    const auto* p = std::get_if<TwoWindingTransformerPayload>(&transformer.payload);
    if (p == nullptr) {
        throw Error(ErrorCode::InvalidModel, "component '" + transformer.id + "' is not a two-winding transformer");
    }
    if (!known(p->from_config) || !known(p->to_config)) {
        throw Error(ErrorCode::UnsupportedConfiguration, "transformer '" + transformer.id + "': unknown winding");
    }
    if (std::abs(p->series_impedance) == 0.0) {
        throw Error(ErrorCode::UnsupportedConfiguration,
                    "transformer '" + transformer.id + "': zero series impedance; use an ideal transformer");
    }
    const std::size_t from_count = terminal_count(p->from_config);
    if (transformer.conn.size() != from_count + terminal_count(p->to_config)) {
        throw Error(ErrorCode::InvalidModel, "transformer '" + transformer.id + "' has the wrong terminal count");
    }

    TransformerDecomposition out;
    const Complex series = 1.0 / p->series_impedance;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string tag = std::to_string(k + 1);
        Bus internal;
        internal.id = transformer.id + ".w" + tag;
        internal.terminals = {Phase::A};
        internal.vbase = from_vbase;
        internal.internal = true;
        const TerminalRef node{internal.id, Phase::A};
        out.internal_buses.push_back(std::move(internal));

        const TerminalRef& from_high = transformer.conn[k];
        const auto from_low = winding_low(transformer, p->from_config, 0, k);
        const TerminalRef& to_high = transformer.conn[from_count + k];
        const auto to_low = winding_low(transformer, p->to_config, from_count, k);

        LinePayload z = one_wire(series);
        if (p->magnetizing_admittance && !from_low) z.shunt_to(0, 0) = *p->magnetizing_admittance;
        out.components.push_back(Component{transformer.id + ".z" + tag, ComponentKind::Line, {from_high, node}, z});
        if (p->magnetizing_admittance && from_low) {
            out.components.push_back(Component{transformer.id + ".m" + tag, ComponentKind::Line, {node, *from_low},
                                               one_wire(*p->magnetizing_admittance)});
        }

        IdealTransformerPayload ideal{.ratio = p->ratio, .grounding = TransformerGrounding::None};
        std::vector<TerminalRef> conn;
        if (!from_low && !to_low) {
            ideal.grounding = TransformerGrounding::Both;
            conn = {node, to_high};
        } else if (!from_low) {
            ideal.grounding = TransformerGrounding::SendingEnd;
            conn = {node, to_high, *to_low};
        } else if (!to_low) {
            // Grounded side must be the sending end: flip the winding.
            ideal.grounding = TransformerGrounding::SendingEnd;
            ideal.ratio = 1.0 / p->ratio;
            conn = {to_high, node, *from_low};
        } else {
            conn = {node, *from_low, to_high, *to_low};
        }
        out.components.push_back(
            Component{transformer.id + ".t" + tag, ComponentKind::IdealTransformer, std::move(conn), ideal});
    }
    return out;
}

// -----------------------------------------------------------------------------
// Assembly
// -----------------------------------------------------------------------------

std::vector<StampedComponent> build_primitives(const NetworkModel& net, const IndexMap& index,
                                               const AdmittanceSettings& settings) {
    std::vector<StampedComponent> out;
    out.reserve(net.components().size());
    for (std::size_t ci = 0; ci < net.components().size(); ++ci) {
        const Component& c = net.components()[ci];
        StampedComponent stamped{.component = ci, .primitive = {}, .shunt_floor = false};
        switch (c.kind) {
            case ComponentKind::Line: {
                const auto& p = std::get<LinePayload>(c.payload);
                stamped.primitive = line_primitive(p);
                stamped.shunt_floor = p.shunt_from.isZero(0.0) && p.shunt_to.isZero(0.0);
                break;
            }
            case ComponentKind::Switch: {
                auto prim = switch_primitive(std::get<SwitchPayload>(c.payload), settings.switch_admittance,
                                             settings.shunt_floor);
                if (!prim) continue;
                stamped.primitive = std::move(*prim);
                break;
            }
            case ComponentKind::IdealTransformer:
                stamped.primitive = ideal_transformer_primitive(std::get<IdealTransformerPayload>(c.payload),
                                                                settings.eps_tf);
                stamped.shunt_floor = true;
                break;
            case ComponentKind::TwoWindingTransformer:
                throw Error(ErrorCode::InvalidModel, "unexpanded two-winding transformer '" + c.id + "'");
            case ComponentKind::Load:
            case ComponentKind::Generator: {
                const auto& p = std::get<DevicePayload>(c.payload);
                stamped.primitive =
                    p.connection == Connection::Wye ? wye_device_admittance(p) : delta_device_admittance(p);
                break;
            }
        }
        for (const TerminalRef& ref : c.conn) {
            stamped.primitive.indices.push_back(index.terminal(net.bus_index(ref), ref.phase));
        }
        if (index.has_auxiliary(ci)) stamped.primitive.indices.push_back({Partition::Variable, index.auxiliary(ci)});
        if (static_cast<std::size_t>(stamped.primitive.matrix.rows()) != stamped.primitive.indices.size()) {
            throw Error(ErrorCode::DimensionMismatch, "primitive of '" + c.id + "' does not match its terminals");
        }
        out.push_back(std::move(stamped));
    }
    return out;
}

SystemMatrices assemble_system(const NetworkModel& net, std::span<const StampedComponent> primitives,
                               const IndexMap& index, double shunt_floor) {
    const std::size_t nf = index.fixed_size();
    const std::size_t nv = index.variable_size();
    TripletList ff(nf, nf), fv(nf, nv), vf(nv, nf), vv(nv, nv);
    auto stamp = [&](Slot row, Slot col, Complex value) {
        if (value == Complex{}) return;
        const bool fixed_row = row.partition == Partition::Fixed;
        const bool fixed_col = col.partition == Partition::Fixed;
        TripletList& block = fixed_row ? (fixed_col ? ff : fv) : (fixed_col ? vf : vv);
        block.add(row.index, col.index, value);
    };

    SystemMatrices sys;
    for (const StampedComponent& s : primitives) {
        const auto& idx = s.primitive.indices;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            for (std::size_t c = 0; c < idx.size(); ++c) {
                stamp(idx[r], idx[c], s.primitive.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            }
        }
        if (!s.shunt_floor || shunt_floor == 0.0) continue;
        const std::size_t terminals = net.components()[s.component].conn.size();
        for (std::size_t t = 0; t < terminals; ++t) {
            const Complex y(0.0, shunt_floor);
            stamp(idx[t], idx[t], y);
            sys.earth_shunts.push_back({idx[t], y});
        }
    }
    sys.ff = SparseComplexMatrix::from_triplets(ff);
    sys.fv = SparseComplexMatrix::from_triplets(fv);
    sys.vf = SparseComplexMatrix::from_triplets(vf);
    sys.vv = SparseComplexMatrix::from_triplets(vv);
    sys.index = index;
    return sys;
}

}  // namespace cimpf
