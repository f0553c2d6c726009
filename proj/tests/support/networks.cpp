#include "support/networks.hpp"

#include <numbers>

#include <Eigen/LU>

namespace cimpf::testing {

ComplexMatrix line_admittance(std::size_t n, Complex self, Complex mutual) {
    const auto dim = static_cast<Eigen::Index>(n);
    ComplexMatrix z = ComplexMatrix::Constant(dim, dim, mutual);
    z.diagonal().setConstant(self);
    ComplexMatrix y = z.inverse();
    return (y + y.transpose()) / 2.0;
}

ComplexMatrix line_shunt(std::size_t n, double half_susceptance) {
    const auto dim = static_cast<Eigen::Index>(n);
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m.diagonal().setConstant(Complex(0.0, half_susceptance));
    return m;
}

namespace {

void fill_reference(DevicePayload& p, double nominal) {
    const std::size_t n = p.s_ref.size();
    p.u_ref.assign(n, nominal);
    if (p.model == LoadModel::Exponential) {
        p.exp_p.assign(n, 1.3);
        p.exp_q.assign(n, 2.1);
    }
}

std::vector<TerminalRef> refs(const std::string& bus, const std::vector<Phase>& phases) {
    std::vector<TerminalRef> out;
    for (Phase p : phases) out.push_back({bus, p});
    return out;
}

std::vector<TerminalRef> refs(const std::string& from, const std::vector<Phase>& fp, const std::string& to,
                              const std::vector<Phase>& tp) {
    auto out = refs(from, fp);
    auto rest = refs(to, tp);
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

DevicePayload wye_device(LoadModel model, std::vector<Complex> s, bool explicit_neutral) {
    DevicePayload p{.connection = Connection::Wye,
                    .model = model,
                    .s_ref = std::move(s),
                    .u_ref = {},
                    .exp_p = {},
                    .exp_q = {},
                    .explicit_neutral = explicit_neutral};
    fill_reference(p, 1.0);
    return p;
}

DevicePayload delta_device(LoadModel model, std::vector<Complex> s) {
    DevicePayload p{.connection = Connection::Delta,
                    .model = model,
                    .s_ref = std::move(s),
                    .u_ref = {},
                    .exp_p = {},
                    .exp_q = {},
                    .explicit_neutral = false};
    fill_reference(p, std::numbers::sqrt3);
    return p;
}

void NetworkBuilder::bus(std::string id, std::vector<Phase> terminals, std::vector<Phase> grounded, bool reference) {
    Bus b;
    b.id = std::move(id);
    b.terminals = std::move(terminals);
    b.grounded = std::move(grounded);
    b.reference = reference;
    buses_.push_back(std::move(b));
}

void NetworkBuilder::line(std::string id, const std::string& from, const std::vector<Phase>& from_phases,
                          const std::string& to, const std::vector<Phase>& to_phases, ComplexMatrix series,
                          ComplexMatrix shunt_from, ComplexMatrix shunt_to) {
    components_.push_back({.id = std::move(id),
                           .kind = ComponentKind::Line,
                           .conn = refs(from, from_phases, to, to_phases),
                           .payload = LinePayload{std::move(series), std::move(shunt_from), std::move(shunt_to)}});
}

void NetworkBuilder::line(std::string id, const std::string& from, const std::string& to,
                          const std::vector<Phase>& phases, ComplexMatrix series, double half_susceptance) {
    const std::size_t n = phases.size();
    line(std::move(id), from, phases, to, phases, std::move(series), line_shunt(n, half_susceptance),
         line_shunt(n, half_susceptance));
}

void NetworkBuilder::switch_(std::string id, const std::string& from, const std::string& to,
                             const std::vector<Phase>& phases, bool closed) {
    components_.push_back({.id = std::move(id),
                           .kind = ComponentKind::Switch,
                           .conn = refs(from, phases, to, phases),
                           .payload = SwitchPayload{.conductors = phases.size(), .closed = closed}});
}

void NetworkBuilder::ideal(std::string id, const std::string& from, const std::vector<Phase>& from_phases,
                           const std::string& to, const std::vector<Phase>& to_phases, double ratio,
                           TransformerGrounding grounding) {
    components_.push_back({.id = std::move(id),
                           .kind = ComponentKind::IdealTransformer,
                           .conn = refs(from, from_phases, to, to_phases),
                           .payload = IdealTransformerPayload{.ratio = ratio, .grounding = grounding}});
}

void NetworkBuilder::two_winding(std::string id, const std::string& from, const std::vector<Phase>& from_phases,
                                 const std::string& to, const std::vector<Phase>& to_phases,
                                 const TwoWindingTransformerPayload& payload) {
    components_.push_back({.id = std::move(id),
                           .kind = ComponentKind::TwoWindingTransformer,
                           .conn = refs(from, from_phases, to, to_phases),
                           .payload = payload});
}

void NetworkBuilder::load(std::string id, const std::string& bus, const std::vector<Phase>& phases,
                          DevicePayload payload) {
    components_.push_back(
        {.id = std::move(id), .kind = ComponentKind::Load, .conn = refs(bus, phases), .payload = std::move(payload)});
}

void NetworkBuilder::generator(std::string id, const std::string& bus, const std::vector<Phase>& phases,
                               DevicePayload payload) {
    for (Complex& s : payload.s_ref) s = -s;
    components_.push_back({.id = std::move(id),
                           .kind = ComponentKind::Generator,
                           .conn = refs(bus, phases),
                           .payload = std::move(payload)});
}

NetworkModel NetworkBuilder::build() const {
    return build_network(buses_, components_);
}

NetworkModel one_wire(LoadModel model, Complex s, double y) {
    NetworkBuilder b;
    b.bus("src", {Phase::A}, {}, true);
    b.bus("load", {Phase::A});
    b.line("l1", "src", "load", {Phase::A}, ComplexMatrix::Constant(1, 1, Complex(y, 0.0)));
    b.load("d1", "load", {Phase::A}, wye_device(model, {s}, false));
    return b.build();
}

namespace {

const std::vector<Complex> kUnbalanced{{0.30, 0.10}, {0.20, 0.05}, {0.25, 0.12}};

std::string model_tag(LoadModel m) {
    return std::string(to_string(m));
}

NetworkModel en_wye_3ph(LoadModel m) {
    NetworkBuilder b;
    b.bus("src", kABCN, {Phase::N}, true);
    b.bus("b1", kABCN);
    b.line("l1", "src", "b1", kABCN, line_admittance(4), 0.001);
    b.load("d1", "b1", kABCN, wye_device(m, kUnbalanced, true));
    return b.build();
}

NetworkModel en_wye_1ph(LoadModel m) {
    NetworkBuilder b;
    b.bus("src", {Phase::A, Phase::N}, {Phase::N}, true);
    b.bus("b1", {Phase::A, Phase::N});
    b.line("l1", "src", "b1", {Phase::A, Phase::N}, line_admittance(2), 0.001);
    b.load("d1", "b1", {Phase::A, Phase::N}, wye_device(m, {{0.30, 0.10}}, true));
    return b.build();
}

NetworkModel kron_wye_3ph(LoadModel m) {
    NetworkBuilder b;
    b.bus("src", kABC, {}, true);
    b.bus("b1", kABC);
    b.line("l1", "src", "b1", kABC, line_admittance(3));
    b.load("d1", "b1", kABC, wye_device(m, kUnbalanced, false));
    return b.build();
}

NetworkModel delta_3ph(LoadModel m) {
    NetworkBuilder b;
    b.bus("src", kABC, {}, true);
    b.bus("b1", kABC);
    b.line("l1", "src", "b1", kABC, line_admittance(3), 0.001);
    b.load("d1", "b1", kABC, delta_device(m, kUnbalanced));
    return b.build();
}

NetworkModel delta_1ph(LoadModel m) {
    NetworkBuilder b;
    b.bus("src", {Phase::A, Phase::B}, {}, true);
    b.bus("b1", {Phase::A, Phase::B});
    b.line("l1", "src", "b1", {Phase::A, Phase::B}, line_admittance(2), 0.001);
    b.load("d1", "b1", {Phase::A, Phase::B}, delta_device(m, {{0.40, 0.15}}));
    return b.build();
}

NetworkModel generator_case() {
    NetworkBuilder b;
    b.bus("src", kABCN, {Phase::N}, true);
    b.bus("b1", kABCN);
    b.line("l1", "src", "b1", kABCN, line_admittance(4), 0.001);
    b.load("d1", "b1", kABCN, wye_device(LoadModel::ConstantPower, kUnbalanced, true));
    b.generator("g1", "b1", kABCN, wye_device(LoadModel::ConstantPower, {{0.4, 0.0}, {0.1, 0.0}, {0.2, 0.05}}, true));
    return b.build();
}

NetworkModel switch_closed() {
    NetworkBuilder b;
    b.bus("src", kABCN, {Phase::N}, true);
    b.bus("b1", kABCN);
    b.bus("b2", kABCN);
    b.line("l1", "src", "b1", kABCN, line_admittance(4), 0.001);
    b.switch_("s1", "b1", "b2", kABCN, true);
    b.load("d1", "b2", kABCN, wye_device(LoadModel::ConstantPower, kUnbalanced, true));
    return b.build();
}

NetworkModel switch_open_parallel() {
    NetworkBuilder b;
    b.bus("src", kABCN, {Phase::N}, true);
    b.bus("b1", kABCN);
    b.bus("b2", kABCN);
    b.line("l1", "src", "b1", kABCN, line_admittance(4), 0.001);
    b.line("l2", "b1", "b2", kABCN, line_admittance(4, {0.04, 0.08}, {0.01, 0.03}), 0.001);
    b.switch_("s1", "b1", "b2", kABCN, false);
    b.load("d1", "b2", kABCN, wye_device(LoadModel::ConstantCurrent, kUnbalanced, true));
    return b.build();
}

TwoWindingTransformerPayload winding_pair(WindingConfig from, WindingConfig to, double ratio,
                                          std::optional<Complex> magnetizing = std::nullopt) {
    return {.from_config = from,
            .to_config = to,
            .ratio = ratio,
            .series_impedance = {0.01, 0.04},
            .magnetizing_admittance = magnetizing};
}

NetworkModel yy_transformer(LoadModel m, bool explicit_neutral, std::optional<Complex> magnetizing) {
    NetworkBuilder b;
    b.bus("src", kABCN, {Phase::N}, true);
    b.bus("b1", kABC);
    b.bus("b2", kABCN, {Phase::N});
    b.line("l1", "src", "b1", kABC, line_admittance(3), 0.001);
    b.two_winding("t1", "b1", kABC, "b2", kABC,
                  winding_pair(WindingConfig::WyeGrounded, WindingConfig::WyeGrounded, 1.0, magnetizing));
    if (explicit_neutral) {
        b.bus("b3", kABCN);
        b.line("l2", "b2", "b3", kABCN, line_admittance(4), 0.001);
        b.load("d1", "b3", kABCN, wye_device(m, kUnbalanced, true));
    } else {
        b.load("d1", "b2", kABC, wye_device(m, kUnbalanced, false));
    }
    return b.build();
}

NetworkModel dy_transformer(LoadModel m) {
    NetworkBuilder b;
    b.bus("src", kABCN, {Phase::N}, true);
    b.bus("b1", kABC);
    b.bus("b2", kABCN, {Phase::N});
    b.bus("b3", kABCN);
    b.line("l1", "src", "b1", kABC, line_admittance(3), 0.001);
    b.two_winding("t1", "b1", kABC, "b2", kABC,
                  winding_pair(WindingConfig::Delta, WindingConfig::WyeGrounded, std::numbers::sqrt3));
    b.line("l2", "b2", "b3", kABCN, line_admittance(4), 0.001);
    b.load("d1", "b3", kABCN, wye_device(m, kUnbalanced, true));
    return b.build();
}

NetworkModel ideal_case(TransformerGrounding grounding) {
    NetworkBuilder b;
    switch (grounding) {
        case TransformerGrounding::Both:
            b.bus("src", {Phase::A}, {}, true);
            b.bus("b1", {Phase::A});
            b.bus("b2", {Phase::A});
            b.line("l1", "src", "b1", {Phase::A}, line_admittance(1));
            b.ideal("t1", "b1", {Phase::A}, "b2", {Phase::A}, 2.0, grounding);
            b.load("d1", "b2", {Phase::A}, wye_device(LoadModel::ConstantPower, {{0.3, 0.1}}, false));
            break;
        case TransformerGrounding::SendingEnd:
            b.bus("src", {Phase::A}, {}, true);
            b.bus("b1", {Phase::A});
            b.bus("b2", {Phase::A, Phase::N}, {Phase::N});
            b.line("l1", "src", "b1", {Phase::A}, line_admittance(1));
            b.ideal("t1", "b1", {Phase::A}, "b2", {Phase::A, Phase::N}, 2.0, grounding);
            b.load("d1", "b2", {Phase::A, Phase::N}, wye_device(LoadModel::ConstantPower, {{0.3, 0.1}}, true));
            break;
        case TransformerGrounding::None:
            b.bus("src", {Phase::A, Phase::B}, {}, true);
            b.bus("b1", {Phase::A, Phase::B});
            b.bus("b2", {Phase::A, Phase::N}, {Phase::N});
            b.line("l1", "src", "b1", {Phase::A, Phase::B}, line_admittance(2));
            b.ideal("t1", "b1", {Phase::A, Phase::B}, "b2", {Phase::A, Phase::N}, 2.0, grounding);
            b.load("d1", "b2", {Phase::A, Phase::N}, wye_device(LoadModel::ConstantPower, {{0.3, 0.1}}, true));
            break;
    }
    return b.build();
}

}  // namespace

std::vector<SuiteCase> suite() {
    std::vector<SuiteCase> out;
    out.push_back({"one_wire_constant_power", one_wire(LoadModel::ConstantPower, {0.1, 0.0}), true});
    for (LoadModel m : {LoadModel::ConstantImpedance, LoadModel::ConstantPower, LoadModel::ConstantCurrent,
                        LoadModel::Exponential}) {
        const bool nonlinear = m != LoadModel::ConstantImpedance;
        const std::string tag = model_tag(m);
        out.push_back({"en_wye_3ph_" + tag, en_wye_3ph(m), nonlinear});
        out.push_back({"en_wye_1ph_" + tag, en_wye_1ph(m), nonlinear});
        out.push_back({"delta_3ph_" + tag, delta_3ph(m), nonlinear});
        out.push_back({"delta_1ph_" + tag, delta_1ph(m), nonlinear});
        out.push_back({"kron_wye_3ph_" + tag, kron_wye_3ph(m), nonlinear});
    }
    out.push_back({"generator_and_load", generator_case(), true});
    out.push_back({"switch_closed", switch_closed(), true});
    out.push_back({"switch_open_parallel", switch_open_parallel(), true});
    out.push_back({"yy_transformer_en", yy_transformer(LoadModel::ConstantPower, true, std::nullopt), true});
    out.push_back({"yy_transformer_kron_magnetizing",
                   yy_transformer(LoadModel::ConstantCurrent, false, Complex(0.001, -0.005)), true});
    out.push_back({"yy_transformer_impedance", yy_transformer(LoadModel::ConstantImpedance, true, std::nullopt), false});
    out.push_back({"dy_transformer_en", dy_transformer(LoadModel::ConstantPower), true});
    out.push_back({"dy_transformer_exponential", dy_transformer(LoadModel::Exponential), true});
    out.push_back({"ideal_transformer_both", ideal_case(TransformerGrounding::Both), true});
    out.push_back({"ideal_transformer_sending_end", ideal_case(TransformerGrounding::SendingEnd), true});
    out.push_back({"ideal_transformer_none", ideal_case(TransformerGrounding::None), true});
    return out;
}

}  // namespace cimpf::testing
