#include "cimpf/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cimpf/error.hpp"

namespace cimpf {

using nlohmann::json;

void SettingsOverrides::apply(SolverConfig& config) const {
    if (tol) config.tol = *tol;
    if (max_iter) config.max_iter = *max_iter;
    if (eps_tf) config.eps_tf = *eps_tf;
    if (shunt_floor) config.shunt_floor = *shunt_floor;
    if (switch_admittance) config.switch_admittance = *switch_admittance;
    if (damping) config.damping = *damping;
    if (engine) config.engine = *engine;
}

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::ParseError, where + ": " + what);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < end; ++k) {
            if (text[k] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
    }
}

// -----------------------------------------------------------------------------
// Reading
// -----------------------------------------------------------------------------

/// Typed access to one JSON object with a location prefix for messages.
class Node {
public:
    Node(const json& value, std::string where) : value_(value), where_(std::move(where)) {
        if (!value_.is_object()) schema_error(where_, "expected an object");
    }

    [[nodiscard]] const std::string& where() const noexcept { return where_; }
    [[nodiscard]] bool has(const char* key) const { return value_.contains(key); }

    [[nodiscard]] const json& at(const char* key) const {
        auto it = value_.find(key);
        if (it == value_.end()) schema_error(where_, std::string("missing field '") + key + "'");
        return *it;
    }

    [[nodiscard]] std::string string(const char* key) const {
        const json& v = at(key);
        if (!v.is_string()) schema_error(where_, std::string("'") + key + "' must be a string");
        return v.get<std::string>();
    }

    [[nodiscard]] double number(const char* key) const {
        const json& v = at(key);
        if (!v.is_number()) schema_error(where_, std::string("'") + key + "' must be a number");
        return v.get<double>();
    }

    [[nodiscard]] double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    [[nodiscard]] bool boolean_or(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_boolean()) schema_error(where_, std::string("'") + key + "' must be true or false");
        return v.get<bool>();
    }

    [[nodiscard]] std::string field(const char* key) const { return where_ + "." + key; }

private:
    const json& value_;
    std::string where_;
};

Complex to_complex(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        schema_error(where, "complex numbers are written as [re, im]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<Complex> to_complex_list(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected a list of [re, im] pairs");
    std::vector<Complex> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(to_complex(v[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

std::vector<double> to_real_list(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected a list of numbers");
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number()) schema_error(where, "expected a list of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

ComplexMatrix to_square_matrix(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) schema_error(where, "matrix must be a non-empty list of rows");
    const std::size_t n = v.size();
    ComplexMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        if (!v[r].is_array() || v[r].size() != n) {
            schema_error(where, "matrix has " + std::to_string(n) + " rows but row " + std::to_string(r) + " has " +
                                    std::to_string(v[r].is_array() ? v[r].size() : 0) +
                                    " columns; a square matrix is required");
        }
        for (std::size_t c = 0; c < n; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                to_complex(v[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

std::vector<Phase> to_phases(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected a list of terminal labels");
    std::vector<Phase> out;
    for (const json& x : v) {
        if (!x.is_string()) schema_error(where, "terminal labels are strings");
        auto p = parse_phase(x.get<std::string>());
        if (!p) schema_error(where, "unknown terminal '" + x.get<std::string>() + "' (expected a, b, c or n)");
        out.push_back(*p);
    }
    return out;
}

template <class Enum, std::size_t N>
Enum to_enum(const std::string& text, const std::array<Enum, N>& values, const std::string& where) {
    for (Enum e : values) {
        if (to_string(e) == text) return e;
    }
    std::string options;
    for (Enum e : values) options += (options.empty() ? "" : ", ") + std::string(to_string(e));
    schema_error(where, "unknown value '" + text + "' (expected one of " + options + ")");
}

constexpr std::array kGroundings{TransformerGrounding::None, TransformerGrounding::SendingEnd,
                                 TransformerGrounding::Both};
constexpr std::array kWindings{WindingConfig::WyeGrounded, WindingConfig::WyeFloating, WindingConfig::Delta};
constexpr std::array kConnections{Connection::Wye, Connection::Delta};
constexpr std::array kModels{LoadModel::ConstantImpedance, LoadModel::ConstantPower, LoadModel::ConstantCurrent,
                             LoadModel::Exponential};
constexpr std::array kEngines{EngineKind::Dense, EngineKind::Sparse};

const json& list_section(const json& doc, const char* key) {
    static const json empty = json::array();
    auto it = doc.find(key);
    if (it == doc.end()) return empty;
    if (!it->is_array()) schema_error(key, "section must be a list");
    return *it;
}

std::string entry_label(const char* section, std::size_t k, const json& entry) {
    std::string label = std::string(section) + "[" + std::to_string(k) + "]";
    if (entry.is_object() && entry.contains("id") && entry["id"].is_string()) {
        label += " '" + entry["id"].get<std::string>() + "'";
    }
    return label;
}

std::vector<TerminalRef> side(const Node& n, const char* bus_key, const char* terminals_key) {
    const std::string bus = n.string(bus_key);
    std::vector<TerminalRef> out;
    for (Phase p : to_phases(n.at(terminals_key), n.field(terminals_key))) out.push_back({bus, p});
    return out;
}

std::vector<TerminalRef> two_sides(const Node& n) {
    auto conn = side(n, "from", "from_terminals");
    auto to = side(n, "to", "to_terminals");
    conn.insert(conn.end(), to.begin(), to.end());
    return conn;
}

LinePayload line_matrices(const Node& n) {
    LinePayload p;
    p.series = to_square_matrix(n.at("ys"), n.field("ys"));
    const auto dim = p.series.rows();
    auto shunt = [&](const char* key) {
        if (!n.has(key)) return ComplexMatrix(ComplexMatrix::Zero(dim, dim));
        ComplexMatrix m = to_square_matrix(n.at(key), n.field(key));
        if (m.rows() != dim) schema_error(n.field(key), "dimension differs from ys");
        return m;
    };
    p.shunt_from = shunt("ysh_from");
    p.shunt_to = shunt("ysh_to");
    return p;
}

DevicePayload device_payload(const Node& n, bool generator) {
    DevicePayload p;
    p.connection = n.has("connection") ? to_enum(n.string("connection"), kConnections, n.field("connection"))
                                       : Connection::Wye;
    p.model = n.has("model") ? to_enum(n.string("model"), kModels, n.field("model")) : LoadModel::ConstantPower;
    p.explicit_neutral = n.boolean_or("explicit_neutral", false);
    p.s_ref = to_complex_list(n.at("s_ref"), n.field("s_ref"));
    if (generator) {
        for (Complex& s : p.s_ref) s = -s;
    }
    if (n.has("u_ref")) p.u_ref = to_real_list(n.at("u_ref"), n.field("u_ref"));
    if (p.u_ref.empty()) {
        const double nominal = p.connection == Connection::Delta ? std::numbers::sqrt3 : 1.0;
        p.u_ref.assign(p.s_ref.size(), nominal);
    }
    if (n.has("xp")) p.exp_p = to_real_list(n.at("xp"), n.field("xp"));
    if (n.has("xq")) p.exp_q = to_real_list(n.at("xq"), n.field("xq"));
    return p;
}

SettingsOverrides parse_settings(const json& doc) {
    SettingsOverrides s;
    auto it = doc.find("settings");
    if (it == doc.end()) return s;
    const Node n(*it, "settings");
    if (n.has("tol")) s.tol = n.number("tol");
    if (n.has("max_iter")) {
        const json& v = n.at("max_iter");
        if (!v.is_number_integer()) schema_error(n.field("max_iter"), "must be an integer");
        s.max_iter = v.get<int>();
    }
    if (n.has("eps_tf")) s.eps_tf = n.number("eps_tf");
    if (n.has("shunt_floor")) s.shunt_floor = n.number("shunt_floor");
    if (n.has("switch_admittance")) s.switch_admittance = n.number("switch_admittance");
    if (n.has("damping")) s.damping = n.number("damping");
    if (n.has("engine")) s.engine = to_enum(n.string("engine"), kEngines, n.field("engine"));
    return s;
}

}  // namespace

NetworkDocument parse_network_document(std::string_view text) {
    const json doc = parse_json(text);
    if (!doc.is_object()) schema_error("document", "top level must be an object");

    if (!doc.contains("source")) schema_error("document", "missing section 'source'");
    const Node source(doc["source"], "source");
    const std::string reference = source.string("bus");

    std::vector<Bus> buses;
    const json& bus_list = list_section(doc, "buses");
    for (std::size_t k = 0; k < bus_list.size(); ++k) {
        const Node n(bus_list[k], entry_label("buses", k, bus_list[k]));
        Bus bus;
        bus.id = n.string("id");
        bus.terminals = to_phases(n.at("terminals"), n.field("terminals"));
        bus.vbase = n.number_or("vbase", 1.0);
        if (n.has("grounded")) bus.grounded = to_phases(n.at("grounded"), n.field("grounded"));
        bus.reference = bus.id == reference;
        if (bus.reference && source.has("vbase")) bus.vbase = source.number("vbase");
        if (bus.reference && source.has("phasors")) {
            const json& ph = source.at("phasors");
            if (!ph.is_object()) schema_error(source.field("phasors"), "expected an object keyed by terminal");
            for (const auto& [key, value] : ph.items()) {
                auto p = parse_phase(key);
                if (!p) schema_error(source.field("phasors"), "unknown terminal '" + key + "'");
                bus.fixed_phasors[*p] = to_complex(value, source.field("phasors") + "." + key);
            }
        }
        buses.push_back(std::move(bus));
    }

    std::map<std::string, LinePayload> linecodes;
    if (auto it = doc.find("linecodes"); it != doc.end()) {
        if (!it->is_object()) schema_error("linecodes", "section must be an object keyed by name");
        for (const auto& [name, value] : it->items()) {
            linecodes.emplace(name, line_matrices(Node(value, "linecodes." + name)));
        }
    }

    std::vector<Component> components;
    const json& lines = list_section(doc, "lines");
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const Node n(lines[k], entry_label("lines", k, lines[k]));
        Component c;
        c.id = n.string("id");
        c.kind = ComponentKind::Line;
        c.conn = two_sides(n);
        if (n.has("linecode")) {
            auto it = linecodes.find(n.string("linecode"));
            if (it == linecodes.end()) schema_error(n.where(), "unknown linecode '" + n.string("linecode") + "'");
            c.payload = it->second;
        } else {
            c.payload = line_matrices(n);
        }
        components.push_back(std::move(c));
    }

    const json& switches = list_section(doc, "switches");
    for (std::size_t k = 0; k < switches.size(); ++k) {
        const Node n(switches[k], entry_label("switches", k, switches[k]));
        auto conn = two_sides(n);
        SwitchPayload p{.conductors = conn.size() / 2, .closed = n.boolean_or("closed", true)};
        if (conn.size() % 2 != 0) schema_error(n.where(), "from and to terminal lists must have equal length");
        components.push_back({.id = n.string("id"), .kind = ComponentKind::Switch, .conn = conn, .payload = p});
    }

    const json& transformers = list_section(doc, "transformers");
    for (std::size_t k = 0; k < transformers.size(); ++k) {
        const Node n(transformers[k], entry_label("transformers", k, transformers[k]));
        const std::string kind = n.string("kind");
        Component c;
        c.id = n.string("id");
        c.kind = ComponentKind::IdealTransformer;
        c.conn = two_sides(n);
        if (kind == "ideal") {
            c.payload = IdealTransformerPayload{
                .ratio = n.number_or("ratio", 1.0),
                .grounding = n.has("grounding") ? to_enum(n.string("grounding"), kGroundings, n.field("grounding"))
                                                : TransformerGrounding::Both};
        } else if (kind == "two_winding") {
            c.kind = ComponentKind::TwoWindingTransformer;
            TwoWindingTransformerPayload p;
            p.from_config = to_enum(n.string("from_config"), kWindings, n.field("from_config"));
            p.to_config = to_enum(n.string("to_config"), kWindings, n.field("to_config"));
            p.ratio = n.number_or("ratio", 1.0);
            p.series_impedance = to_complex(n.at("z"), n.field("z"));
            if (n.has("y_mag")) p.magnetizing_admittance = to_complex(n.at("y_mag"), n.field("y_mag"));
            c.payload = p;
        } else {
            schema_error(n.field("kind"), "unknown transformer kind '" + kind + "' (expected ideal or two_winding)");
        }
        components.push_back(std::move(c));
    }

    for (const char* section : {"loads", "generators"}) {
        const bool generator = std::string_view(section) == "generators";
        const json& list = list_section(doc, section);
        for (std::size_t k = 0; k < list.size(); ++k) {
            const Node n(list[k], entry_label(section, k, list[k]));
            std::string id = n.string("id");
            auto conn = side(n, "bus", "terminals");
            DevicePayload payload = device_payload(n, generator);
            components.push_back({.id = std::move(id),
                                  .kind = generator ? ComponentKind::Generator : ComponentKind::Load,
                                  .conn = std::move(conn),
                                  .payload = std::move(payload)});
        }
    }

    return {build_network(std::move(buses), std::move(components)), parse_settings(doc)};
}

NetworkDocument load_network_document(const std::filesystem::path& path) {
    return parse_network_document(read_file(path));
}

NetworkModel parse_network(const std::filesystem::path& path) {
    return load_network_document(path).network;
}

// -----------------------------------------------------------------------------
// Writing
// -----------------------------------------------------------------------------

namespace {

json from_complex(Complex z) {
    return json::array({z.real(), z.imag()});
}

json from_matrix(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(from_complex(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json from_phases(std::span<const Phase> phases) {
    json out = json::array();
    for (Phase p : phases) out.push_back(std::string(to_string(p)));
    return out;
}

json from_phases(std::span<const TerminalRef> refs) {
    json out = json::array();
    for (const auto& r : refs) out.push_back(std::string(to_string(r.phase)));
    return out;
}

void write_sides(json& entry, const Component& c, std::size_t from_count) {
    const std::span<const TerminalRef> conn(c.conn);
    entry["from"] = conn.front().bus;
    entry["from_terminals"] = from_phases(conn.first(from_count));
    entry["to"] = conn[from_count].bus;
    entry["to_terminals"] = from_phases(conn.subspan(from_count));
}

}  // namespace

std::string serialize_network(const NetworkModel& net, const SettingsOverrides& settings) {
    json doc;
    const Bus& ref = net.source_buses()[net.reference_bus()];
    json phasors = json::object();
    for (const auto& [p, v] : ref.fixed_phasors) phasors[std::string(to_string(p))] = from_complex(v);
    doc["source"] = {{"bus", ref.id}, {"phasors", phasors}};

    doc["buses"] = json::array();
    for (const Bus& b : net.source_buses()) {
        doc["buses"].push_back(
            {{"id", b.id}, {"terminals", from_phases(b.terminals)}, {"vbase", b.vbase}, {"grounded", from_phases(b.grounded)}});
    }

    for (const char* key : {"lines", "switches", "transformers", "loads", "generators"}) doc[key] = json::array();
    for (const Component& c : net.source_components()) {
        json e{{"id", c.id}};
        switch (c.kind) {
            case ComponentKind::Line: {
                const auto& p = std::get<LinePayload>(c.payload);
                write_sides(e, c, static_cast<std::size_t>(p.conductors()));
                e["ys"] = from_matrix(p.series);
                e["ysh_from"] = from_matrix(p.shunt_from);
                e["ysh_to"] = from_matrix(p.shunt_to);
                doc["lines"].push_back(std::move(e));
                break;
            }
            case ComponentKind::Switch: {
                const auto& p = std::get<SwitchPayload>(c.payload);
                write_sides(e, c, p.conductors);
                e["closed"] = p.closed;
                doc["switches"].push_back(std::move(e));
                break;
            }
            case ComponentKind::IdealTransformer: {
                const auto& p = std::get<IdealTransformerPayload>(c.payload);
                e["kind"] = "ideal";
                write_sides(e, c, p.grounding == TransformerGrounding::None ? 2 : 1);
                e["ratio"] = p.ratio;
                e["grounding"] = to_string(p.grounding);
                doc["transformers"].push_back(std::move(e));
                break;
            }
            case ComponentKind::TwoWindingTransformer: {
                const auto& p = std::get<TwoWindingTransformerPayload>(c.payload);
                e["kind"] = "two_winding";
                write_sides(e, c, terminal_count(p.from_config));
                e["from_config"] = to_string(p.from_config);
                e["to_config"] = to_string(p.to_config);
                e["ratio"] = p.ratio;
                e["z"] = from_complex(p.series_impedance);
                if (p.magnetizing_admittance) e["y_mag"] = from_complex(*p.magnetizing_admittance);
                doc["transformers"].push_back(std::move(e));
                break;
            }
            case ComponentKind::Load:
            case ComponentKind::Generator: {
                const auto& p = std::get<DevicePayload>(c.payload);
                const bool generator = c.kind == ComponentKind::Generator;
                e["bus"] = c.conn.front().bus;
                e["terminals"] = from_phases(std::span<const TerminalRef>(c.conn));
                e["connection"] = to_string(p.connection);
                e["explicit_neutral"] = p.explicit_neutral;
                e["model"] = to_string(p.model);
                json s = json::array();
                for (Complex v : p.s_ref) s.push_back(from_complex(generator ? -v : v));
                e["s_ref"] = std::move(s);
                e["u_ref"] = p.u_ref;
                if (!p.exp_p.empty()) e["xp"] = p.exp_p;
                if (!p.exp_q.empty()) e["xq"] = p.exp_q;
                doc[generator ? "generators" : "loads"].push_back(std::move(e));
                break;
            }
        }
    }

    json s = json::object();
    if (settings.tol) s["tol"] = *settings.tol;
    if (settings.max_iter) s["max_iter"] = *settings.max_iter;
    if (settings.eps_tf) s["eps_tf"] = *settings.eps_tf;
    if (settings.shunt_floor) s["shunt_floor"] = *settings.shunt_floor;
    if (settings.switch_admittance) s["switch_admittance"] = *settings.switch_admittance;
    if (settings.damping) s["damping"] = *settings.damping;
    if (settings.engine) s["engine"] = to_string(*settings.engine);
    if (!s.empty()) doc["settings"] = std::move(s);
    return doc.dump(2) + "\n";
}

std::string serialize_solution(const Solution& solution, const NetworkModel& net) {
    json doc;
    doc["converged"] = solution.converged;
    doc["iterations"] = solution.iterations;
    doc["tolerance"] = solution.tolerance;
    doc["final_delta"] = solution.final_delta;
    doc["factorizations"] = solution.factorizations;
    doc["wall_time_s"] = solution.wall_time_s;
    doc["residuals"] = {{"kcl", solution.kcl_residual_max},
                        {"device_power", solution.device_power_residual_max},
                        {"transformer", solution.transformer_residual_max},
                        {"transformer_power", solution.transformer_power_max}};

    std::map<std::string, std::size_t> bus_row;
    json buses = json::array();
    for (const TerminalVoltage& v : solution.terminal_voltages) {
        auto [it, inserted] = bus_row.emplace(v.bus, buses.size());
        if (inserted) {
            double vbase = 1.0;
            if (auto b = net.find_bus(v.bus)) vbase = net.buses()[*b].vbase;
            buses.push_back({{"id", v.bus}, {"internal", v.internal}, {"vbase", vbase}, {"terminals", json::array()}});
        }
        buses[it->second]["terminals"].push_back({{"terminal", to_string(v.phase)},
                                                  {"magnitude_pu", std::abs(v.value)},
                                                  {"angle_deg", std::arg(v.value) * 180.0 / std::numbers::pi},
                                                  {"re", v.value.real()},
                                                  {"im", v.value.imag()}});
    }
    doc["buses"] = std::move(buses);

    json branches = json::array();
    for (const BranchResult& b : solution.branches) {
        json terminals = json::array();
        for (const auto& t : b.terminals) terminals.push_back(to_string(t));
        json currents = json::array();
        for (Complex i : b.currents) currents.push_back(from_complex(i));
        json powers = json::array();
        for (Complex s : b.powers) powers.push_back(from_complex(s));
        branches.push_back({{"id", b.id},
                            {"kind", to_string(b.kind)},
                            {"terminals", std::move(terminals)},
                            {"currents", std::move(currents)},
                            {"powers", std::move(powers)}});
    }
    doc["branches"] = std::move(branches);
    return doc.dump(2) + "\n";
}

SolutionFile parse_solution(std::string_view text) {
    const json doc = parse_json(text);
    const Node root(doc, "solution");
    SolutionFile out;
    out.converged = root.boolean_or("converged", false);
    out.iterations = static_cast<int>(root.number_or("iterations", 0));
    out.tolerance = root.number_or("tolerance", 0.0);
    const json& buses = root.at("buses");
    if (!buses.is_array()) schema_error(root.field("buses"), "must be a list");
    for (std::size_t k = 0; k < buses.size(); ++k) {
        const Node bus(buses[k], entry_label("buses", k, buses[k]));
        const std::string id = bus.string("id");
        const bool internal = bus.boolean_or("internal", false);
        const json& terminals = bus.at("terminals");
        if (!terminals.is_array()) schema_error(bus.field("terminals"), "must be a list");
        for (const json& t : terminals) {
            const Node term(t, bus.field("terminals"));
            auto p = parse_phase(term.string("terminal"));
            if (!p) schema_error(term.where(), "unknown terminal '" + term.string("terminal") + "'");
            out.voltages.push_back({id, *p, Complex(term.number("re"), term.number("im")), internal});
        }
    }
    return out;
}

SolutionFile load_solution(const std::filesystem::path& path) {
    return parse_solution(read_file(path));
}

ComparisonReport compare(std::span<const TerminalVoltage> a, std::span<const TerminalVoltage> b) {
    std::map<TerminalRef, Complex> lookup;
    for (const auto& v : b) lookup[{v.bus, v.phase}] = v.value;

    std::set<TerminalRef> seen;
    ComparisonReport report;
    std::map<std::string, std::size_t> bus_row;
    for (const auto& v : a) {
        const TerminalRef key{v.bus, v.phase};
        auto it = lookup.find(key);
        if (it == lookup.end()) {
            throw Error(ErrorCode::TerminalSetMismatch, "terminal " + to_string(key) + " missing from the second solution");
        }
        if (!seen.insert(key).second) {
            throw Error(ErrorCode::TerminalSetMismatch, "terminal " + to_string(key) + " listed twice");
        }
        const double error = std::abs(v.value - it->second);
        auto [row, inserted] = bus_row.emplace(v.bus, report.per_bus.size());
        if (inserted) report.per_bus.push_back({v.bus, 0.0});
        report.per_bus[row->second].max_error = std::max(report.per_bus[row->second].max_error, error);
        if (!report.argmax || error > report.max_error) {
            report.max_error = error;
            report.argmax = key;
        }
    }
    if (seen.size() != lookup.size()) {
        for (const auto& [key, value] : lookup) {
            if (!seen.contains(key)) {
                throw Error(ErrorCode::TerminalSetMismatch,
                            "terminal " + to_string(key) + " missing from the first solution");
            }
        }
    }
    return report;
}

}  // namespace cimpf
