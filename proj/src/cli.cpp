#include "cimpf/cli.hpp"

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "cimpf/error.hpp"
#include "cimpf/io.hpp"
#include "cimpf/solver.hpp"

namespace cimpf::cli {

namespace {

/// Runs `app` over `args` (program name excluded). Returns an exit code when
/// parsing ends the command (help or a usage error).
std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitError;
    }
    return std::nullopt;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    file << text;
    if (!file) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

}  // namespace

int run_solve(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Solve the power flow of a network file", "cimpf solve"};
    std::string input;
    std::string output;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<double> eps_tf;
    std::optional<double> shunt_floor;
    std::string engine_name;
    bool verbose = false;

    app.add_option("--input", input, "Network file (JSON)")->required();
    app.add_option("--output", output, "Solution file; stdout when omitted");
    app.add_option("--tol", tol, "Convergence threshold on the voltage update, pu (default 1e-8)");
    app.add_option("--max-iter", max_iter, "Iteration limit (default 1000)");
    app.add_option("--eps-tf", eps_tf, "Ideal transformer regularization (default 1e-10)");
    app.add_option("--shunt-floor", shunt_floor, "Earth admittance added at unshunted terminals (default 1e-8)");
    app.add_option("--engine", engine_name, "Linear solver: dense or sparse (default sparse)")
        ->check(CLI::IsMember({"dense", "sparse"}));
    app.add_flag("--verbose", verbose, "Report every iteration on stderr");
    if (auto code = parse(app, args, out, err)) return *code;

    try {
        const NetworkDocument doc = load_network_document(input);
        std::optional<EngineKind> engine;
        if (!engine_name.empty()) engine = engine_name == "dense" ? EngineKind::Dense : EngineKind::Sparse;
        SolverConfig config;
        doc.settings.apply(config);
        SettingsOverrides{.tol = tol,
                          .max_iter = max_iter,
                          .eps_tf = eps_tf,
                          .shunt_floor = shunt_floor,
                          .switch_admittance = std::nullopt,
                          .damping = std::nullopt,
                          .engine = engine}
            .apply(config);
        if (verbose) {
            config.on_iteration = [&err](int k, double delta) {
                err << "iteration " << k << ": |dU| = " << std::scientific << std::setprecision(3) << delta << "\n";
            };
        }

        const Solution solution = solve_network(doc.network, config);
        const std::string text = serialize_solution(solution, doc.network);
        if (output.empty()) {
            out << text;
        } else {
            write_text(output, text);
        }
        if (verbose || !solution.converged) {
            err << (solution.converged ? "converged" : "not converged") << " after " << solution.iterations
                << " iterations (|dU| = " << std::scientific << std::setprecision(3) << solution.final_delta
                << ", KCL residual " << solution.kcl_residual_max << ")\n";
        }
        return solution.converged ? kExitOk : kExitNotConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int run_compare(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Maximum terminal voltage difference between two solution files", "cimpf compare"};
    std::string a;
    std::string b;
    double threshold = 1e-6;
    app.add_option("A", a, "First solution file")->required();
    app.add_option("B", b, "Second solution file")->required();
    app.add_option("--threshold", threshold, "Pass threshold on U_max, pu")->capture_default_str();
    if (auto code = parse(app, args, out, err)) return *code;

    try {
        const SolutionFile first = load_solution(a);
        const SolutionFile second = load_solution(b);
        const ComparisonReport report = compare(first.voltages, second.voltages);
        out << std::scientific << std::setprecision(6);
        out << "U_max_pu " << report.max_error << "\n";
        if (report.argmax) out << "argmax " << to_string(*report.argmax) << "\n";
        for (const BusError& e : report.per_bus) out << "bus " << e.bus << " " << e.max_error << "\n";
        return report.max_error <= threshold ? kExitOk : kExitNotConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const std::string usage = "usage: cimpf solve --input PATH [options]\n       cimpf compare A B [--threshold X]\n";
    if (args.empty()) {
        err << usage;
        return kExitError;
    }
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (args.front() == "solve") return run_solve(rest, out, err);
    if (args.front() == "compare") return run_compare(rest, out, err);
    if (args.front() == "--help" || args.front() == "-h") {
        out << usage;
        return kExitOk;
    }
    err << "error: unknown command '" << args.front() << "'\n" << usage;
    return kExitError;
}

}  // namespace cimpf::cli
