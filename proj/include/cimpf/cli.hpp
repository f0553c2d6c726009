#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cimpf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
/// `solve`: iteration limit reached; `compare`: U_max^pu above threshold.
inline constexpr int kExitNotConverged = 2;

/// `solve --input PATH [--output PATH] [--tol] [--max-iter] [--eps-tf]
/// [--shunt-floor] [--engine dense|sparse] [--verbose]`
int run_solve(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `compare A B [--threshold 1e-6]`
int run_compare(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Dispatches on the first argument (`solve` or `compare`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cimpf::cli
