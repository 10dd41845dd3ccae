#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "h2mm/matrix_equations.hpp"

namespace h2mm::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitDomain = 1,
  kExitIo = 2,
  kExitNotConverged = 3,
};

/// Entry point of the h2mm executable; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

/// "1.5", "-2e-3", "0.1+0.5j", "-0.2-1.5i", "2j".
Complex parse_complex(const std::string& token);
/// Comma and/or whitespace separated tokens.
CVector parse_points(const std::string& list);
std::vector<double> parse_reals(const std::string& list);

}  // namespace h2mm::cli
