#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "setpar/estimation.hpp"
#include "setpar/mc_study.hpp"

namespace setpar::app {

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitEstimation = 3 };

/// Entry point shared by the executable and the tests; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parameters recovered from a fit result document.
struct FitDocument {
    ModelKind model = ModelKind::Setpar;
    SetparParams params;
    double lambda_init = 0.0;
    std::size_t n = 0;
};

FitDocument read_fit_document(const std::filesystem::path& path);

/// One row per (n, statistic) with columns n,statistic,r,d1,a1,b1,d2,a2,b2 and
/// per-cell bookkeeping; absent statistics print as NA.
std::string mc_table_csv(const McSummary& summary);

}  // namespace setpar::app
