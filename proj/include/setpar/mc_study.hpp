#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "setpar/estimation.hpp"
#include "setpar/model.hpp"

namespace setpar {

struct McDesign {
    SetparParams truth;
    std::vector<std::size_t> sample_sizes;
    std::size_t replications = 1000;
    std::uint64_t base_seed = 1;
    std::size_t burn_in = 500;
    FitConfig fit;

    /// Throws DomainError on an unusable design; returns warnings (e.g. an explosive regime).
    std::vector<std::string> validate() const;
    /// Stable 64-bit digest of the simulation-relevant fields.
    std::uint64_t hash() const;
};

/// Seed of replication i at sample size n; independent of execution order.
std::uint64_t replication_seed(const McDesign& design, std::size_t n, std::size_t replication);

/// Outcome of one simulated-and-fitted replication.
struct Replication {
    bool ok = false;
    std::string failure;
    std::array<double, 7> theta{};  // r, d1, a1, b1, d2, a2, b2
    std::array<double, 6> g_hat_inv_diag{};
};

Replication run_replication(const McDesign& design, std::size_t n, std::size_t index);

struct McCell {
    std::size_t n = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    bool valid = false;
    std::array<double, 7> mean_theta{};
    /// n times the sample variance of each component; absent with fewer than two successes.
    std::optional<std::array<double, 7>> n_cov;
    std::array<double, 6> mean_g_hat_inv{};
    /// Share of successful replications with r_hat equal to the true threshold.
    double frac_r_true = 0.0;
};

struct McSummary {
    std::vector<McCell> cells;
};

/// Aggregates replications in index order, so the result does not depend on how
/// they were scheduled.
McCell aggregate_cell(std::size_t n, Count true_r, const std::vector<Replication>& reps);

/// Replications run on `workers` OpenMP threads.
McSummary run_mc(const McDesign& design, int workers = 1);

/// Single-threaded reference for run_mc.
McSummary run_mc_serial(const McDesign& design);

struct ErgodicRow {
    std::uint64_t seed = 0;
    int power = 1;
    double init_a = 0.0;
    double init_b = 0.0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    /// |mean_a - mean_b| / |mean_b|
    double rel_diff = 0.0;
    /// Batch-means standard error of mean_a.
    double batch_se = 0.0;
    /// Disagreement exceeds three batch-means standard errors.
    bool flagged = false;
};

struct ErgodicReport {
    std::vector<ErgodicRow> rows;
    double max_rel_diff = 0.0;
    bool any_flagged = false;
};

/// Time averages of lambda_t^k from two initial intensities driven by the same
/// random stream per seed.
ErgodicReport ergodic_moment_check(const SetparParams& params, std::size_t n,
                                   const std::vector<std::uint64_t>& seeds,
                                   const std::vector<int>& powers,
                                   std::array<double, 2> initial_values = {0.1, 50.0});

/// Batch-means standard error of the sample mean with the given number of batches.
double batch_means_se(const std::vector<double>& x, std::size_t batches = 50);

}  // namespace setpar
