#include "setpar/mc_study.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>

#include "setpar/errors.hpp"
#include "setpar/random.hpp"

namespace setpar {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
        h ^= (word >> (8 * i)) & 0xFFu;
        h *= kFnvPrime;
    }
}

std::array<double, 7> theta_of(const SetparParams& p) {
    return {static_cast<double>(p.r), p.lower.d, p.lower.a, p.lower.b,
            p.upper.d, p.upper.a, p.upper.b};
}

McSummary run_cells(const McDesign& design, int workers) {
    design.validate();
    McSummary summary;
    for (const std::size_t n : design.sample_sizes) {
        std::vector<Replication> reps(design.replications);
        const auto count = static_cast<std::ptrdiff_t>(design.replications);
        if (workers > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
            for (std::ptrdiff_t i = 0; i < count; ++i) {
                reps[static_cast<std::size_t>(i)] = run_replication(design, n, static_cast<std::size_t>(i));
            }
        } else {
            for (std::ptrdiff_t i = 0; i < count; ++i) {
                reps[static_cast<std::size_t>(i)] = run_replication(design, n, static_cast<std::size_t>(i));
            }
        }
        summary.cells.push_back(aggregate_cell(n, design.truth.r, reps));
    }
    return summary;
}

}  // namespace

std::vector<std::string> McDesign::validate() const {
    truth.validate();
    if (sample_sizes.empty()) throw DomainError("design needs at least one sample size");
    for (const auto n : sample_sizes) {
        if (n < 2) throw DomainError("sample sizes must be at least 2");
    }
    if (replications < 1) throw DomainError("replications must be at least 1");
    fit.validate();
    std::vector<std::string> warnings;
    if (!truth.is_stable()) {
        warnings.push_back("truth violates a1 < 1 and a2 + b2 < 1; stationarity is not guaranteed");
    }
    return warnings;
}

std::uint64_t McDesign::hash() const {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, static_cast<std::uint64_t>(truth.r));
    for (const double v : {truth.lower.d, truth.lower.a, truth.lower.b, truth.upper.d,
                           truth.upper.a, truth.upper.b}) {
        fnv_mix(h, std::bit_cast<std::uint64_t>(v));
    }
    fnv_mix(h, static_cast<std::uint64_t>(burn_in));
    return h;
}

std::uint64_t replication_seed(const McDesign& design, std::size_t n, std::size_t replication) {
    return derive_seed(design.base_seed, {design.hash(), static_cast<std::uint64_t>(n),
                                          static_cast<std::uint64_t>(replication)});
}

Replication run_replication(const McDesign& design, std::size_t n, std::size_t index) {
    Replication rep;
    try {
        SimulationOptions sim;
        sim.burn_in = design.burn_in;
        const SimulatedPath path = simulate(design.truth, n, replication_seed(design, n, index), sim);
        const FitResult f = fit(path.series, design.fit);
        if (!f.converged) {
            rep.failure = "optimizer did not converge at the selected threshold";
            return rep;
        }
        if (!f.g_hat_inv.allFinite()) {
            rep.failure = "singular information matrix";
            return rep;
        }
        rep.theta = theta_of(f.params);
        for (int i = 0; i < 6; ++i) rep.g_hat_inv_diag[static_cast<std::size_t>(i)] = f.g_hat_inv(i, i);
        rep.ok = true;
    } catch (const std::exception& e) {
        rep.failure = e.what();
    }
    return rep;
}

McCell aggregate_cell(std::size_t n, Count true_r, const std::vector<Replication>& reps) {
    McCell cell;
    cell.n = n;
    std::size_t hits = 0;
    for (const auto& rep : reps) {
        if (!rep.ok) {
            ++cell.failures;
            continue;
        }
        ++cell.successes;
        for (std::size_t j = 0; j < 7; ++j) cell.mean_theta[j] += rep.theta[j];
        for (std::size_t j = 0; j < 6; ++j) cell.mean_g_hat_inv[j] += rep.g_hat_inv_diag[j];
        if (static_cast<Count>(std::llround(rep.theta[0])) == true_r) ++hits;
    }
    cell.valid = cell.successes > 0;
    if (!cell.valid) return cell;

    const auto m = static_cast<double>(cell.successes);
    for (auto& v : cell.mean_theta) v /= m;
    for (auto& v : cell.mean_g_hat_inv) v /= m;
    cell.frac_r_true = static_cast<double>(hits) / m;

    if (cell.successes >= 2) {
        std::array<double, 7> ss{};
        for (const auto& rep : reps) {
            if (!rep.ok) continue;
            for (std::size_t j = 0; j < 7; ++j) {
                const double c = rep.theta[j] - cell.mean_theta[j];
                ss[j] += c * c;
            }
        }
        std::array<double, 7> ncov{};
        for (std::size_t j = 0; j < 7; ++j) ncov[j] = static_cast<double>(n) * ss[j] / (m - 1.0);
        cell.n_cov = ncov;
    }
    return cell;
}

McSummary run_mc(const McDesign& design, int workers) {
    if (workers < 1) throw DomainError("workers must be positive");
    return run_cells(design, workers);
}

McSummary run_mc_serial(const McDesign& design) { return run_cells(design, 1); }

double batch_means_se(const std::vector<double>& x, std::size_t batches) {
    if (batches < 2 || x.size() < batches) throw DomainError("not enough data for batch means");
    const std::size_t len = x.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < len; ++i) means[b] += x[b * len + i];
        means[b] /= static_cast<double>(len);
    }
    double grand = 0.0;
    for (const double v : means) grand += v;
    grand /= static_cast<double>(batches);
    double ss = 0.0;
    for (const double v : means) ss += (v - grand) * (v - grand);
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

ErgodicReport ergodic_moment_check(const SetparParams& params, std::size_t n,
                                   const std::vector<std::uint64_t>& seeds,
                                   const std::vector<int>& powers,
                                   std::array<double, 2> initial_values) {
    params.validate();
    if (n < 100) throw DomainError("ergodic check needs at least 100 steps");
    ErgodicReport report;
    for (const std::uint64_t seed : seeds) {
        SimulationOptions opt_a{0, initial_values[0]};
        SimulationOptions opt_b{0, initial_values[1]};
        const auto path_a = simulate(params, n, seed, opt_a).intensity.values;
        const auto path_b = simulate(params, n, seed, opt_b).intensity.values;
        for (const int k : powers) {
            std::vector<double> pa(n);
            std::vector<double> pb(n);
            for (std::size_t t = 0; t < n; ++t) {
                pa[t] = std::pow(path_a[t], k);
                pb[t] = std::pow(path_b[t], k);
            }
            ErgodicRow row;
            row.seed = seed;
            row.power = k;
            row.init_a = initial_values[0];
            row.init_b = initial_values[1];
            for (std::size_t t = 0; t < n; ++t) {
                row.mean_a += pa[t];
                row.mean_b += pb[t];
            }
            row.mean_a /= static_cast<double>(n);
            row.mean_b /= static_cast<double>(n);
            row.rel_diff = std::fabs(row.mean_a - row.mean_b) / std::fabs(row.mean_b);
            row.batch_se = batch_means_se(pa);
            const double se_b = batch_means_se(pb);
            row.flagged = std::fabs(row.mean_a - row.mean_b) >
                          3.0 * std::sqrt(row.batch_se * row.batch_se + se_b * se_b);
            report.max_rel_diff = std::max(report.max_rel_diff, row.rel_diff);
            report.any_flagged = report.any_flagged || row.flagged;
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace setpar
