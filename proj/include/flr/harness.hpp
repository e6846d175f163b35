#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flr/distributed.hpp"
#include "flr/filters.hpp"
#include "flr/grid.hpp"
#include "flr/synth.hpp"

namespace flr {

enum class RateMetric { estimation_w, prediction_risk };

RateMetric parse_metric(const std::string& text);
std::string metric_to_string(RateMetric metric);

/// Convergence-sweep configuration.  Schedules follow the prescribed rules:
/// lambda = N^{-1/(1+2 theta+p)}; the observation grid defaults to the next
/// power of two above 2 N^{(2+2 theta)/((2 alpha-1)(1+2 theta+p))} (a x2
/// safety factor keeps discretization error subdominant), clamped to
/// [8, reference_m/2]; the shard count defaults to
/// floor(N^{(1+2 theta-p)/(1+2 theta+p)} / ln N) capped at 8.  Explicit m and
/// shard lists override the rules entry-by-entry.
struct ExperimentConfig {
    int alpha = 2;
    double p = 0.5;
    double theta = 1.0;
    double sigma = 0.5;
    FilterSpec filter = FilterSpec::gradient_flow();
    std::vector<int> n_list;
    std::vector<int> m_list;      // empty -> exponent rule
    std::vector<int> shard_list;  // empty -> capped theorem schedule
    int trials = 20;
    std::uint64_t seed = 1;
    int reference_m = 1024;  // truth/decomposition grid; estimator grids nest inside it
    int truth_modes = 0;     // 0 -> min(64, rank/2)
    double slope_tolerance = 0.15;
};

/// Rejects invalid configurations (bad schedules, non-ascending N, filter
/// qualification below theta, ...) before any compute happens.
void validate_config(const ExperimentConfig& cfg);

struct SchedulePoint {
    int n = 0;
    double lambda = 0.0;
    int m = 0;
    int shards = 1;
};

std::vector<SchedulePoint> resolve_schedule(const ExperimentConfig& cfg);

/// Every (coarse_m)-th node of `fine`, endpoints included; coarse_m must
/// divide fine.m().  On nested power-of-two equispaced grids the coarse nodes
/// coincide bitwise with fine nodes.
Grid nested_subgrid(const Grid& fine, int coarse_m);

struct RatePoint {
    int n = 0;
    double lambda = 0.0;
    int m = 0;
    int shards = 1;
    double median_error = 0.0;
    double mean_error = 0.0;
    double gamma_exceed = 0.0;  // fraction of trials above gamma * N^{theory slope}
};

struct RateReport {
    RateMetric metric = RateMetric::estimation_w;
    double theory_slope = 0.0;
    double tolerance = 0.15;
    double gamma = 0.0;
    std::vector<RatePoint> points;
    std::optional<double> slope;
    std::optional<double> slope_ci;  // 2 x standard error
    std::optional<bool> pass;        // absent with fewer than 5 N-points
};

RateReport run_rate_experiment(const ExperimentConfig& cfg, RateMetric metric);

struct PartitionPoint {
    int shards = 1;
    double median_error = 0.0;
    double mean_error = 0.0;
};

struct PartitionSweepReport {
    int n = 0;
    double lambda = 0.0;
    int m = 0;
    RateMetric metric = RateMetric::estimation_w;
    double baseline_median = 0.0;  // median error at one shard
    std::vector<PartitionPoint> points;
    std::optional<int> knee_shards;  // first shard count above 1.5x the baseline
};

/// Error versus shard count at fixed N (cfg.n_list must hold exactly one
/// entry) and fixed lambda; shard_list starts at 1 and ascends.
PartitionSweepReport run_partition_sweep(const ExperimentConfig& cfg,
                                         const std::vector<int>& shard_list,
                                         RateMetric metric = RateMetric::estimation_w);

struct FilterAuditReport {
    double rho = 0.0;
    std::vector<FilterPropertyReport> filters;
    bool all_pass = false;
};

FilterAuditReport run_filter_audit(const std::vector<FilterSpec>& specs,
                                   const std::vector<double>& lambdas, double rho);

/// rho = sqrt(sum mu_j), the spectral radius proxy used to place the
/// verification cut between the near and far t ranges.
double rho_from_spectrum(const std::vector<double>& mu);

/// Left-rule convergence on the order-matched test function B_{2 alpha - 2}
/// (B_1 for alpha = 1), whose endpoint symmetry mirrors the kernel's
/// smoothness order; the exact integral is 0.
QuadratureRateResult run_quadrature_rate(int alpha, const std::vector<int>& m_list);

/// Least-squares slope of log(err) against log(n); absent when fewer than two
/// usable points or any error is nonpositive.
struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0;
    int points = 0;
};

std::optional<SlopeFit> fit_loglog_slope(const std::vector<double>& n,
                                         const std::vector<double>& err);

/// Plot data: `stem.csv` table (N,lambda,m,M,median_error,mean_error) and
/// `stem.json` summary {slope, ci, theory_slope, pass, ...}; shortest
/// round-trip number formatting, so identical runs emit identical bytes.
void emit_plotdata(const RateReport& report, const std::string& stem);
void write_rate_csv(const RateReport& report, std::ostream& os);
std::vector<RatePoint> read_rate_csv(std::istream& is);
void write_rate_json(const RateReport& report, std::ostream& os);

void write_partition_json(const PartitionSweepReport& report, std::ostream& os);
void write_filter_audit_json(const FilterAuditReport& report, std::ostream& os);

}  // namespace flr
