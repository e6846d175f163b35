// Command-line driver for the functional linear regression experiment suite:
// convergence-rate sweeps, partition sweeps, quadrature-rate runs, filter
// property audits, packing constructions, and single fits usable as workers
// in a multi-process averaging setup.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "flr/distributed.hpp"
#include "flr/errors.hpp"
#include "flr/estimator.hpp"
#include "flr/filters.hpp"
#include "flr/grid.hpp"
#include "flr/harness.hpp"
#include "flr/minimax.hpp"
#include "flr/numio.hpp"
#include "flr/operators.hpp"
#include "flr/rng.hpp"
#include "flr/sobolev_kernel.hpp"
#include "flr/synth.hpp"

#include <json.hpp>

namespace {

std::string fmt(double v) { return std::string(flr::fmt_double(v).data()); }

/// Flags shared by the experiment subcommands, mirrored one-to-one by the
/// optional JSON config file.  Explicit command-line flags win over the file.
struct ExperimentArgs {
    flr::ExperimentConfig cfg;
    std::string filter_text = "gf";
    std::string metric_text = "w";
    std::string out;
    std::string config_path;
};

void add_experiment_flags(CLI::App* cmd, ExperimentArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file mirroring these flags");
    cmd->add_option("--alpha", args.cfg.alpha, "Sobolev order of the kernel space");
    cmd->add_option("--p", args.cfg.p, "spectral decay exponent in (0,1]");
    cmd->add_option("--theta", args.cfg.theta, "source smoothness exponent >= 0");
    cmd->add_option("--sigma", args.cfg.sigma, "noise standard deviation");
    cmd->add_option("--filter", args.filter_text, "filter: tr, itr:s=<n>, or gf");
    cmd->add_option("--N", args.cfg.n_list, "sample sizes, ascending")->delimiter(',');
    cmd->add_option("--m", args.cfg.m_list, "observation grid sizes (default: exponent rule)")
        ->delimiter(',');
    cmd->add_option("--M", args.cfg.shard_list, "shard counts (default: capped schedule)")
        ->delimiter(',');
    cmd->add_option("--trials", args.cfg.trials, "independent datasets per sample size");
    cmd->add_option("--seed", args.cfg.seed, "master seed");
    cmd->add_option("--reference-m", args.cfg.reference_m, "reference grid size for the truth");
    cmd->add_option("--truth-modes", args.cfg.truth_modes, "modes in the truth (0 = auto)");
    cmd->add_option("--tolerance", args.cfg.slope_tolerance, "slope pass tolerance");
    cmd->add_option("--metric", args.metric_text, "error metric: w or risk");
    cmd->add_option("--out", args.out, "output stem (writes <stem>.csv and <stem>.json)");
}

/// Fill in values from the JSON config file for every flag the user did not
/// pass explicitly.
void apply_config_file(const CLI::App* cmd, ExperimentArgs& args) {
    if (args.config_path.empty()) return;
    std::ifstream is(args.config_path);
    if (!is) throw flr::io_error("cannot open config file " + args.config_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw flr::config_error("config file " + args.config_path + ": " + e.what());
    }

    auto unused = [&](const std::string& flag) { return cmd->count(flag) == 0; };
    try {
        if (unused("--alpha") && j.contains("alpha")) args.cfg.alpha = j["alpha"].get<int>();
        if (unused("--p") && j.contains("p")) args.cfg.p = j["p"].get<double>();
        if (unused("--theta") && j.contains("theta")) args.cfg.theta = j["theta"].get<double>();
        if (unused("--sigma") && j.contains("sigma")) args.cfg.sigma = j["sigma"].get<double>();
        if (unused("--filter") && j.contains("filter"))
            args.filter_text = j["filter"].get<std::string>();
        if (unused("--N") && j.contains("N")) args.cfg.n_list = j["N"].get<std::vector<int>>();
        if (unused("--m") && j.contains("m")) args.cfg.m_list = j["m"].get<std::vector<int>>();
        if (unused("--M") && j.contains("M"))
            args.cfg.shard_list = j["M"].get<std::vector<int>>();
        if (unused("--trials") && j.contains("trials")) args.cfg.trials = j["trials"].get<int>();
        if (unused("--seed") && j.contains("seed"))
            args.cfg.seed = j["seed"].get<std::uint64_t>();
        if (unused("--reference-m") && j.contains("reference_m"))
            args.cfg.reference_m = j["reference_m"].get<int>();
        if (unused("--truth-modes") && j.contains("truth_modes"))
            args.cfg.truth_modes = j["truth_modes"].get<int>();
        if (unused("--tolerance") && j.contains("tolerance"))
            args.cfg.slope_tolerance = j["tolerance"].get<double>();
        if (unused("--metric") && j.contains("metric"))
            args.metric_text = j["metric"].get<std::string>();
        if (unused("--out") && j.contains("out")) args.out = j["out"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw flr::config_error("config file " + args.config_path + ": " + e.what());
    }
}

int cmd_rates(const CLI::App* cmd, ExperimentArgs& args) {
    apply_config_file(cmd, args);
    args.cfg.filter = flr::parse_filter(args.filter_text);
    const flr::RateMetric metric = flr::parse_metric(args.metric_text);

    const flr::RateReport report = flr::run_rate_experiment(args.cfg, metric);
    std::cout << "metric " << flr::metric_to_string(report.metric) << ", theory slope "
              << fmt(report.theory_slope) << "\n";
    for (const auto& pt : report.points)
        std::cout << "N=" << pt.n << " lambda=" << fmt(pt.lambda) << " m=" << pt.m
                  << " M=" << pt.shards << " median=" << fmt(pt.median_error)
                  << " mean=" << fmt(pt.mean_error) << " gamma_exceed=" << fmt(pt.gamma_exceed)
                  << "\n";
    if (report.slope) {
        std::cout << "fitted slope " << fmt(*report.slope) << " +- " << fmt(*report.slope_ci)
                  << " vs theory " << fmt(report.theory_slope) << " (tolerance "
                  << fmt(report.tolerance) << ")";
        if (report.pass)
            std::cout << (*report.pass ? ": PASS" : ": FAIL");
        else
            std::cout << ": no pass flag (fewer than 5 points)";
        std::cout << "\n";
    } else {
        std::cout << "no slope fit (degenerate errors)\n";
    }
    if (!args.out.empty()) {
        flr::emit_plotdata(report, args.out);
        std::cout << "wrote " << args.out << ".csv and " << args.out << ".json\n";
    }
    return report.pass.value_or(true) ? 0 : 2;
}

int cmd_partition_sweep(const CLI::App* cmd, ExperimentArgs& args,
                        std::vector<int>& sweep_shards) {
    apply_config_file(cmd, args);
    args.cfg.filter = flr::parse_filter(args.filter_text);
    const flr::RateMetric metric = flr::parse_metric(args.metric_text);
    // The sweep owns the shard axis; the per-N shard schedule must stay empty.
    args.cfg.shard_list.clear();

    const flr::PartitionSweepReport report =
        flr::run_partition_sweep(args.cfg, sweep_shards, metric);
    std::cout << "N=" << report.n << " lambda=" << fmt(report.lambda) << " m=" << report.m
              << " metric=" << flr::metric_to_string(report.metric) << "\n";
    for (const auto& pt : report.points)
        std::cout << "M=" << pt.shards << " median=" << fmt(pt.median_error)
                  << " mean=" << fmt(pt.mean_error) << "\n";
    if (report.knee_shards)
        std::cout << "knee at M=" << *report.knee_shards << " (first median above 1.5x baseline "
                  << fmt(report.baseline_median) << ")\n";
    else
        std::cout << "no knee: all medians within 1.5x baseline " << fmt(report.baseline_median)
                  << "\n";
    if (!args.out.empty()) {
        std::ofstream os(args.out);
        if (!os) throw flr::io_error("cannot open " + args.out + " for writing");
        flr::write_partition_json(report, os);
        std::cout << "wrote " << args.out << "\n";
    }
    return 0;
}

int cmd_quadrature(int alpha, std::vector<int>& m_list, const std::string& out) {
    const flr::QuadratureRateResult result = flr::run_quadrature_rate(alpha, m_list);
    for (std::size_t i = 0; i < m_list.size(); ++i)
        std::cout << "m=" << m_list[i] << " error=" << fmt(result.errors[i]) << "\n";
    if (result.saturated)
        std::cout << "errors at rounding level; no slope\n";
    else if (result.slope)
        std::cout << "slope " << fmt(*result.slope) << " (target <= " << fmt(-(alpha - 0.5))
                  << " + 0.2)\n";
    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) throw flr::io_error("cannot open " + out + " for writing");
        os << "m,error\n";
        for (std::size_t i = 0; i < m_list.size(); ++i)
            os << m_list[i] << ',' << fmt(result.errors[i]) << '\n';
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_filter_audit(std::vector<std::string>& filter_texts, std::vector<double>& lambdas,
                     double p, double rho, const std::string& out) {
    std::vector<flr::FilterSpec> specs;
    for (const auto& text : filter_texts) specs.push_back(flr::parse_filter(text));
    if (!(rho > 0.0)) {
        std::vector<double> mu;
        for (int j = 1; j <= 100000; ++j)
            mu.push_back(std::pow(static_cast<double>(j), -1.0 / p));
        rho = flr::rho_from_spectrum(mu);
    }
    const flr::FilterAuditReport report = flr::run_filter_audit(specs, lambdas, rho);
    for (const auto& rep : report.filters) {
        std::cout << rep.name << ": |(l+t)Psi| sup " << fmt(rep.p1_sup) << " vs B="
                  << fmt(rep.bound_b) << (rep.p1_pass ? " ok" : " VIOLATED") << "; far-range sup "
                  << fmt(rep.p3_sup) << " vs D=" << fmt(rep.bound_d)
                  << (rep.p3_pass ? " ok" : " VIOLATED") << "; residual"
                  << (rep.p2_pass ? " ok" : " VIOLATED") << "\n";
    }
    std::cout << (report.all_pass ? "all filters pass" : "some filter failed") << " (rho "
              << fmt(report.rho) << ", slack " << fmt(report.filters.empty() ? 0.05 : report.filters.front().slack)
              << ")\n";
    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) throw flr::io_error("cannot open " + out + " for writing");
        flr::write_filter_audit_json(report, os);
        std::cout << "wrote " << out << "\n";
    }
    return report.all_pass ? 0 : 2;
}

int cmd_packing(int modes, double theta, double p, double sigma, std::uint64_t seed,
                int reference_m, int alpha, std::vector<long long>& n_list,
                const std::string& out) {
    const flr::Grid grid = flr::make_grid(flr::SamplingScheme{}, reference_m);
    const flr::SobolevKernel kernel(alpha);
    const flr::SpectralDecomposition lk = flr::eigendecompose(flr::discretize(
        flr::kernel_matrix(kernel, grid), grid, flr::DiscretizedOperator::Label::sobolev_kernel));

    flr::vec_t mu(2 * modes);
    for (int j = 0; j < 2 * modes; ++j)
        mu[j] = std::pow(static_cast<double>(j + 1), -1.0 / p);
    const auto codewords = flr::varshamov_gilbert(modes, seed);
    const flr::PackingSet ps = flr::build_packing_slopes(lk, mu, theta, codewords);

    const double kl_max = flr::max_pairwise_kl(ps, sigma);
    const double kl_bound =
        2.0 / (sigma * sigma) * std::pow(mu[modes - 1], 1.0 + 2.0 * theta);
    const double sep_bound = std::pow(mu[2 * modes - 1], 2.0 * theta);
    std::cout << "J=" << ps.modes << " codewords=" << ps.size() << " (target "
              << static_cast<long long>(std::ceil(std::exp(modes / 8.0))) << ")\n";
    std::cout << "min separation " << fmt(ps.separation_lower) << " vs bound "
              << fmt(sep_bound) << "\n";
    std::cout << "max pairwise KL " << fmt(kl_max) << " vs bound " << fmt(kl_bound) << "\n";

    const flr::FanoBudgetReport budget = flr::fano_budget_report(p, theta, sigma, n_list);
    for (const auto& row : budget.rows)
        std::cout << "N=" << row.n << " J=" << row.modes << " N*KL/logL=" << fmt(row.ratio)
                  << (row.ratio < 1.0 ? " ok" : " OVER BUDGET") << "\n";

    if (!out.empty()) {
        flr::save_packing_json(ps, out);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_fit(const std::string& data_path, const std::string& grid_path, int alpha,
            const std::string& filter_text, double lambda, int shards, std::uint64_t seed,
            const std::string& out, const std::string& payload_out) {
    const flr::Grid grid = flr::load_grid_csv(grid_path);
    const flr::Dataset data = flr::load_dataset_csv(data_path, grid);
    const flr::SobolevKernel kernel(alpha);
    const flr::FilterSpec filter = flr::parse_filter(filter_text);

    const flr::DistributedEstimate fit =
        flr::fit_distributed(data, kernel, filter, lambda, shards, seed);
    std::cout << "fitted " << data.n() << " observations on m=" << grid.m() << " nodes, M="
              << shards << ", coefficient norm " << fmt(fit.estimate.coeffs.norm()) << "\n";

    if (!out.empty()) {
        flr::save_slope_json(fit.estimate, out);
        std::cout << "wrote " << out << "\n";
    }
    if (!payload_out.empty()) {
        const std::string payload = flr::export_local_model(fit.estimate);
        std::ofstream os(payload_out, std::ios::binary);
        if (!os) throw flr::io_error("cannot open " + payload_out + " for writing");
        os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        std::cout << "wrote " << payload_out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed spectral-regularization estimators for functional linear "
                 "regression, with a synthetic convergence-rate harness"};
    app.require_subcommand(1);

    ExperimentArgs rates_args;
    CLI::App* rates = app.add_subcommand("rates", "convergence-rate sweep over sample sizes");
    add_experiment_flags(rates, rates_args);

    ExperimentArgs sweep_args;
    std::vector<int> sweep_shards{1, 2, 4, 8, 16};
    CLI::App* sweep = app.add_subcommand("partition-sweep", "error versus shard count at fixed N");
    add_experiment_flags(sweep, sweep_args);
    sweep->get_option("--out")->description("JSON output path");
    sweep->add_option("--sweep-M", sweep_shards, "shard counts to sweep, starting at 1")
        ->delimiter(',');

    int quad_alpha = 2;
    std::vector<int> quad_m{32, 64, 128, 256, 512, 1024, 2048, 4096};
    std::string quad_out;
    CLI::App* quad = app.add_subcommand("quadrature", "left-rule quadrature convergence");
    quad->add_option("--alpha", quad_alpha, "Sobolev order selecting the test function");
    quad->add_option("--m", quad_m, "grid sizes")->delimiter(',');
    quad->add_option("--out", quad_out, "CSV output path");

    std::vector<std::string> audit_filters{"tr", "itr:s=2", "itr:s=4", "gf"};
    std::vector<double> audit_lambdas{1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3, 0.5};
    double audit_p = 0.5;
    double audit_rho = 0.0;
    std::string audit_out;
    CLI::App* audit = app.add_subcommand("filter-audit", "filter property verification");
    audit->add_option("--filters", audit_filters, "filter specs to audit")->delimiter(',');
    audit->add_option("--lambdas", audit_lambdas, "regularization levels")->delimiter(',');
    audit->add_option("--p", audit_p, "decay exponent for the default rho");
    audit->add_option("--rho", audit_rho, "explicit spectral radius proxy (overrides --p)");
    audit->add_option("--out", audit_out, "JSON output path");

    int pack_modes = 16;
    double pack_theta = 1.0;
    double pack_p = 0.5;
    double pack_sigma = 0.5;
    std::uint64_t pack_seed = 1;
    int pack_reference_m = 256;
    int pack_alpha = 2;
    std::vector<long long> pack_n{256, 512, 1024, 2048, 4096, 8192};
    std::string pack_out;
    CLI::App* pack = app.add_subcommand("packing", "hard-instance packing construction");
    pack->add_option("--J", pack_modes, "codeword length");
    pack->add_option("--theta", pack_theta, "source exponent");
    pack->add_option("--p", pack_p, "decay exponent");
    pack->add_option("--sigma", pack_sigma, "noise level");
    pack->add_option("--seed", pack_seed, "construction seed");
    pack->add_option("--reference-m", pack_reference_m, "grid size for the eigenbasis");
    pack->add_option("--alpha", pack_alpha, "Sobolev order");
    pack->add_option("--N", pack_n, "sample sizes for the budget table")->delimiter(',');
    pack->add_option("--out", pack_out, "JSON output path");

    std::string fit_data, fit_grid, fit_filter = "tr", fit_out, fit_payload_out;
    int fit_alpha = 2;
    double fit_lambda = 0.0;
    int fit_shards = 1;
    std::uint64_t fit_seed = 1;
    CLI::App* fit = app.add_subcommand("fit", "fit one dataset (usable as a worker process)");
    fit->add_option("--data", fit_data, "dataset CSV")->required();
    fit->add_option("--grid", fit_grid, "grid CSV")->required();
    fit->add_option("--alpha", fit_alpha, "Sobolev order");
    fit->add_option("--filter", fit_filter, "filter: tr, itr:s=<n>, or gf");
    fit->add_option("--lambda", fit_lambda, "regularization level in (0,1)")->required();
    fit->add_option("--M", fit_shards, "shard count");
    fit->add_option("--seed", fit_seed, "partition seed");
    fit->add_option("--out", fit_out, "model JSON output path");
    fit->add_option("--payload-out", fit_payload_out, "binary local-model payload path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rates->parsed()) return cmd_rates(rates, rates_args);
        if (sweep->parsed()) return cmd_partition_sweep(sweep, sweep_args, sweep_shards);
        if (quad->parsed()) return cmd_quadrature(quad_alpha, quad_m, quad_out);
        if (audit->parsed())
            return cmd_filter_audit(audit_filters, audit_lambdas, audit_p, audit_rho, audit_out);
        if (pack->parsed())
            return cmd_packing(pack_modes, pack_theta, pack_p, pack_sigma, pack_seed,
                               pack_reference_m, pack_alpha, pack_n, pack_out);
        if (fit->parsed())
            return cmd_fit(fit_data, fit_grid, fit_alpha, fit_filter, fit_lambda, fit_shards,
                           fit_seed, fit_out, fit_payload_out);
    } catch (const flr::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
