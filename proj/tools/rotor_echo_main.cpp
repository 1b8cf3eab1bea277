// rotor-echo: config-driven experiment runner over the kicked-rotator
// fidelity engines.  Subcommands: quantum, semiclassical, classical, sweep,
// tau1, fit, compare.  All outputs are deterministic CSV files carrying the
// resolved configuration in their header comments.
//
// Exit codes: 0 success, 1 validation error, 2 resource-budget guard,
// 3 analysis error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "loschmidt/analysis.hpp"
#include "loschmidt/classical.hpp"
#include "loschmidt/config.hpp"
#include "loschmidt/csv.hpp"
#include "loschmidt/model.hpp"
#include "loschmidt/quantum.hpp"
#include "loschmidt/semiclassical.hpp"

namespace {

using namespace loschmidt;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int jobs = 1;
    std::vector<std::string> sets;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    apply_overrides(cfg, args.sets);
    // validate the model/packet blocks up front
    const RotorParams params = cfg.rotor();
    (void)cfg.packet(params);
    if (cfg.t_max < 1) throw validation_error("run.t_max must be >= 1");
    return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    return (std::filesystem::path(args.out_dir) / name).string();
}

std::vector<std::string> header(const ExperimentConfig& cfg, const std::string& subcommand) {
    std::vector<std::string> lines;
    lines.push_back("rotor-echo " + subcommand);
    for (const std::string& l : config_echo(cfg)) lines.push_back(l);
    return lines;
}

// ---------------------------------------------------------------------------

void cmd_quantum(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const RotorParams params = cfg.rotor();
    const PacketSpec pk = cfg.packet(params);
    const FidelitySeries fs = fidelity_series(pk, params, cfg.t_max);

    CsvTable table;
    table.comments = header(cfg, "quantum");
    table.columns = {"t", "M", "Re_m", "Im_m"};
    for (std::size_t t = 0; t <= cfg.t_max; ++t)
        table.rows.push_back({static_cast<double>(t), fs.m_sq[t], fs.m_amp[t].real(),
                              fs.m_amp[t].imag()});
    write_csv(out_path(args, cfg.output + ".csv"), table);
}

void write_estimates_sidecar(const CommonArgs& args, const ExperimentConfig& cfg,
                             const OrbitEstimates& est, const LocalDerivatives& d,
                             const TimeScales& scales) {
    CsvTable table;
    table.comments = header(cfg, "estimates");
    if (!est.regular || !d.reliable)
        table.comments.push_back("estimates unreliable: orbit convergence diagnostics failed");
    table.columns = {"nu",        "nu_err",      "nu_prime",   "nu_prime_err",
                     "u_i",       "u_i_err",     "u_i_prime",  "u_i_prime_err",
                     "u_i_dd",    "u_i_dd_err",  "fd_step",    "tau1",
                     "tau1_is_lower_bound",      "tau_s",      "t_plateau",
                     "t_crossover",              "regular",    "libration"};
    table.rows.push_back({est.nu, est.nu_err, d.nu_prime, d.nu_prime_err, est.u_i, est.u_i_err,
                          d.u_i_prime, d.u_i_prime_err, d.u_i_double_prime,
                          d.u_i_double_prime_err, d.step, scales.tau1,
                          scales.tau1_is_lower_bound ? 1.0 : 0.0, scales.tau_s, scales.t_plateau,
                          scales.t_crossover, (est.regular && d.reliable) ? 1.0 : 0.0,
                          est.type == TorusType::libration ? 1.0 : 0.0});
    write_csv(out_path(args, cfg.output + "_estimates.csv"), table);
}

void cmd_classical(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const RotorParams params = cfg.rotor();
    const PacketSpec pk = cfg.packet(params);
    const PhasePoint start{pk.r0, pk.p0};

    const Trajectory traj = evolve_trajectory(start, params.k, cfg.t_max);
    const ActionSeries action =
        action_difference_series(start, params.k, cfg.t_max, cfg.estimator_steps);

    CsvTable table;
    table.comments = header(cfg, "classical");
    if (!action.regular)
        table.comments.push_back("estimates unreliable: orbit convergence diagnostics failed");
    table.columns = {"t", "r", "p", "r_unwrapped", "dS_over_eps", "s_f"};
    for (std::size_t t = 0; t <= cfg.t_max; ++t)
        table.rows.push_back({static_cast<double>(t), traj.r[t], traj.p[t], traj.r_unwrapped[t],
                              action.dS_over_eps[t], action.s_f[t]});
    write_csv(out_path(args, cfg.output + "_trajectory.csv"), table);

    const double h = cfg.resolved_fd_step(pk);
    const LocalDerivatives d =
        local_derivatives(pk.r0, pk.p0, params.k, h, cfg.estimator_steps);
    const Trajectory est_traj = evolve_trajectory(start, params.k, cfg.estimator_steps);
    const OrbitEstimates est = orbit_estimates(est_traj);
    const std::vector<double> kpp = k_pp_series(pk.r0, pk.p0, params.k, h, cfg.t_max);
    const TimeScales scales = make_time_scales(pk, params, d, kpp);
    write_estimates_sidecar(args, cfg, est, d, scales);
}

void cmd_semiclassical(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const RotorParams params = cfg.rotor();
    const PacketSpec pk = cfg.packet(params);
    const double h = cfg.resolved_fd_step(pk);

    const LocalDerivatives d =
        local_derivatives(pk.r0, pk.p0, params.k, h, cfg.estimator_steps);
    const Trajectory est_traj =
        evolve_trajectory(PhasePoint{pk.r0, pk.p0}, params.k, cfg.estimator_steps);
    const OrbitEstimates est = orbit_estimates(est_traj);

    const std::vector<double> kp = k_p_series(pk.r0, pk.p0, params.k, h, cfg.t_max);
    const std::vector<double> kpp = k_pp_series(pk.r0, pk.p0, params.k, h, cfg.t_max);

    GridControl grid;
    grid.span_in_wp = cfg.p0_grid_span_in_wp;
    grid.nu_prime = d.nu_prime;
    grid.max_points = cfg.quad_budget;
    grid.jobs = args.jobs;
    SemiclassicalSeries series;
    series.m_sc = m_sc_integral(pk, params, cfg.t_max, grid);
    series.m_sc1 = m_sc1_series(pk, params, kp);
    series.m_sc2 = m_sc2_series(pk, params, d, cfg.msc2_c, cfg.t_max);
    const TimeScales scales = make_time_scales(pk, params, d, kpp);

    CsvTable table;
    table.comments = header(cfg, "semiclassical");
    if (!est.regular || !d.reliable)
        table.comments.push_back("estimates unreliable: orbit convergence diagnostics failed");
    table.columns = {"t", "M_sc_integral", "M_sc1", "M_sc2"};
    for (std::size_t t = 0; t <= cfg.t_max; ++t)
        table.rows.push_back({static_cast<double>(t), std::norm(series.m_sc[t]),
                              series.m_sc1[t], series.m_sc2[t]});
    write_csv(out_path(args, cfg.output + ".csv"), table);
    write_estimates_sidecar(args, cfg, est, d, scales);
}

void cmd_sweep(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    if (cfg.sweep_sigma.empty())
        throw validation_error("sweep: config needs a sweep.sigma list");

    // classical rates are sigma-independent; estimate once
    const RotorParams base = cfg.rotor();
    const PacketSpec pk = cfg.packet(base);
    const double h = cfg.resolved_fd_step(pk);
    const LocalDerivatives d = local_derivatives(pk.r0, pk.p0, base.k, h, cfg.estimator_steps);

    std::vector<std::future<void>> tasks;
    std::size_t next = 0;
    auto run_one = [&](double sigma) {
        ExperimentConfig c = cfg;
        c.sigma = sigma;
        const RotorParams params = c.rotor();
        const FidelitySeries fs = fidelity_series(pk, params, c.t_max);
        CsvTable table;
        table.comments = header(c, "sweep");
        table.columns = {"t", "M", "Re_m", "Im_m"};
        for (std::size_t t = 0; t <= c.t_max; ++t)
            table.rows.push_back({static_cast<double>(t), fs.m_sq[t], fs.m_amp[t].real(),
                                  fs.m_amp[t].imag()});
        write_csv(out_path(args, cfg.output + "_sigma" + format_shortest(sigma) + ".csv"), table);
    };
    const int workers = std::max(1, args.jobs);
    while (next < cfg.sweep_sigma.size()) {
        tasks.clear();
        for (int w = 0; w < workers && next < cfg.sweep_sigma.size(); ++w, ++next)
            tasks.push_back(std::async(std::launch::async, run_one, cfg.sweep_sigma[next]));
        for (auto& t : tasks) t.get();
    }

    const BetaCurve beta = beta_of_sigma(cfg.sweep_sigma, d.u_i_prime, d.nu_prime);
    CsvTable summary;
    summary.comments = header(cfg, "sweep beta summary");
    summary.columns = {"sigma", "m", "beta", "period"};
    for (std::size_t i = 0; i < beta.sigma.size(); ++i)
        summary.rows.push_back({beta.sigma[i], static_cast<double>(beta.m[i]), beta.beta[i],
                                beta.period});
    write_csv(out_path(args, cfg.output + "_beta.csv"), summary);
}

void cmd_tau1(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    if (cfg.scan_p0_over_pi.empty())
        throw validation_error("tau1: config needs a scan.p0_over_pi list");
    const RotorParams params = cfg.rotor();

    CsvTable table;
    table.comments = header(cfg, "tau1 scan");
    table.columns = {"p0_over_pi", "tau1_estimate", "tau1_is_lower_bound", "tau1_empirical",
                     "crossed", "truncated"};
    for (double p0pi : cfg.scan_p0_over_pi) {
        ExperimentConfig c = cfg;
        c.p0_over_pi = p0pi;
        const PacketSpec pk = c.packet(params);
        const double h = c.resolved_fd_step(pk);
        const std::vector<double> kpp = k_pp_series(pk.r0, pk.p0, params.k, h, c.t_max);
        const TimeScales est = tau1_estimate(pk, params, kpp);
        const FidelitySeries fs = fidelity_series(pk, params, c.t_max);
        const std::vector<double> kp = k_p_series(pk.r0, pk.p0, params.k, h, c.t_max);
        const std::vector<double> msc1 = m_sc1_series(pk, params, kp);
        const Tau1Crossing cross = empirical_tau1(fs.m_sq, msc1);
        table.rows.push_back({p0pi, est.tau1, est.tau1_is_lower_bound ? 1.0 : 0.0, cross.t,
                              cross.crossed ? 1.0 : 0.0, cross.truncated ? 1.0 : 0.0});
    }
    write_csv(out_path(args, cfg.output + "_tau1.csv"), table);
}

void cmd_fit(const CommonArgs& args, const std::string& in_path, std::size_t cli_t_lo,
             std::size_t cli_t_hi, std::size_t cli_smooth) {
    const ExperimentConfig cfg = resolve_config(args);
    const RotorParams params = cfg.rotor();
    const PacketSpec pk = cfg.packet(params);

    std::vector<double> m;
    if (!in_path.empty()) {
        m = csv_column(read_csv(in_path), "M");
    } else {
        m = fidelity_series(pk, params, cfg.t_max).m_sq;
    }

    std::size_t t_lo = cli_t_lo ? cli_t_lo : cfg.fit_t_lo;
    std::size_t t_hi = cli_t_hi ? cli_t_hi : cfg.fit_t_hi;
    std::size_t smooth = cli_smooth ? cli_smooth : cfg.fit_smooth;
    if (t_hi == 0) t_hi = m.size() - 1;
    if (t_lo == 0) t_lo = std::max<std::size_t>(1, t_hi / 10);
    if (smooth == 0) {
        // default: one S_f period, from the center orbit frequency
        const Trajectory traj =
            evolve_trajectory(PhasePoint{pk.r0, pk.p0}, params.k, cfg.estimator_steps);
        const OrbitEstimates est = orbit_estimates(traj);
        smooth = std::max<std::size_t>(5, static_cast<std::size_t>(std::lround(two_pi / est.nu)));
    }

    const PowerLawFit fit = fit_power_law(m, t_lo, t_hi, smooth);
    std::printf("alpha = %.6f +- %.6f  (window t in [%g, %g], smoothing %zu, r^2 = %.4f%s)\n",
                fit.alpha, fit.stderr_alpha, fit.t_lo, fit.t_hi, smooth, fit.r_squared,
                fit.trusted ? "" : ", window < one decade");

    CsvTable table;
    table.comments = header(cfg, "power-law fit");
    if (!in_path.empty()) table.comments.push_back("input = " + in_path);
    table.columns = {"alpha", "stderr_alpha", "r_squared", "t_lo", "t_hi", "smooth", "trusted"};
    table.rows.push_back({fit.alpha, fit.stderr_alpha, fit.r_squared, fit.t_lo, fit.t_hi,
                          static_cast<double>(smooth), fit.trusted ? 1.0 : 0.0});
    write_csv(out_path(args, cfg.output + "_fit.csv"), table);
}

void cmd_compare(const CommonArgs& args, const std::string& a_path, const std::string& b_path,
                 const std::string& column, double threshold, double floor) {
    const std::vector<double> a = csv_column(read_csv(a_path), column);
    const std::vector<double> b = csv_column(read_csv(b_path), column);
    const ComparisonReport rep = compare_series(a, b, threshold, floor);
    std::printf("max_rel_err = %.6g  mean_rel_err = %.6g  first_crossing = %g  n = %zu\n",
                rep.max_rel_err, rep.mean_rel_err, rep.first_crossing, rep.n_compared);

    CsvTable table;
    table.comments = {"rotor-echo compare", "a = " + a_path, "b = " + b_path,
                      "column = " + column};
    table.columns = {"max_rel_err", "mean_rel_err", "first_crossing", "n_compared", "threshold",
                     "floor"};
    table.rows.push_back({rep.max_rel_err, rep.mean_rel_err, rep.first_crossing,
                          static_cast<double>(rep.n_compared), threshold, floor});
    write_csv(out_path(args, "compare.csv"), table);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kicked-rotator fidelity laboratory"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string in_path, a_path, b_path, column = "M";
    std::size_t t_lo = 0, t_hi = 0, smooth = 0;
    double threshold = 0.1, floor = 1e-6;

    auto add_common = [&](CLI::App* sub, bool need_config = true) {
        sub->add_option("--config", args.config_path, "experiment config file")
            ->required(need_config);
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--jobs", args.jobs, "parallel worker limit");
        sub->add_option("--set", args.sets, "override config entries (key=value)");
    };

    CLI::App* quantum = app.add_subcommand("quantum", "exact fidelity run");
    add_common(quantum);
    CLI::App* semicl = app.add_subcommand("semiclassical", "semiclassical predictors");
    add_common(semicl);
    CLI::App* classical = app.add_subcommand("classical", "trajectory and action dump");
    add_common(classical);
    CLI::App* sweep = app.add_subcommand("sweep", "fidelity runs over a sigma list");
    add_common(sweep);
    CLI::App* tau1 = app.add_subcommand("tau1", "tau1 scan over packet centers");
    add_common(tau1);
    CLI::App* fit = app.add_subcommand("fit", "power-law exponent fit");
    add_common(fit);
    fit->add_option("--in", in_path, "fidelity CSV to fit (default: run inline)");
    fit->add_option("--t-lo", t_lo, "fit window start");
    fit->add_option("--t-hi", t_hi, "fit window end");
    fit->add_option("--smooth", smooth, "moving-average window");
    CLI::App* compare = app.add_subcommand("compare", "compare two series files");
    compare->add_option("--a", a_path, "first CSV")->required();
    compare->add_option("--b", b_path, "second CSV")->required();
    compare->add_option("--column", column, "column to compare");
    compare->add_option("--threshold", threshold, "first-crossing threshold");
    compare->add_option("--floor", floor, "ignore values at or below this floor");
    compare->add_option("--out", args.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (quantum->parsed()) cmd_quantum(args);
        else if (semicl->parsed()) cmd_semiclassical(args);
        else if (classical->parsed()) cmd_classical(args);
        else if (sweep->parsed()) cmd_sweep(args);
        else if (tau1->parsed()) cmd_tau1(args);
        else if (fit->parsed()) cmd_fit(args, in_path, t_lo, t_hi, smooth);
        else if (compare->parsed()) cmd_compare(args, a_path, b_path, column, threshold, floor);
    } catch (const budget_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const analysis_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
