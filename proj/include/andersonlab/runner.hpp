#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "estimates.hpp"
#include "io.hpp"
#include "processes.hpp"
#include "stats.hpp"
#include "version.hpp"

namespace andersonlab {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
};

struct RunResult {
  std::filesystem::path out_dir;
  std::vector<std::string> files;  // everything written, manifest last
  json manifest;
};

namespace detail {

struct RunContext {
  Config cfg;
  json config_echo;
  std::filesystem::path out;
  std::string subcommand;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  json manifest;
  std::vector<std::string> files;

  RunContext(Config c, const json& echo, const RunOverrides& ov, std::string sub)
      : cfg(std::move(c)), config_echo(echo), subcommand(std::move(sub)) {
    if (ov.seed) cfg.master_seed = *ov.seed;
    if (ov.out_dir) cfg.output_dir = *ov.out_dir;
    if (ov.workers) {
      if (*ov.workers < 1) throw ConfigError("--workers must be >= 1");
      cfg.workers = *ov.workers;
    }
    out = cfg.output_dir;
    std::filesystem::create_directories(out);
    manifest["tool"] = "andersonlab";
    manifest["version"] = version_string;
    manifest["subcommand"] = subcommand;
    manifest["master_seed"] = cfg.master_seed;
    manifest["workers"] = cfg.workers;
    manifest["config"] = config_echo;
    manifest["config_fnv1a"] = hex64(fnv1a(config_echo.dump()));
  }

  void emit(const std::string& name, const std::string& content) {
    write_text_file(out / name, content);
    manifest["outputs"][name] = {{"bytes", content.size()}, {"fnv1a", hex64(fnv1a(content))}};
    files.push_back(name);
  }

  // `mode` names what produced the scales: the config's partition for block
  // experiments, "single" for subcommands that always use one whole-box block.
  json box_summary(const CubeGeometry& geom, double beta, const char* mode) const {
    return json{{"L", geom.half_side()},
                {"side", geom.side()},
                {"sites", geom.n_sites()},
                {"blocks_per_side", geom.blocks_per_side()},
                {"blocks", geom.n_blocks()},
                {"interior_margin", geom.interior_margin()},
                {"mode", mode},
                {"beta", beta}};
  }

  RunResult finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["wall_seconds"] = secs;
    const std::string text = manifest.dump(2) + "\n";
    write_text_file(out / "manifest.json", text);
    files.push_back("manifest.json");
    RunResult res;
    res.out_dir = out;
    res.files = files;
    res.manifest = manifest;
    return res;
  }
};

inline json stats_json(const CountStats& st) {
  return json{{"jitter_events", st.jitter_events}, {"tie_fallbacks", st.tie_fallbacks}};
}

// Derived partition scales need a decay rate. Take the config's value when one
// was pinned; otherwise fit it from the fractional-moment scan on a whole box
// of half-side L (the rate is a property of the operator, not of the box, so
// the smallest ladder rung is the cheapest honest choice). Records provenance.
inline void resolve_partition_gamma(RunContext& ctx, long L) {
  if (ctx.cfg.partition.mode != PartitionMode::derived) return;
  const bool fitted = !ctx.cfg.partition.gamma_given;
  if (fitted) {
    const Config& cfg = ctx.cfg;
    GreenOptions gopts;
    gopts.solver = cfg.localize.solver;
    gopts.tol = cfg.localize.tol;
    gopts.residual_cap = cfg.localize.residual_cap;
    const CubeGeometry box(cfg.dimension, L, explicit_scales(L, 1, 0));
    const DecayScan fit = fractional_moment_scan(
        cfg.hamiltonian, cfg.distribution, box, cfg.energy, cfg.localize.s, cfg.localize.distances,
        cfg.localize.im_grid, cfg.localize.realizations, split_seed(cfg.master_seed, 0x67), gopts);
    if (fit.exact_zero)
      throw ConfigError(
          "derived partition: Green function vanishes off-diagonal (no hopping), "
          "so no decay rate can be fitted; set 'partition.gamma'");
    if (!(fit.gamma_hat > 0.0))
      throw NumericalError("derived partition: fitted decay rate is not positive; set 'partition.gamma'");
    ctx.cfg.partition.gamma = fit.gamma_hat;
    ctx.cfg.partition.gamma_given = true;
  }
  ctx.manifest["partition_gamma"] = ctx.cfg.partition.gamma;
  ctx.manifest["partition_gamma_source"] = fitted ? "fitted" : "config";
}

}  // namespace detail

inline RunResult run_counts(const Config& cfg_in, const json& echo, const RunOverrides& ov = {}) {
  detail::RunContext ctx(cfg_in, echo, ov, "counts");
  const Config& cfg = ctx.cfg;
  if (cfg.L_ladder.size() != 1) throw ConfigError("counts needs a single 'L', not a ladder");
  const long L = cfg.L_ladder.front();
  detail::resolve_partition_gamma(ctx, L);
  const CubeGeometry geom = geometry_for(cfg, L);

  EnsembleOptions opts;
  opts.workers = cfg.workers;
  opts.per_block = true;
  opts.collect_micro = cfg.spacing.enabled;
  opts.micro_buffer = cfg.spacing.buffer;
  const CountEnsemble ens = run_ensemble(cfg.hamiltonian, cfg.distribution, geom, cfg.energy,
                                         cfg.interval, cfg.realizations, cfg.master_seed, cfg.alpha, opts);

  ctx.emit("counts.csv", counts_csv_text(ens));

  const SampleSummary sum = summarize(ens.xi);
  const Pmf emp = empirical_pmf(ens.xi);
  const long kmax = std::max<long>(static_cast<long>(emp.p.size()) - 1,
                                   static_cast<long>(std::ceil(sum.mean + 4.0 * std::sqrt(std::max(sum.mean, 1.0)) + 5.0)));
  ctx.emit("pmf.csv", pmf_csv_text(emp, poisson_pmf(sum.mean, kmax)));

  json report;
  report["n_realizations"] = cfg.realizations;
  report["lambda_hat"] = sum.mean;
  report["lambda_stderr"] = sum.stderr_mean;
  const PoissonFitReport gof = poisson_gof(ens.xi);
  report["tv_to_poisson_lambda_hat"] = gof.tv_vs_hat;
  report["gof"] = {{"chi2", gof.chi2},        {"dof", gof.chi2_dof},
                   {"p_value", gof.chi2_pvalue}, {"bins", gof.chi2_bins},
                   {"skipped", gof.chi2_skipped}};
  report["factorial_moments"] = {{"r1", factorial_moment(ens.xi, 1)},
                                 {"r2", gof.fm2},
                                 {"r3", factorial_moment(ens.xi, 3)}};
  report["fm2_poisson_gap"] = gof.fm2_poisson_gap;
  const double beta = beta_scale(L, cfg.dimension, cfg.alpha);
  report["beta"] = beta;
  report["window"] = {cfg.energy + cfg.interval.a / beta, cfg.energy + cfg.interval.b / beta};
  report["count_stats"] = detail::stats_json(ens.stats);
  if (cfg.spacing.enabled) {
    SpacingOptions sopt;
    sopt.core_lo = cfg.spacing.core_lo;
    sopt.core_hi = cfg.spacing.core_hi;
    sopt.min_gaps = cfg.spacing.min_gaps;
    const SpacingReport sp = spacing_statistics(ens.micro, sopt);
    report["spacing"] = {{"n_gaps", sp.n_gaps}, {"mean_gap", sp.mean_gap}, {"ks_exp1", sp.ks_exp1}};
  }
  ctx.emit("report.json", report.dump(2) + "\n");

  ctx.manifest["boxes"] = json::array({ctx.box_summary(geom, beta, partition_mode_name(cfg.partition.mode))});
  ctx.manifest["count_stats"] = detail::stats_json(ens.stats);
  return ctx.finish();
}

inline RunResult run_ids(const Config& cfg_in, const json& echo, const RunOverrides& ov = {}) {
  detail::RunContext ctx(cfg_in, echo, ov, "ids");
  const Config& cfg = ctx.cfg;
  if (cfg.L_ladder.size() != 1) throw ConfigError("ids needs a single 'L', not a ladder");
  const long L = cfg.L_ladder.front();

  std::vector<double> grid(static_cast<std::size_t>(cfg.ids.n_energies));
  for (long j = 0; j < cfg.ids.n_energies; ++j)
    grid[static_cast<std::size_t>(j)] =
        cfg.ids.energy_min + (cfg.ids.energy_max - cfg.ids.energy_min) * static_cast<double>(j) /
                                 static_cast<double>(cfg.ids.n_energies - 1);

  const IdsEstimate ids = ids_estimate(cfg.hamiltonian, cfg.distribution, cfg.dimension, L, grid,
                                       cfg.ids.realizations, cfg.master_seed);
  ctx.emit("ids.csv", ids_csv_text(ids));

  const AlphaDerivative der =
      alpha_upper_derivative(ids, cfg.energy, cfg.alpha, cfg.ids.eps_min, cfg.ids.eps_max, cfg.ids.grid_factor);
  ctx.emit("derivative.csv", derivative_csv_text(der));

  const GammaParameter g = gamma_parameter(der.d_upper, cfg.alpha, cfg.interval);
  ctx.manifest["ids_summary"] = {{"energy", cfg.energy},
                                 {"d_upper", der.d_upper},
                                 {"d_lower", der.d_lower},
                                 {"gamma", g.value},
                                 {"interval_symmetric", g.symmetric_interval},
                                 {"l_alpha", l_alpha(cfg.alpha, cfg.interval)}};
  const CubeGeometry geom(cfg.dimension, L, explicit_scales(L, 1, 0));
  ctx.manifest["boxes"] = json::array({ctx.box_summary(geom, beta_scale(L, cfg.dimension, cfg.alpha), "single")});
  return ctx.finish();
}

inline RunResult run_verify(const Config& cfg_in, const json& echo, const RunOverrides& ov = {}) {
  detail::RunContext ctx(cfg_in, echo, ov, "verify");
  const Config& cfg = ctx.cfg;
  if (cfg.L_ladder.size() != 1) throw ConfigError("verify needs a single 'L', not a ladder");
  const long L = cfg.L_ladder.front();
  detail::resolve_partition_gamma(ctx, L);
  const CubeGeometry geom = geometry_for(cfg, L);

  json arr = json::array();
  arr.push_back(inequality_json(wegner_check(cfg.hamiltonian, cfg.distribution, geom, cfg.interval,
                                             cfg.verify.wegner_realizations, cfg.master_seed)));
  arr.push_back(inequality_json(minami_check(cfg.hamiltonian, cfg.distribution, geom, cfg.interval,
                                             cfg.verify.minami_realizations, split_seed(cfg.master_seed, 0x57))));
  arr.push_back(inequality_json(diagonal_green_check(cfg.hamiltonian, cfg.distribution, geom,
                                                     {cfg.energy, cfg.verify.im_z},
                                                     cfg.verify.diag_realizations,
                                                     split_seed(cfg.master_seed, 0x58), cfg.verify.k)));
  bool all_pass = true;
  for (const auto& e : arr) all_pass = all_pass && e.at("pass").get<bool>();
  json doc;
  doc["checks"] = arr;
  doc["all_pass"] = all_pass;
  ctx.emit("inequalities.json", doc.dump(2) + "\n");
  ctx.manifest["boxes"] = json::array({ctx.box_summary(
      geom, beta_scale(L, cfg.dimension, cfg.alpha), partition_mode_name(cfg.partition.mode))});
  return ctx.finish();
}

inline RunResult run_localize(const Config& cfg_in, const json& echo, const RunOverrides& ov = {}) {
  detail::RunContext ctx(cfg_in, echo, ov, "localize");
  const Config& cfg = ctx.cfg;
  if (cfg.L_ladder.size() != 1) throw ConfigError("localize needs a single 'L', not a ladder");
  const long L = cfg.L_ladder.front();
  const CubeGeometry geom(cfg.dimension, L, explicit_scales(L, 1, 0));

  GreenOptions gopts;
  gopts.solver = cfg.localize.solver;
  gopts.tol = cfg.localize.tol;
  gopts.residual_cap = cfg.localize.residual_cap;
  const DecayScan scan =
      fractional_moment_scan(cfg.hamiltonian, cfg.distribution, geom, cfg.energy, cfg.localize.s,
                             cfg.localize.distances, cfg.localize.im_grid, cfg.localize.realizations,
                             cfg.master_seed, gopts);
  ctx.emit("decay.csv", decay_csv_text(scan));
  const auto summary_json = [](const DecayScan& d) {
    return json{{"s", d.s},
                {"exact_zero", d.exact_zero},
                {"gamma_hat", d.gamma_hat},
                {"c_hat", d.c_hat},
                {"r_squared", d.r_squared}};
  };
  ctx.manifest["localize_summary"] = summary_json(scan);
  if (cfg.localize.s_scan) {
    // Same disorder ensemble at every s, so the sweep isolates the s-dependence.
    json sweep = json::array();
    for (double sv : localize_scan_s) {
      if (!(sv < cfg.alpha)) continue;
      const DecayScan d = sv == cfg.localize.s
                              ? scan
                              : fractional_moment_scan(cfg.hamiltonian, cfg.distribution, geom,
                                                       cfg.energy, sv, cfg.localize.distances,
                                                       cfg.localize.im_grid, cfg.localize.realizations,
                                                       cfg.master_seed, gopts);
      sweep.push_back(summary_json(d));
    }
    ctx.manifest["localize_scan"] = sweep;
  }
  ctx.manifest["boxes"] =
      json::array({ctx.box_summary(geom, beta_scale(L, cfg.dimension, cfg.alpha), "single")});
  return ctx.finish();
}

inline RunResult run_compare(const Config& cfg_in, const json& echo, const RunOverrides& ov = {}) {
  detail::RunContext ctx(cfg_in, echo, ov, "compare");
  const Config& cfg = ctx.cfg;
  if (cfg.L_ladder.size() < 2) throw ConfigError("compare needs an 'L_ladder' with at least two entries");
  detail::resolve_partition_gamma(ctx, cfg.L_ladder.front());

  json rungs = json::array();
  json boxes = json::array();
  CountStats total;
  std::vector<double> tvs, sigmas;
  for (std::size_t li = 0; li < cfg.L_ladder.size(); ++li) {
    const long L = cfg.L_ladder[li];
    const CubeGeometry geom = geometry_for(cfg, L);
    EnsembleOptions opts;
    opts.workers = cfg.workers;
    opts.per_block = true;
    const CountEnsemble ens =
        run_ensemble(cfg.hamiltonian, cfg.distribution, geom, cfg.energy, cfg.interval,
                     cfg.realizations, split_seed(cfg.master_seed, static_cast<std::uint64_t>(li)),
                     cfg.alpha, opts);
    total.merge(ens.stats);
    std::vector<long> eta_sum(ens.eta.size(), 0);
    for (std::size_t i = 0; i < ens.eta.size(); ++i)
      for (long v : ens.eta[i]) eta_sum[i] += v;
    const ProcessComparison cmp = compare_count_processes(
        ens.xi, eta_sum, cfg.compare.n_boot, split_seed(cfg.master_seed, 0x9000 + li));
    tvs.push_back(cmp.tv);
    sigmas.push_back(cmp.bootstrap_sigma);
    rungs.push_back(json{{"L", L},
                         {"blocks_per_side", geom.blocks_per_side()},
                         {"interior_margin", geom.interior_margin()},
                         {"tv", cmp.tv},
                         {"bootstrap_sigma", cmp.bootstrap_sigma},
                         {"mean_gap", cmp.mean_gap},
                         {"lambda_hat", summarize(ens.xi).mean},
                         {"realizations", cfg.realizations}});
    boxes.push_back(ctx.box_summary(geom, beta_scale(L, cfg.dimension, cfg.alpha),
                                    partition_mode_name(cfg.partition.mode)));
  }
  // Non-increasing within twice the combined bootstrap noise, rung to rung.
  bool monotone = true;
  for (std::size_t i = 1; i < tvs.size(); ++i) {
    const double slack = 2.0 * std::sqrt(sigmas[i - 1] * sigmas[i - 1] + sigmas[i] * sigmas[i]);
    if (tvs[i] > tvs[i - 1] + slack) monotone = false;
  }
  json report;
  report["rungs"] = rungs;
  report["tv_non_increasing_within_noise"] = monotone;
  ctx.emit("report.json", report.dump(2) + "\n");
  ctx.manifest["boxes"] = boxes;
  ctx.manifest["count_stats"] = detail::stats_json(total);
  return ctx.finish();
}

inline RunResult run_subcommand(const std::string& name, const Config& cfg, const json& echo,
                                const RunOverrides& ov = {}) {
  if (name == "counts") return run_counts(cfg, echo, ov);
  if (name == "ids") return run_ids(cfg, echo, ov);
  if (name == "verify") return run_verify(cfg, echo, ov);
  if (name == "localize") return run_localize(cfg, echo, ov);
  if (name == "compare") return run_compare(cfg, echo, ov);
  throw ConfigError("unknown subcommand '" + name + "'");
}

}  // namespace andersonlab
