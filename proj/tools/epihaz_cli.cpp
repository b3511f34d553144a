// epihaz: simulate stochastic SEIR epidemics and estimate the contact-interval
// cumulative hazard, with and without who-infected-whom.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epihaz/epihaz.hpp"

namespace fs = std::filesystem;
using namespace epihaz;

namespace {

HazardModel parse_hazard(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string::npos) {
    std::string rest = spec.substr(colon + 1);
    for (auto part : split_csv_line(rest)) params.push_back(parse_double(trim(part)));
  }
  if (family == "exponential" || family == "exp") {
    if (params.size() != 1) throw DataError("exponential hazard needs one parameter: exp:RATE");
    return HazardModel::exponential(params[0]);
  }
  if (family == "weibull") {
    if (params.size() != 2) throw DataError("weibull hazard needs weibull:SHAPE,RATE");
    return HazardModel::weibull(params[0], params[1]);
  }
  if (family == "gamma") {
    if (params.size() != 2) throw DataError("gamma hazard needs gamma:SHAPE,RATE");
    return HazardModel::gamma(params[0], params[1]);
  }
  throw DataError("unknown hazard family: " + family);
}

DurationModel parse_duration(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string::npos)
    for (auto part : split_csv_line(spec.substr(colon + 1)))
      params.push_back(parse_double(trim(part)));
  if ((kind == "const" || kind == "constant") && params.size() == 1)
    return DurationModel::constant(params[0]);
  if ((kind == "exp" || kind == "exponential") && params.size() == 1)
    return DurationModel::exponential(params[0]);
  if (kind == "gamma" && params.size() == 2) return DurationModel::gamma(params[0], params[1]);
  if (kind == "weibull" && params.size() == 2) return DurationModel::weibull(params[0], params[1]);
  throw DataError("bad duration spec: " + spec + " (use const:V, exp:R, gamma:S,R, weibull:S,R)");
}

struct Manifest {
  std::vector<std::pair<std::string, std::string>> kv;
  void add(const std::string& k, const std::string& v) { kv.emplace_back(k, v); }
  void add(const std::string& k, double v) { kv.emplace_back(k, fmt_double(v)); }
  void add(const std::string& k, long v) { kv.emplace_back(k, std::to_string(v)); }
  void write(const fs::path& dir) const {
    std::string s;
    for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
    write_file_atomic(dir / "manifest.txt", s);
  }
};

struct SimOptions {
  std::string mode = "network";
  SimulationConfig cfg;
  std::string contact = "weibull:2,1";
  std::string latent = "const:0";
  std::string infectious = "exp:1";

  void attach(CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--mode", mode, "network | massaction")
        ->check(CLI::IsMember({"network", "massaction"}));
    cmd->add_option("--n", cfg.n, "population size");
    cmd->add_option("--ws-k", cfg.ws_k, "ring neighbors per node (even)");
    cmd->add_option("--ws-p", cfg.ws_p, "edge rewiring probability");
    cmd->add_option("--contact", contact, "contact-interval hazard, e.g. weibull:2,1");
    cmd->add_option("--latent", latent, "latent period distribution, e.g. const:0");
    cmd->add_option("--infectious", infectious, "infectious period distribution, e.g. exp:1");
    cmd->add_option("--initial", cfg.initial_infections, "imported infections at time 0");
    cmd->add_option("--stop-m", cfg.stop_m, "observation ends at this infection count");
    if (with_seed) cmd->add_option("--seed", cfg.seed, "rng seed");
  }

  SimulationConfig build() const {
    SimulationConfig out = cfg;
    out.mode = (mode == "network") ? ContactMode::Network : ContactMode::MassAction;
    out.contact = parse_hazard(contact);
    out.latent = parse_duration(latent);
    out.infectious = parse_duration(infectious);
    return out;
  }

  void describe(Manifest& m) const {
    m.add("mode", mode);
    m.add("n", long(cfg.n));
    m.add("ws_k", long(cfg.ws_k));
    m.add("ws_p", cfg.ws_p);
    m.add("contact", contact);
    m.add("latent", latent);
    m.add("infectious", infectious);
    m.add("initial_infections", long(cfg.initial_infections));
    m.add("stop_m", long(cfg.stop_m));
    m.add("seed", long(cfg.seed));
  }
};

struct EmOptions {
  double tolerance = 5e-4;
  int min_iter = 5;
  int max_iter = 50;
  std::string smoother = "spline";
  double bandwidth = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tol", tolerance, "EM L1 convergence tolerance");
    cmd->add_option("--min-iter", min_iter, "minimum EM iterations");
    cmd->add_option("--max-iter", max_iter, "maximum EM iterations");
    cmd->add_option("--smoother", smoother, "spline | kernel")
        ->check(CLI::IsMember({"spline", "kernel"}));
    cmd->add_option("--bandwidth", bandwidth, "kernel bandwidth (0 = rule of thumb)");
  }

  EMConfig build() const {
    EMConfig cfg;
    cfg.tolerance = tolerance;
    cfg.min_iterations = min_iter;
    cfg.max_iterations = max_iter;
    cfg.smoother.kind =
        (smoother == "kernel") ? SmootherConfig::Kind::Kernel : SmootherConfig::Kind::SplineGcv;
    cfg.smoother.kernel_bandwidth = bandwidth;
    return cfg;
  }

  void describe(Manifest& m) const {
    m.add("em_tolerance", tolerance);
    m.add("em_min_iterations", long(min_iter));
    m.add("em_max_iterations", long(max_iter));
    m.add("smoother", smoother);
  }
};

EpidemicRecord load_record(const std::string& input, const std::string& edges) {
  return edges.empty() ? read_record_files(input) : read_record_files(input, edges);
}

int run_simulate(const SimOptions& opts, const std::string& out_dir) {
  const auto cfg = opts.build();
  cfg.check();
  const fs::path dir(out_dir);
  auto rec = simulate_epidemic(cfg);
  write_record_files(rec, dir / "record.csv",
                     rec.mass_action() ? fs::path() : dir / "edges.csv");
  Manifest m;
  m.add("command", "simulate");
  opts.describe(m);
  m.add("m", long(rec.num_infected()));
  m.add("T", rec.T);
  m.add("extinct", long(rec.extinct));
  m.write(dir);
  if (rec.extinct)
    std::cerr << "warning: epidemic went extinct at " << rec.num_infected()
              << " infections (before stop-m)\n";
  return 0;
}

int run_estimate(const std::string& input, const std::string& edges, const std::string& method,
                 double alpha, const EmOptions& em_opts, bool mask, const std::string& out_dir) {
  const fs::path dir(out_dir);
  EpidemicRecord rec = load_record(input, edges);
  if (mask) rec = mask_transmission(rec);
  const bool ma = rec.mass_action();

  Manifest m;
  m.add("command", "estimate");
  m.add("input", input);
  m.add("method", method);
  m.add("alpha", alpha);
  m.add("mask", long(mask));

  if (method == "na" || method == "km") {
    const auto est = ma ? nelson_aalen_mass_action(rec) : nelson_aalen(rec);
    write_file_atomic(dir / "estimate.csv", estimate_to_csv(est, alpha, method == "km"));
  } else if (method == "marginal-na" || method == "marginal-km") {
    const auto res = ma ? em_estimate_mass_action(rec, em_opts.build())
                        : em_estimate(rec, em_opts.build());
    write_file_atomic(dir / "estimate.csv",
                      estimate_to_csv(res.estimate, alpha, method == "marginal-km"));
    write_file_atomic(dir / "weights.csv", res.weights.csv());
    write_file_atomic(dir / "emlog.csv", res.log.csv());
    em_opts.describe(m);
    m.add("em_converged", long(res.converged));
    m.add("em_iterations", long(res.iterations));
    if (res.estimate.size() >= 2) {
      SmootherConfig scfg = em_opts.build().smoother;
      const auto hz = smooth_step_estimate(res.estimate, res.estimate.cumhaz_var, scfg);
      write_file_atomic(dir / "hazard.csv", hz.grid_csv());
    }
    if (!res.converged)
      std::cerr << "warning: EM did not reach tolerance " << em_opts.tolerance << " in "
                << res.iterations << " iterations\n";
  } else if (method.rfind("parametric-", 0) == 0) {
    const std::string family = method.substr(11);
    HazardFamily f;
    if (family == "exponential")
      f = HazardFamily::Exponential;
    else if (family == "weibull")
      f = HazardFamily::Weibull;
    else if (family == "gamma")
      f = HazardFamily::Gamma;
    else
      throw DataError("unknown parametric family: " + family);
    const auto fit = fit_parametric(rec, f);
    std::string csv = "family,param1,param2\n" + fit.model.csv_line() + "\n";
    write_file_atomic(dir / "model.csv", csv);
    m.add("loglik", fit.loglik);
    m.add("boundary", long(fit.boundary));
    for (std::size_t k = 0; k < fit.std_errors.size(); ++k)
      m.add("se" + std::to_string(k + 1), fit.std_errors[k]);
  } else {
    throw DataError("unknown method: " + method);
  }
  m.write(dir);
  return 0;
}

int run_coverage(CoverageStudyConfig cfg, const std::string& preset, const std::string& out_dir) {
  const fs::path dir(out_dir);
  const auto report = coverage_study(cfg);
  write_file_atomic(dir / "coverage.csv", report.csv());

  std::map<int, int> iter_hist;
  for (int it : report.em_iterations) ++iter_hist[it];
  std::string iters = "iterations,replicates\n";
  for (auto [k, v] : iter_hist) iters += std::to_string(k) + "," + std::to_string(v) + "\n";
  write_file_atomic(dir / "emiters.csv", iters);

  Manifest m;
  m.add("command", "coverage-study");
  if (!preset.empty()) m.add("preset", preset);
  m.add("mode", cfg.sim.mode == ContactMode::Network ? "network" : "massaction");
  m.add("n", long(cfg.sim.n));
  m.add("stop_m", long(cfg.sim.stop_m));
  m.add("replicates", long(cfg.replicates));
  m.add("seed", long(cfg.seed));
  m.add("em_tolerance", cfg.em.tolerance);
  m.add("contact", cfg.sim.contact.csv_line());
  m.add("failures", long(report.failures));
  m.add("em_nonconverged", long(report.em_nonconverged));
  m.add("extinction_resimulations", report.extinction_resimulations);
  m.write(dir);
  for (const auto& note : report.failure_notes)
    std::cerr << "replicate failure: " << note << "\n";
  return 0;
}

int run_household(const std::string& input, NaturalHistory nh, const EmOptions& em_opts,
                  bool parametric, double alpha, const std::string& out_dir) {
  const fs::path dir(out_dir);
  auto hhs = households_from_csv(read_lines(input));
  auto res = household_analyze(hhs, nh, em_opts.build(), parametric, alpha);
  write_file_atomic(dir / "estimate.csv", estimate_to_csv(res.em.estimate, alpha, false));
  write_file_atomic(dir / "survival.csv", estimate_to_csv(res.em.estimate, alpha, true));
  write_file_atomic(dir / "weights.csv", res.em.weights.csv());
  write_file_atomic(dir / "emlog.csv", res.em.log.csv());
  if (parametric) {
    std::string csv = "family,param1,param2\n";
    for (const auto& f : res.parametric) csv += f.model.csv_line() + "\n";
    write_file_atomic(dir / "models.csv", csv);
  }
  write_file_atomic(dir / "summary.txt", res.summary());
  for (const auto& issue : res.pooled.issues) std::cerr << "warning: " << issue << "\n";
  if (!res.em.converged) std::cerr << "warning: EM did not converge\n";

  Manifest m;
  m.add("command", "household-analyze");
  m.add("input", input);
  m.add("incubation", long(nh.incubation));
  m.add("latent", long(nh.latent));
  m.add("infectious", long(nh.infectious));
  em_opts.describe(m);
  m.add("alpha", alpha);
  m.add("households_used", long(res.pooled.households_used));
  m.add("households_excluded", long(res.pooled.excluded.size()));
  m.add("contact_probability", res.contact_probability);
  m.add("contact_probability_lo", res.contact_probability_ci.lo);
  m.add("contact_probability_hi", res.contact_probability_ci.hi);
  m.add("em_converged", long(res.em.converged));
  m.write(dir);
  return 0;
}

int run_sensitivity(const std::string& input, const std::vector<int>& incubations,
                    const std::vector<int>& latents, const std::vector<int>& infectious,
                    const EmOptions& em_opts, const std::string& out_dir) {
  const fs::path dir(out_dir);
  auto hhs = households_from_csv(read_lines(input));
  auto cells = sensitivity_analysis(hhs, incubations, latents, infectious, em_opts.build());
  write_file_atomic(dir / "sensitivity.csv", sensitivity_csv(cells));
  Manifest m;
  m.add("command", "sensitivity");
  m.add("input", input);
  m.add("cells", long(cells.size()));
  m.write(dir);
  return 0;
}

int run_sar(const std::string& input, double p, int replicates, std::uint64_t seed,
            const std::string& out_dir) {
  const fs::path dir(out_dir);
  auto hhs = households_from_csv(read_lines(input));
  auto res = sar_forward_simulation(hhs, p, replicates, seed);
  std::string csv = "mean_sar,lo,hi,replicates\n";
  csv += fmt_double(res.mean) + "," + fmt_double(res.percentile_ci.lo) + "," +
         fmt_double(res.percentile_ci.hi) + "," + std::to_string(res.replicates) + "\n";
  write_file_atomic(dir / "sar.csv", csv);
  Manifest m;
  m.add("command", "sar-sim");
  m.add("input", input);
  m.add("p", p);
  m.add("replicates", long(replicates));
  m.add("seed", long(seed));
  m.add("mean_sar", res.mean);
  m.write(dir);
  std::cout << "mean SAR " << fmt_fixed(res.mean, 3) << " (" << fmt_fixed(res.percentile_ci.lo, 3)
            << ", " << fmt_fixed(res.percentile_ci.hi, 3) << ")\n";
  return 0;
}

int run_gen_households(const HouseholdGenConfig& cfg, std::uint64_t seed,
                       const std::string& out_path) {
  Rng rng(seed);
  auto hhs = generate_households(cfg, rng);
  write_file_atomic(out_path, households_to_csv(hhs));
  return 0;
}

int run_ws_stats(int n, int k, double p, std::uint64_t seed) {
  Rng rng(seed);
  WsStats stats;
  generate_ws_network(n, k, p, rng, &stats);
  std::cout << "nodes=" << stats.n << "\n"
            << "undirected_edges=" << stats.undirected_edges << "\n"
            << "rewired_edges=" << stats.rewired_edges << "\n"
            << "zero_rewired_fraction=" << fmt_double(stats.zero_rewired_fraction) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contact-interval survival analysis for stochastic SEIR epidemics"};
  app.require_subcommand(1);
  app.set_config("--config");

  std::string out_dir = ".";
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run one epidemic and write the record");
  SimOptions sim_opts;
  sim_opts.attach(sim_cmd);

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "estimate the contact-interval distribution");
  std::string est_input, est_edges, est_method = "na";
  double est_alpha = 0.05;
  bool est_mask = false;
  EmOptions est_em;
  est_cmd->add_option("--input", est_input, "record csv")->required();
  est_cmd->add_option("--edges", est_edges, "edge list csv (network records)");
  est_cmd->add_option("--method", est_method,
                      "na | km | marginal-na | marginal-km | parametric-exponential | "
                      "parametric-weibull | parametric-gamma");
  est_cmd->add_option("--alpha", est_alpha, "two-sided confidence level complement");
  est_cmd->add_flag("--mask-infectors", est_mask, "hide recorded infectors before estimating");
  est_em.attach(est_cmd);

  // coverage-study
  auto* cov_cmd = app.add_subcommand("coverage-study", "confidence-interval coverage experiment");
  std::string cov_preset;
  bool paper_scale = false;
  int cov_replicates = -1;
  std::uint64_t cov_seed = 1;
  int cov_jobs = 1;
  SimOptions cov_sim;
  EmOptions cov_em;
  cov_cmd->add_option("--preset", cov_preset,
                      "table1-w05 | table1-exp | table1-w2 | table2-w05 | table2-exp | table2-w2");
  cov_cmd->add_flag("--paper-scale", paper_scale, "n=100000, m=1000, 1000 replicates");
  cov_cmd->add_option("--replicates", cov_replicates, "study replicates");
  cov_cmd->add_option("--seed", cov_seed, "study seed");
  cov_cmd->add_option("--jobs", cov_jobs, "worker threads");
  cov_sim.attach(cov_cmd, /*with_seed=*/false);  // the study seed drives the streams
  cov_em.attach(cov_cmd);

  // household-analyze
  auto* hh_cmd = app.add_subcommand("household-analyze", "daily household surveillance pipeline");
  std::string hh_input;
  NaturalHistory nh;
  bool hh_no_parametric = false;
  double hh_alpha = 0.05;
  EmOptions hh_em;
  hh_cmd->add_option("--input", hh_input, "household csv")->required();
  hh_cmd->add_option("--incubation", nh.incubation, "incubation period, days");
  hh_cmd->add_option("--latent", nh.latent, "latent period, days");
  hh_cmd->add_option("--infectious", nh.infectious, "infectious period, days");
  hh_cmd->add_flag("--no-parametric", hh_no_parametric, "skip parametric comparison fits");
  hh_cmd->add_option("--alpha", hh_alpha, "two-sided confidence level complement");
  hh_em.attach(hh_cmd);

  // sensitivity
  auto* sens_cmd = app.add_subcommand("sensitivity", "natural-history sensitivity grid");
  std::string sens_input;
  std::vector<int> sens_inc = {1, 2, 3}, sens_lat = {0, 1}, sens_inf = {5, 6, 7};
  EmOptions sens_em;
  sens_cmd->add_option("--input", sens_input, "household csv")->required();
  sens_cmd->add_option("--incubations", sens_inc, "incubation grid");
  sens_cmd->add_option("--latents", sens_lat, "latent grid");
  sens_cmd->add_option("--infectious-days", sens_inf, "infectious-period grid");
  sens_em.attach(sens_cmd);

  // sar-sim
  auto* sar_cmd = app.add_subcommand("sar-sim", "household SAR forward simulation");
  std::string sar_input;
  double sar_p = 0.07;
  int sar_replicates = 10000;
  std::uint64_t sar_seed = 1;
  sar_cmd->add_option("--input", sar_input, "household csv")->required();
  sar_cmd->add_option("--p", sar_p, "per-member infectious contact probability");
  sar_cmd->add_option("--replicates", sar_replicates, "simulation replicates");
  sar_cmd->add_option("--seed", sar_seed, "rng seed");

  // gen-households
  auto* gen_cmd = app.add_subcommand("gen-households", "generate a synthetic household fixture");
  HouseholdGenConfig gen_cfg;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "households.csv";
  gen_cmd->add_option("--households", gen_cfg.n_households, "number of households");
  gen_cmd->add_option("--members", gen_cfg.total_members, "total members");
  gen_cmd->add_option("--coprimary", gen_cfg.coprimary_households, "households with co-primaries");
  gen_cmd->add_option("--p", gen_cfg.contact_probability, "contact probability over the period");
  gen_cmd->add_option("--incubation", gen_cfg.nh.incubation, "incubation period, days");
  gen_cmd->add_option("--latent", gen_cfg.nh.latent, "latent period, days");
  gen_cmd->add_option("--infectious", gen_cfg.nh.infectious, "infectious period, days");
  gen_cmd->add_option("--seed", gen_seed, "rng seed");
  gen_cmd->add_option("--output", gen_out, "output csv path");

  // ws-stats
  auto* ws_cmd = app.add_subcommand("ws-stats", "small-world network rewiring statistics");
  int ws_n = 100000, ws_k = 10;
  double ws_p = 0.1;
  std::uint64_t ws_seed = 1;
  ws_cmd->add_option("--n", ws_n, "nodes");
  ws_cmd->add_option("--k", ws_k, "ring neighbors per node");
  ws_cmd->add_option("--p", ws_p, "rewiring probability");
  ws_cmd->add_option("--seed", ws_seed, "rng seed");

  try {
    app.parse(argc, argv);

    if (*sim_cmd) return run_simulate(sim_opts, out_dir);
    if (*est_cmd)
      return run_estimate(est_input, est_edges, est_method, est_alpha, est_em, est_mask, out_dir);
    if (*cov_cmd) {
      CoverageStudyConfig cfg;
      if (!cov_preset.empty()) {
        cfg = coverage_preset(cov_preset, paper_scale);
      } else {
        cfg.sim = cov_sim.build();
        cfg.em = cov_em.build();
      }
      if (cov_replicates > 0) cfg.replicates = cov_replicates;
      cfg.seed = cov_seed;
      cfg.jobs = cov_jobs;
      return run_coverage(cfg, cov_preset, out_dir);
    }
    if (*hh_cmd) return run_household(hh_input, nh, hh_em, !hh_no_parametric, hh_alpha, out_dir);
    if (*sens_cmd)
      return run_sensitivity(sens_input, sens_inc, sens_lat, sens_inf, sens_em, out_dir);
    if (*sar_cmd) return run_sar(sar_input, sar_p, sar_replicates, sar_seed, out_dir);
    if (*gen_cmd) return run_gen_households(gen_cfg, gen_seed, gen_out);
    if (*ws_cmd) return run_ws_stats(ws_n, ws_k, ws_p, ws_seed);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
