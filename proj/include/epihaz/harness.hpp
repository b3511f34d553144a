#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "epihaz/em.hpp"
#include "epihaz/hazard.hpp"
#include "epihaz/households.hpp"
#include "epihaz/math.hpp"
#include "epihaz/nelson_aalen.hpp"
#include "epihaz/record.hpp"
#include "epihaz/simulate.hpp"

namespace epihaz {

namespace detail {

/// Runs fn(i) for i in [0, count) on `jobs` threads; results must be written
/// to per-index slots so the outcome is schedule-independent.
template <typename Fn>
inline void parallel_for(int jobs, int count, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Confidence-interval coverage studies.
// ---------------------------------------------------------------------------

struct CoverageStudyConfig {
  SimulationConfig sim;
  int replicates = 200;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::vector<int> quantile_pcts = {5, 10, 25, 50, 75, 90, 95};
  EMConfig em;
  int jobs = 1;
  int max_extinction_retries = 200;
};

struct CoverageRow {
  std::string estimator;
  int pct = 0;
  int hits = 0;
  int n = 0;
  double coverage = 0.0;
  Interval ci;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  std::vector<int> em_iterations;  // per successful replicate
  int em_nonconverged = 0;
  int failures = 0;  // replicates excluded after an estimator error
  std::vector<std::string> failure_notes;
  long extinction_resimulations = 0;
  bool empty = false;

  std::string csv() const {
    std::string s = "estimator,quantile,hits,n,coverage,lo,hi\n";
    for (const auto& r : rows)
      s += r.estimator + "," + std::to_string(r.pct) + "," + std::to_string(r.hits) + "," +
           std::to_string(r.n) + "," + fmt_double(r.coverage) + "," + fmt_double(r.ci.lo) + "," +
           fmt_double(r.ci.hi) + "\n";
    return s;
  }
};

inline const std::vector<std::string>& coverage_estimators() {
  static const std::vector<std::string> names = {"nelson-aalen", "marginal-na", "kaplan-meier",
                                                 "marginal-km"};
  return names;
}

/// Per replicate: simulate to stop_m infections (resimulating on extinction),
/// evaluate each estimator's pointwise interval at the percentiles of the
/// possible contact intervals, and test containment of the true value.
inline CoverageReport coverage_study(const CoverageStudyConfig& config) {
  CoverageReport report;
  const int R = config.replicates;
  if (R <= 0) {
    report.empty = true;
    return report;
  }
  const int Q = int(config.quantile_pcts.size());
  const int E = int(coverage_estimators().size());

  struct ReplicateOut {
    std::vector<char> hit;  // E x Q
    std::vector<char> evaluated;
    int em_iters = 0;
    bool em_converged = false;
    bool failed = false;
    std::string note;
    int retries = 0;
  };
  std::vector<ReplicateOut> outs(static_cast<std::size_t>(R));

  detail::parallel_for(config.jobs, R, [&](int r) {
    auto& out = outs[std::size_t(r)];
    out.hit.assign(std::size_t(E * Q), 0);
    out.evaluated.assign(std::size_t(E * Q), 0);
    try {
      Rng rng = Rng::stream(config.seed, std::uint64_t(r));
      EpidemicRecord rec = simulate_epidemic(config.sim, rng);
      while (rec.extinct && out.retries < config.max_extinction_retries) {
        ++out.retries;
        rec = simulate_epidemic(config.sim, rng);
      }
      if (rec.extinct) throw DataError("extinction persisted across retries");

      const auto windows = possible_contact_intervals(rec);
      std::vector<double> qs(static_cast<std::size_t>(Q));
      for (int q = 0; q < Q; ++q)
        qs[std::size_t(q)] = quantile_sorted(windows, config.quantile_pcts[std::size_t(q)] / 100.0);

      const bool ma = rec.mass_action();
      const StepEstimate na = ma ? nelson_aalen_mass_action(rec) : nelson_aalen(rec);
      const EpidemicRecord masked = mask_transmission(rec);
      const EmResult em = ma ? em_estimate_mass_action(masked, config.em)
                             : em_estimate(masked, config.em);
      out.em_iters = em.iterations;
      out.em_converged = em.converged;

      for (int q = 0; q < Q; ++q) {
        const double tau = qs[std::size_t(q)];
        const double truth = config.sim.contact.cumulative_hazard(tau);
        const double truth_surv = std::exp(-truth);
        const StepEstimate* ests[2] = {&na, &em.estimate};
        for (int which = 0; which < 2; ++which) {
          const auto& est = *ests[which];
          const double value = est.cumhaz_at(tau);
          const double var = est.variance_at(tau);
          const BandPoint hz = cumhaz_limits(value, var, config.alpha);
          const BandPoint sv = survival_limits(value, var, config.alpha);
          const bool hz_hit = !hz.degenerate && hz.lo <= truth && truth <= hz.hi;
          const bool sv_hit = !sv.degenerate && sv.lo <= truth_surv && truth_surv <= sv.hi;
          out.hit[std::size_t(which * Q + q)] = hz_hit;
          out.evaluated[std::size_t(which * Q + q)] = 1;
          out.hit[std::size_t((2 + which) * Q + q)] = sv_hit;
          out.evaluated[std::size_t((2 + which) * Q + q)] = 1;
        }
      }
    } catch (const std::exception& ex) {
      out.failed = true;
      out.note = ex.what();
    }
  });

  std::vector<int> hits(std::size_t(E * Q), 0), counts(std::size_t(E * Q), 0);
  for (const auto& out : outs) {
    report.extinction_resimulations += out.retries;
    if (out.failed) {
      ++report.failures;
      if (report.failure_notes.size() < 20) report.failure_notes.push_back(out.note);
      continue;
    }
    report.em_iterations.push_back(out.em_iters);
    if (!out.em_converged) ++report.em_nonconverged;
    for (int k = 0; k < E * Q; ++k) {
      if (!out.evaluated[std::size_t(k)]) continue;
      ++counts[std::size_t(k)];
      hits[std::size_t(k)] += out.hit[std::size_t(k)];
    }
  }
  for (int e = 0; e < E; ++e)
    for (int q = 0; q < Q; ++q) {
      CoverageRow row;
      row.estimator = coverage_estimators()[std::size_t(e)];
      row.pct = config.quantile_pcts[std::size_t(q)];
      row.hits = hits[std::size_t(e * Q + q)];
      row.n = counts[std::size_t(e * Q + q)];
      row.coverage = row.n > 0 ? double(row.hits) / double(row.n) : 0.0;
      row.ci = row.n > 0 ? clopper_pearson(row.hits, row.n) : Interval{0.0, 1.0};
      report.rows.push_back(std::move(row));
    }
  return report;
}

// ---------------------------------------------------------------------------
// Household pipeline.
// ---------------------------------------------------------------------------

struct HouseholdAnalysis {
  PooledHouseholds pooled;
  EmResult em;
  int D = 0;
  double cumhaz = 0.0;       // marginal NA at D days
  Interval cumhaz_ci;
  double survival = 0.0;     // marginal KM at D days
  Interval survival_ci;
  double contact_probability = 0.0;  // 1 - survival
  Interval contact_probability_ci;
  std::vector<ParametricFit> parametric;  // exponential, weibull, gamma

  std::string summary() const {
    auto fmt2 = [](double v) { return fmt_fixed(v, 2); };
    std::string s = "household infectious contact probability: " + fmt2(contact_probability) +
                    " (" + fmt2(contact_probability_ci.lo) + ", " +
                    fmt2(contact_probability_ci.hi) + ")\n";
    s += "cumulative hazard at " + std::to_string(D) + " days: " + fmt_fixed(cumhaz, 4) + " (" +
         fmt_fixed(cumhaz_ci.lo, 4) + ", " + fmt_fixed(cumhaz_ci.hi, 4) + ")\n";
    s += "survival at " + std::to_string(D) + " days: " + fmt_fixed(survival, 4) + " (" +
         fmt_fixed(survival_ci.lo, 4) + ", " + fmt_fixed(survival_ci.hi, 4) + ")\n";
    for (const auto& f : parametric)
      s += std::string(family_name(f.model.family())) +
           " fit cumulative hazard: " + fmt_fixed(f.model.cumulative_hazard(double(D)), 4) + "\n";
    s += "households used: " + std::to_string(pooled.households_used) +
         ", excluded: " + std::to_string(int(pooled.excluded.size())) + "\n";
    s += std::string("em converged: ") + (em.converged ? "yes" : "no") + " in " +
         std::to_string(em.iterations) + " iterations\n";
    return s;
  }
};

/// Marginal estimation of the within-household contact-interval distribution
/// under a constant natural history, plus parametric comparison fits.
inline HouseholdAnalysis household_analyze(const std::vector<Household>& households,
                                           const NaturalHistory& nh, EMConfig em_config = {},
                                           bool with_parametric = true, double alpha = 0.05) {
  HouseholdAnalysis out;
  out.D = nh.infectious;
  out.pooled = build_pooled_record(households, nh);
  out.em = em_estimate(out.pooled.record, em_config);
  const double tau = double(nh.infectious);
  out.cumhaz = out.em.estimate.cumhaz_at(tau);
  const double var = out.em.estimate.variance_at(tau);
  const BandPoint hz = cumhaz_limits(out.cumhaz, var, alpha);
  out.cumhaz_ci = {hz.lo, hz.hi};
  out.survival = out.em.estimate.survival_at(tau);
  const BandPoint sv = survival_limits(out.cumhaz, var, alpha);
  out.survival_ci = {sv.lo, sv.hi};
  out.contact_probability = 1.0 - out.survival;
  out.contact_probability_ci = {1.0 - sv.hi, 1.0 - sv.lo};
  if (with_parametric) {
    for (auto family : {HazardFamily::Exponential, HazardFamily::Weibull, HazardFamily::Gamma})
      out.parametric.push_back(fit_parametric(out.pooled.record, family));
  }
  return out;
}

struct SensitivityCell {
  NaturalHistory nh;
  double contact_probability = 0.0;
  Interval ci;
  bool converged = false;
  int excluded_households = 0;
  std::string error;
};

/// household_analyze across the natural-history grid.
inline std::vector<SensitivityCell> sensitivity_analysis(
    const std::vector<Household>& households, const std::vector<int>& incubation_days,
    const std::vector<int>& latent_days, const std::vector<int>& infectious_days,
    EMConfig em_config = {}) {
  std::vector<SensitivityCell> cells;
  for (int inc : incubation_days)
    for (int lat : latent_days)
      for (int inf : infectious_days) {
        SensitivityCell cell;
        cell.nh = NaturalHistory{inc, lat, inf};
        try {
          auto res = household_analyze(households, cell.nh, em_config, false);
          cell.contact_probability = res.contact_probability;
          cell.ci = res.contact_probability_ci;
          cell.converged = res.em.converged;
          cell.excluded_households = int(res.pooled.excluded.size());
        } catch (const std::exception& ex) {
          cell.error = ex.what();
        }
        cells.push_back(std::move(cell));
      }
  return cells;
}

inline std::string sensitivity_csv(const std::vector<SensitivityCell>& cells) {
  std::string s = "incubation,latent,infectious,contact_prob,lo,hi,converged,excluded,error\n";
  for (const auto& c : cells)
    s += std::to_string(c.nh.incubation) + "," + std::to_string(c.nh.latent) + "," +
         std::to_string(c.nh.infectious) + "," + fmt_double(c.contact_probability) + "," +
         fmt_double(c.ci.lo) + "," + fmt_double(c.ci.hi) + "," + (c.converged ? "1" : "0") + "," +
         std::to_string(c.excluded_households) + "," + c.error + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Household secondary-attack-rate forward simulation.
// ---------------------------------------------------------------------------

struct SarResult {
  double mean = 0.0;
  Interval percentile_ci;  // 2.5 / 97.5 percentiles of the replicate SARs
  int replicates = 0;
};

/// Replays generation-based within-household chains: every infective contacts
/// each remaining susceptible once with probability p; the pooled SAR is
/// infected contacts over initially susceptible contacts.
inline SarResult sar_forward_simulation(const std::vector<Household>& households, double p,
                                        int replicates, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("sar_forward_simulation: p outside [0,1]");
  if (replicates <= 0) throw DataError("sar_forward_simulation: replicates must be positive");
  std::vector<double> sars(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    Rng rng = Rng::stream(seed, std::uint64_t(r));
    long infected = 0, at_risk = 0;
    for (const auto& h : households) {
      const int a = std::max(1, h.primaries());
      int sus = h.size() - a;
      at_risk += sus;
      int current = a;
      while (current > 0 && sus > 0) {
        const double escape_all = std::pow(1.0 - p, double(current));
        int newly = 0;
        for (int s = 0; s < sus; ++s)
          if (rng.uniform() >= escape_all) ++newly;
        infected += newly;
        sus -= newly;
        current = newly;
      }
    }
    sars[std::size_t(r)] = at_risk > 0 ? double(infected) / double(at_risk) : 0.0;
  }
  SarResult out;
  out.replicates = replicates;
  for (double s : sars) out.mean += s;
  out.mean /= double(replicates);
  std::vector<double> sorted = sars;
  std::sort(sorted.begin(), sorted.end());
  out.percentile_ci = {quantile_sorted(sorted, 0.025), quantile_sorted(sorted, 0.975)};
  return out;
}

// ---------------------------------------------------------------------------
// Presets: the six simulation cells, desk scale by default.
// ---------------------------------------------------------------------------

inline CoverageStudyConfig coverage_preset(const std::string& name, bool paper_scale = false) {
  CoverageStudyConfig cfg;
  cfg.sim.n = paper_scale ? 100000 : 10000;
  cfg.sim.stop_m = paper_scale ? 1000 : 300;
  cfg.replicates = paper_scale ? 1000 : 200;
  cfg.sim.ws_k = 10;
  cfg.sim.ws_p = 0.1;
  cfg.sim.latent = DurationModel::constant(0.0);
  cfg.sim.infectious = DurationModel::exponential(1.0);

  if (name == "table1-w05") {
    cfg.sim.mode = ContactMode::Network;
    cfg.sim.contact = HazardModel::weibull(0.5, 1.0);
  } else if (name == "table1-exp") {
    cfg.sim.mode = ContactMode::Network;
    cfg.sim.contact = HazardModel::exponential(1.0);
  } else if (name == "table1-w2") {
    cfg.sim.mode = ContactMode::Network;
    cfg.sim.contact = HazardModel::weibull(2.0, 1.0);
  } else if (name == "table2-w05") {
    cfg.sim.mode = ContactMode::MassAction;
    cfg.sim.contact = HazardModel::weibull(0.5, 5.0);
  } else if (name == "table2-exp") {
    cfg.sim.mode = ContactMode::MassAction;
    cfg.sim.contact = HazardModel::exponential(2.0);
  } else if (name == "table2-w2") {
    cfg.sim.mode = ContactMode::MassAction;
    cfg.sim.contact = HazardModel::weibull(2.0, 1.0);
  } else {
    throw DataError("unknown preset: " + name);
  }
  cfg.em.tolerance = (cfg.sim.mode == ContactMode::Network) ? 5e-4 : 5e-3;
  return cfg;
}

}  // namespace epihaz
