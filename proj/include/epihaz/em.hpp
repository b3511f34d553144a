#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "epihaz/hazard.hpp"
#include "epihaz/nelson_aalen.hpp"
#include "epihaz/record.hpp"
#include "epihaz/risk_set.hpp"
#include "epihaz/smoothing.hpp"
#include "epihaz/step_estimate.hpp"

namespace epihaz {

/// Per-infectee candidate infectors with probabilities summing to 1. Observed
/// infectors (partially-observed transmission networks) appear as singleton
/// candidates with probability 1.
struct WeightedEventSet {
  struct Entry {
    int infectee = 0;
    int infector = 0;
    double age = 0.0;
    double p = 0.0;
  };
  std::vector<Entry> entries;                    // grouped by infectee
  std::vector<std::pair<int, int>> groups;       // [begin, end) per infectee

  std::string csv() const {
    std::string s = "j,i,tau,p\n";
    for (const auto& e : entries)
      s += std::to_string(e.infectee + 1) + "," + std::to_string(e.infector + 1) + "," +
           fmt_double(e.age) + "," + fmt_double(e.p) + "\n";
    return s;
  }
};

struct EMConfig {
  double tolerance = 5e-4;  // L1 threshold on the percentile grid
  int min_iterations = 5;
  int max_iterations = 50;
  SmootherConfig smoother;
  std::optional<HazardModel> initial_hazard;  // default: all networks equally likely
  std::vector<double> l1_percentiles = default_l1_percentiles();

  static std::vector<double> default_l1_percentiles() {
    std::vector<double> p;
    for (int k = 5; k <= 95; k += 5) p.push_back(k / 100.0);
    return p;
  }
};

struct EmIterationLog {
  std::vector<double> l1;  // per iteration
  std::string csv() const {
    std::string s = "iter,l1diff\n";
    for (std::size_t k = 0; k < l1.size(); ++k)
      s += std::to_string(k + 1) + "," + fmt_double(l1[k]) + "\n";
    return s;
  }
};

struct EmResult {
  StepEstimate estimate;  // marginal Nelson-Aalen (+ product-limit survival columns)
  WeightedEventSet weights;
  EmIterationLog log;
  bool converged = false;
  int iterations = 0;
};

/// Variance curve evaluable at any age <= domain end.
struct VarianceCurve {
  std::vector<double> times;
  std::vector<double> values;
  double at(double tau) const {
    auto it = std::upper_bound(times.begin(), times.end(), tau);
    return it == times.begin() ? 0.0 : values[std::size_t(it - times.begin()) - 1];
  }
};

/// The fixed combinatorial structure the EM iterates over: candidate
/// (infector, infectee, age) triples, the risk set, and the L1 grid. Weights
/// are the only state that changes between iterations.
class EmEngine {
 public:
  EmEngine(const EpidemicRecord& rec, EMConfig config = {})
      : config_(std::move(config)), risk_(observed_risk_set(rec)) {
    for (int j = 0; j < rec.n(); ++j) {
      const auto& pj = rec.persons[j];
      if (!pj.infected() || rec.imported(j)) continue;
      const int begin = int(cand_infectee_.size());
      if (rec.infector[j] >= 0) {
        push_candidate(j, rec.infector[j], pj.t_infection - rec.persons[rec.infector[j]].onset());
        fixed_group_.push_back(true);
      } else {
        for (int i : infectious_set(rec, j))
          push_candidate(j, i, pj.t_infection - rec.persons[i].onset());
        fixed_group_.push_back(false);
      }
      groups_.emplace_back(begin, int(cand_infectee_.size()));
    }

    // Jump ages: sorted unique candidate ages, each candidate mapped to one.
    std::vector<int> order(cand_infectee_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return cand_age_[a] < cand_age_[b]; });
    cand_jump_.resize(order.size());
    for (int c : order) {
      if (jump_ages_.empty() || jump_ages_.back() != cand_age_[c]) {
        jump_ages_.push_back(cand_age_[c]);
        jump_risk_.push_back(double(risk_.at(cand_age_[c])));
        if (jump_risk_.back() <= 0.0) throw DataError("candidate age beyond the risk set domain");
      }
      cand_jump_[c] = int(jump_ages_.size()) - 1;
    }
    age_order_ = std::move(order);

    // L1 grid: percentiles of the possible contact intervals, frozen now.
    if (!risk_.windows.empty()) {
      for (double p : config_.l1_percentiles) {
        const double g = quantile_sorted(risk_.windows, p);
        auto it = std::upper_bound(jump_ages_.begin(), jump_ages_.end(), g);
        grid_jump_.push_back(int(it - jump_ages_.begin()) - 1);  // -1: estimate still 0 there
      }
    }

    weights_.assign(cand_infectee_.size(), 0.0);
    init_uniform();
  }

  int num_groups() const { return int(groups_.size()); }
  std::size_t num_candidates() const { return cand_infectee_.size(); }
  bool all_observed() const {
    for (bool f : fixed_group_)
      if (!f) return false;
    return true;
  }

  /// All possible transmission networks equally likely.
  void init_uniform() {
    for (auto [b, e] : groups_) {
      const double p = 1.0 / double(e - b);
      for (int c = b; c < e; ++c) weights_[c] = p;
    }
  }

  /// E-step: reweight candidates proportionally to the hazard at their ages.
  void e_step(const std::function<double(double)>& hazard_at) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto [b, e] = groups_[g];
      if (fixed_group_[g]) {
        weights_[b] = 1.0;
        continue;
      }
      double total = 0.0;
      for (int c = b; c < e; ++c) {
        weights_[c] = hazard_at(cand_age_[c]);
        total += weights_[c];
      }
      if (!(total > 0.0))
        throw DataError("degenerate hazard model: all candidate hazards are zero");
      for (int c = b; c < e; ++c) weights_[c] /= total;
    }
  }

  void e_step(const HazardModel& model) {
    e_step([&](double age) { return model.hazard(age); });
  }

  /// M-step output: the marginal Nelson-Aalen estimate under the current
  /// weights, with the conditional-variance formula in cumhaz_var.
  StepEstimate build_estimate() const {
    StepEstimate est;
    est.domain_end = risk_.domain_end();
    est.times = jump_ages_;
    const std::size_t K = jump_ages_.size();
    std::vector<double> mass(K, 0.0);
    for (std::size_t c = 0; c < weights_.size(); ++c) mass[cand_jump_[c]] += weights_[c];
    est.increments.resize(K);
    for (std::size_t k = 0; k < K; ++k) est.increments[k] = mass[k] / jump_risk_[k];

    // sigma~^2(tau) = 2 int dN~/Y^2 - sum_j (int dN~_j / Y)^2, swept in age
    // order with a running per-infectee integral.
    est.cumhaz_var.assign(K, 0.0);
    std::vector<double> group_integral(groups_.size(), 0.0);
    double two_a = 0.0, sum_b2_delta = 0.0;
    std::size_t idx = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const double y = jump_risk_[k];
      while (idx < age_order_.size() && cand_jump_[age_order_[idx]] == int(k)) {
        const int c = age_order_[idx];
        const double inc = weights_[c] / y;
        two_a += 2.0 * weights_[c] / (y * y);
        double& bj = group_integral[cand_group_[c]];
        sum_b2_delta += inc * (2.0 * bj + inc);
        bj += inc;
        ++idx;
      }
      est.cumhaz_var[k] = two_a - sum_b2_delta;
    }
    finish_step_estimate(est, mass, std::vector<double>(jump_risk_));
    return est;
  }

  /// Mean absolute difference between two iterates on the frozen grid.
  double l1_difference(const StepEstimate& a, const StepEstimate& b) const {
    double s = 0.0;
    for (int gj : grid_jump_) {
      const double va = gj < 0 ? 0.0 : a.cumhaz[gj];
      const double vb = gj < 0 ? 0.0 : b.cumhaz[gj];
      s += std::abs(va - vb);
    }
    return grid_jump_.empty() ? 0.0 : s / double(grid_jump_.size());
  }

  /// Expected log likelihood G(S | current weights) of a candidate survival
  /// curve with jumps on this engine's ages.
  double expected_loglik(const StepEstimate& candidate) const {
    const std::size_t K = jump_ages_.size();
    std::vector<double> mass(K, 0.0);
    for (std::size_t c = 0; c < weights_.size(); ++c) mass[cand_jump_[c]] += weights_[c];
    double g = 0.0, prev_s = 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double s = candidate.survival_at(jump_ages_[k]);
      const double p = prev_s > 0.0 ? (prev_s - s) / prev_s : 0.0;
      const double dn = mass[k];
      const double censored = jump_risk_[k] - dn;
      if (dn > 0.0) g += (p > 0.0) ? dn * std::log(p) : -kInf;
      if (censored > 0.0) g += (p < 1.0) ? censored * std::log1p(-p) : -kInf;
      prev_s = s;
    }
    return g;
  }

  WeightedEventSet weighted_events() const {
    WeightedEventSet set;
    set.groups = groups_;
    set.entries.resize(cand_infectee_.size());
    for (std::size_t c = 0; c < cand_infectee_.size(); ++c)
      set.entries[c] = {cand_infectee_[c], cand_infector_[c], cand_age_[c], weights_[c]};
    return set;
  }

  void set_weights(const WeightedEventSet& set) {
    if (set.entries.size() != weights_.size())
      throw std::invalid_argument("set_weights: size mismatch");
    for (std::size_t c = 0; c < weights_.size(); ++c) weights_[c] = set.entries[c].p;
  }

  const SmootherConfig& smoother_config() const { return config_.smoother; }
  const EMConfig& config() const { return config_; }

 private:
  void push_candidate(int j, int i, double age) {
    if (!(age > 0.0)) throw DataError("candidate event age outside (0, domain]");
    cand_infectee_.push_back(j);
    cand_infector_.push_back(i);
    cand_age_.push_back(age);
    cand_group_.push_back(int(groups_.size()));
  }

  EMConfig config_;
  RiskSetFunction risk_;
  std::vector<int> cand_infectee_, cand_infector_, cand_group_;
  std::vector<double> cand_age_;
  std::vector<std::pair<int, int>> groups_;
  std::vector<bool> fixed_group_;
  std::vector<int> cand_jump_;    // candidate -> jump index
  std::vector<int> age_order_;    // candidates sorted by age
  std::vector<double> jump_ages_;
  std::vector<double> jump_risk_;
  std::vector<int> grid_jump_;    // L1 grid point -> last jump index at or before it
  std::vector<double> weights_;
};

/// Candidate-infector probabilities under a given hazard model.
inline WeightedEventSet infector_probabilities(const EpidemicRecord& rec,
                                               const HazardModel& model) {
  EmEngine engine(rec);
  engine.e_step(model);
  return engine.weighted_events();
}

/// Marginal Nelson-Aalen estimate given a known hazard: the probability-
/// weighted average of the per-network Nelson-Aalen estimates.
inline StepEstimate marginal_nelson_aalen_given(const EpidemicRecord& rec,
                                                const HazardModel& model) {
  EmEngine engine(rec);
  engine.e_step(model);
  return engine.build_estimate();
}

/// Marginal estimate (and conditional variance) for externally supplied
/// weights, e.g. the converged weights of an EM run.
inline StepEstimate marginal_estimate_from_weights(const EpidemicRecord& rec,
                                                   const WeightedEventSet& weights) {
  EmEngine engine(rec);
  engine.set_weights(weights);
  return engine.build_estimate();
}

inline VarianceCurve marginal_variance(const EpidemicRecord& rec, const WeightedEventSet& weights) {
  const StepEstimate est = marginal_estimate_from_weights(rec, weights);
  return VarianceCurve{est.times, est.cumhaz_var};
}

namespace detail {

inline EmResult em_run(const EpidemicRecord& rec, const EMConfig& config) {
  EmEngine engine(rec, config);
  EmResult out;

  if (config.initial_hazard)
    engine.e_step(*config.initial_hazard);
  StepEstimate current = engine.build_estimate();

  if (engine.all_observed() || engine.num_candidates() == 0) {
    // Fully observed transmission: the weights cannot move, so the first
    // estimate is already the limit.
    out.estimate = std::move(current);
    out.weights = engine.weighted_events();
    out.converged = true;
    return out;
  }

  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    SmoothedHazard hazard;
    try {
      hazard = smooth_step_estimate(current, current.cumhaz_var, config.smoother);
    } catch (const DataError&) {
      // Under 2 jumps: a flat hazard cannot reorder the weights; stop here.
      out.converged = true;
      break;
    }
    engine.e_step([&](double age) { return hazard(age); });
    StepEstimate next = engine.build_estimate();
    const double l1 = engine.l1_difference(next, current);
    out.log.l1.push_back(l1);
    current = std::move(next);
    if (iter + 1 >= config.min_iterations && l1 < config.tolerance) {
      out.converged = true;
      ++iter;
      break;
    }
  }
  out.iterations = iter;
  out.estimate = std::move(current);
  out.weights = engine.weighted_events();
  return out;
}

}  // namespace detail

/// EM algorithm for the marginal Nelson-Aalen estimate: smooth the current
/// estimate, reweight the candidate infectors, recompute, and repeat until
/// the L1 difference over the percentile grid falls below tolerance.
inline EmResult em_estimate(const EpidemicRecord& rec, const EMConfig& config = {}) {
  if (rec.mass_action())
    throw DataError("em_estimate: use em_estimate_mass_action for mass-action records");
  return detail::em_run(rec, config);
}

/// Mass-action variant: identical loop over Y_*; the candidate weights depend
/// on the normalized hazard only up to scale.
inline EmResult em_estimate_mass_action(const EpidemicRecord& rec, const EMConfig& config = {}) {
  if (!rec.mass_action()) throw DataError("em_estimate_mass_action: record is in network mode");
  return detail::em_run(rec, config);
}

}  // namespace epihaz
