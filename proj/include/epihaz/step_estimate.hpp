#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "epihaz/csv.hpp"
#include "epihaz/math.hpp"

namespace epihaz {

/// A cadlag step estimate on [0, domain_end]: cumulative hazard with pointwise
/// variance, plus the product-limit survival curve built from the same jumps.
struct StepEstimate {
  std::vector<double> times;       // strictly increasing jump ages
  std::vector<double> increments;  // hazard increment at each jump (d_k / Y_k or weighted)
  std::vector<double> cumhaz;      // prefix sums of increments
  std::vector<double> cumhaz_var;  // pointwise variance of the cumulative hazard
  std::vector<double> survival;    // product-limit survival at each jump
  std::vector<double> survival_var;
  double domain_end = 0.0;

  std::size_t size() const { return times.size(); }

  // Right-constant (cadlag) evaluation; value before the first jump is 0 / 1.
 private:
  long idx(double tau) const {
    auto it = std::upper_bound(times.begin(), times.end(), tau);
    return long(it - times.begin()) - 1;
  }

 public:
  double cumhaz_at(double tau) const {
    const long i = idx(tau);
    return i < 0 ? 0.0 : cumhaz[i];
  }
  double variance_at(double tau) const {
    const long i = idx(tau);
    return i < 0 ? 0.0 : cumhaz_var[i];
  }
  double survival_at(double tau) const {
    const long i = idx(tau);
    return i < 0 ? 1.0 : survival[i];
  }
};

/// Builds the derived columns from (times, increments, cumhaz_var) where
/// per-jump event mass d_k and risk Y_k give the survival factors.
inline void finish_step_estimate(StepEstimate& est, const std::vector<double>& event_mass,
                                 const std::vector<double>& risk) {
  const std::size_t k = est.times.size();
  est.cumhaz.resize(k);
  est.survival.resize(k);
  est.survival_var.resize(k);
  double ch = 0.0, surv = 1.0, greenwood = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    ch += est.increments[a];
    est.cumhaz[a] = ch;
    const double frac = event_mass[a] / risk[a];
    surv *= std::max(0.0, 1.0 - frac);
    est.survival[a] = surv;
    if (risk[a] > event_mass[a])
      greenwood += event_mass[a] / (risk[a] * (risk[a] - event_mass[a]));
    est.survival_var[a] = surv * surv * greenwood;
  }
}

struct BandPoint {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // estimate was 0 there; limits reported as [0, 0]
};

/// Log-transformed pointwise limits for the cumulative hazard:
/// L * exp(+-(sigma / L) * z).
inline BandPoint cumhaz_limits(double value, double var, double alpha) {
  BandPoint b;
  if (value <= 0.0) {
    b.degenerate = true;
    return b;
  }
  if (var <= 0.0) {
    b.lo = b.hi = value;
    return b;
  }
  const double z = norm_quantile(1.0 - alpha / 2.0);
  const double f = std::exp(z * std::sqrt(var) / value);
  b.lo = value / f;
  b.hi = value * f;
  return b;
}

/// Survival limits via the exp(-Lambda) mapping of the hazard limits.
inline BandPoint survival_limits(double cumhaz_value, double cumhaz_variance, double alpha) {
  BandPoint h = cumhaz_limits(cumhaz_value, cumhaz_variance, alpha);
  BandPoint s;
  s.degenerate = h.degenerate;
  if (h.degenerate) {
    s.lo = s.hi = 1.0;
    return s;
  }
  s.lo = std::exp(-h.hi);
  s.hi = std::exp(-h.lo);
  return s;
}

struct ConfidenceBand {
  std::vector<double> times;
  std::vector<double> lo, hi;
  std::vector<char> degenerate;
};

/// Pointwise band at every jump of the estimate.
inline ConfidenceBand confidence_band(const StepEstimate& est, double alpha,
                                      bool survival_scale = false) {
  ConfidenceBand band;
  band.times = est.times;
  band.lo.resize(est.size());
  band.hi.resize(est.size());
  band.degenerate.resize(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    const BandPoint b = survival_scale
                            ? survival_limits(est.cumhaz[k], est.cumhaz_var[k], alpha)
                            : cumhaz_limits(est.cumhaz[k], est.cumhaz_var[k], alpha);
    band.lo[k] = b.lo;
    band.hi[k] = b.hi;
    band.degenerate[k] = b.degenerate;
  }
  return band;
}

/// `tau,cumhaz,var,lo95,hi95` rows (or the survival analog, flagged in the
/// header line).
inline std::string estimate_to_csv(const StepEstimate& est, double alpha = 0.05,
                                   bool survival_scale = false) {
  std::string s = survival_scale ? "#kind=survival" : "#kind=cumhaz";
  s += ",alpha=" + fmt_double(alpha) + ",domain_end=" + fmt_double(est.domain_end) + "\n";
  s += survival_scale ? "tau,survival,var,lo,hi\n" : "tau,cumhaz,var,lo,hi\n";
  for (std::size_t k = 0; k < est.size(); ++k) {
    const BandPoint b = survival_scale
                            ? survival_limits(est.cumhaz[k], est.cumhaz_var[k], alpha)
                            : cumhaz_limits(est.cumhaz[k], est.cumhaz_var[k], alpha);
    const double value = survival_scale ? est.survival[k] : est.cumhaz[k];
    const double var = survival_scale ? est.survival_var[k] : est.cumhaz_var[k];
    s += fmt_double(est.times[k]) + "," + fmt_double(value) + "," + fmt_double(var) + "," +
         fmt_double(b.lo) + "," + fmt_double(b.hi) + "\n";
  }
  return s;
}

}  // namespace epihaz
