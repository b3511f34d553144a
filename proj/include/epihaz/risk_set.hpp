#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "epihaz/record.hpp"

namespace epihaz {

/// Left-continuous, nonincreasing count of observation windows still open at
/// infectiousness age tau. Stored as the sorted multiset of window lengths:
/// Y(tau) = #{windows >= tau}.
struct RiskSetFunction {
  std::vector<double> windows;  // ascending, all > 0

  int at(double tau) const {
    auto it = std::lower_bound(windows.begin(), windows.end(), tau);
    return int(windows.end() - it);
  }

  /// Largest age with Y > 0.
  double domain_end() const { return windows.empty() ? 0.0 : windows.back(); }
};

/// Per-pair observation window for (i, j): tau in (0, w] with
/// w = min(iota_i, t_j - onset_i, T - onset_i). Nonpositive w means the pair
/// was never at risk.
inline double pair_window(const EpidemicRecord& rec, int i, int j) {
  const auto& pi = rec.persons[i];
  const auto& pj = rec.persons[j];
  const double oi = pi.onset();
  double w = std::min(pi.infectious_duration, rec.T - oi);
  if (pj.infected()) w = std::min(w, pj.t_infection - oi);
  return w;
}

/// Calls fn(i, j, w) for every ordered network pair with a positive window.
template <typename Fn>
inline void for_each_exposure_window(const EpidemicRecord& rec, Fn&& fn) {
  if (rec.mass_action())
    throw DataError("exposure windows need an explicit network (see the mass-action variants)");
  for (int i = 0; i < rec.n(); ++i) {
    const auto& pi = rec.persons[i];
    if (!pi.infected() || pi.onset() > rec.T) continue;
    for (int j : rec.contacts.out[i]) {
      const double w = pair_window(rec, i, j);
      if (w > 0.0) fn(i, j, w);
    }
  }
}

/// Y(tau): number of ordered pairs still at risk at age tau (network mode).
inline RiskSetFunction risk_set(const EpidemicRecord& rec) {
  RiskSetFunction rs;
  for_each_exposure_window(rec, [&](int, int, double w) { rs.windows.push_back(w); });
  std::sort(rs.windows.begin(), rs.windows.end());
  return rs;
}

/// Y_*(tau): number of infected persons still infectious and under
/// observation at age tau (mass-action mode).
inline RiskSetFunction mass_action_risk_set(const EpidemicRecord& rec) {
  if (!rec.mass_action())
    throw DataError("mass_action_risk_set: record is in network mode");
  RiskSetFunction rs;
  for (const auto& p : rec.persons) {
    if (!p.infected() || p.onset() > rec.T) continue;
    const double w = std::min(p.infectious_duration, rec.T - p.onset());
    if (w > 0.0) rs.windows.push_back(w);
  }
  std::sort(rs.windows.begin(), rs.windows.end());
  return rs;
}

/// Mode-appropriate risk set.
inline RiskSetFunction observed_risk_set(const EpidemicRecord& rec) {
  return rec.mass_action() ? mass_action_risk_set(rec) : risk_set(rec);
}

/// The censored-and-uncensored contact intervals whose percentiles define the
/// estimator evaluation grids: the risk-set window lengths.
inline std::vector<double> possible_contact_intervals(const EpidemicRecord& rec) {
  return observed_risk_set(rec).windows;
}

}  // namespace epihaz
