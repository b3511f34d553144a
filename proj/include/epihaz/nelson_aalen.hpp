#pragma once

#include <algorithm>
#include <vector>

#include "epihaz/record.hpp"
#include "epihaz/risk_set.hpp"
#include "epihaz/step_estimate.hpp"

namespace epihaz {

namespace detail {

/// Observed event ages: one per non-imported infection, measured from the
/// recorded infector's onset of infectiousness.
inline std::vector<double> observed_event_ages(const EpidemicRecord& rec) {
  std::vector<double> ages;
  for (int j = 0; j < rec.n(); ++j) {
    const auto& pj = rec.persons[j];
    if (!pj.infected() || rec.imported(j)) continue;
    if (rec.infector[j] < 0)
      throw DataError("who-infected-whom estimator: person " + std::to_string(j + 1) +
                      " has no recorded infector");
    const double age = pj.t_infection - rec.persons[rec.infector[j]].onset();
    if (!(age > 0.0)) throw DataError("event age outside (0, domain]");
    ages.push_back(age);
  }
  std::sort(ages.begin(), ages.end());
  return ages;
}

/// Jump structure shared by the Nelson-Aalen and Kaplan-Meier estimates.
/// Events at identical ages are merged into one jump with d_k > 1.
inline StepEstimate hazard_step_estimate(const std::vector<double>& sorted_ages,
                                         const RiskSetFunction& risk_fn) {
  StepEstimate est;
  est.domain_end = risk_fn.domain_end();
  std::vector<double> mass, risk;
  std::size_t a = 0;
  double var = 0.0;
  while (a < sorted_ages.size()) {
    const double age = sorted_ages[a];
    std::size_t b = a;
    while (b < sorted_ages.size() && sorted_ages[b] == age) ++b;
    const double d = double(b - a);
    const int y = risk_fn.at(age);
    if (y <= 0) throw DataError("event age beyond the risk set domain");
    est.times.push_back(age);
    est.increments.push_back(d / double(y));
    var += d / (double(y) * double(y));
    est.cumhaz_var.push_back(var);
    mass.push_back(d);
    risk.push_back(double(y));
    a = b;
  }
  finish_step_estimate(est, mass, risk);
  return est;
}

}  // namespace detail

/// Nelson-Aalen estimate of the contact-interval cumulative hazard when
/// who-infected-whom is observed (network mode).
inline StepEstimate nelson_aalen(const EpidemicRecord& rec) {
  if (rec.mass_action())
    throw DataError("nelson_aalen: use nelson_aalen_mass_action for mass-action records");
  return detail::hazard_step_estimate(detail::observed_event_ages(rec), risk_set(rec));
}

/// Mass-action variant: the same jump structure over Y_*, estimating the
/// normalized cumulative hazard.
inline StepEstimate nelson_aalen_mass_action(const EpidemicRecord& rec) {
  if (!rec.mass_action()) throw DataError("nelson_aalen_mass_action: record is in network mode");
  return detail::hazard_step_estimate(detail::observed_event_ages(rec), mass_action_risk_set(rec));
}

/// Product-limit (Kaplan-Meier) estimate; same jumps, survival-scale columns.
inline StepEstimate kaplan_meier(const EpidemicRecord& rec) { return nelson_aalen(rec); }
inline StepEstimate kaplan_meier_mass_action(const EpidemicRecord& rec) {
  return nelson_aalen_mass_action(rec);
}

}  // namespace epihaz
