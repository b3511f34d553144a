#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "epihaz/csv.hpp"
#include "epihaz/record.hpp"
#include "epihaz/rng.hpp"

namespace epihaz {

inline constexpr int kNoOnset = std::numeric_limits<int>::min();

/// Daily household surveillance data: symptom onset day per member, kNoOnset
/// for members who never became cases.
struct Household {
  int id = 0;
  std::vector<int> onset_day;

  int size() const { return int(onset_day.size()); }
  int cases() const {
    int c = 0;
    for (int d : onset_day) c += (d != kNoOnset);
    return c;
  }
  int primaries() const {
    int lo = kNoOnset;
    for (int d : onset_day)
      if (d != kNoOnset && (lo == kNoOnset || d < lo)) lo = d;
    if (lo == kNoOnset) return 0;
    int c = 0;
    for (int d : onset_day) c += (d == lo);
    return c;
  }
};

/// Assumed constant natural history, in days.
struct NaturalHistory {
  int incubation = 2;  // infection -> symptom onset
  int latent = 0;      // infection -> onset of infectiousness
  int infectious = 6;  // infectious period length

  void check() const {
    if (latent < 0 || incubation < latent)
      throw DataError("natural history: need incubation >= latent >= 0");
    if (infectious < 1) throw DataError("natural history: infectious period must be >= 1 day");
  }
  std::string str() const {
    return "(" + std::to_string(incubation) + "," + std::to_string(latent) + "," +
           std::to_string(infectious) + ")";
  }
};

// --------------------------------------------------------------------------
// CSV: `household_id,person_id,onset_day`, blank onset for non-cases.
// --------------------------------------------------------------------------

inline std::string households_to_csv(const std::vector<Household>& households) {
  std::string s = "household_id,person_id,onset_day\n";
  for (const auto& h : households)
    for (int p = 0; p < h.size(); ++p) {
      s += std::to_string(h.id) + "," + std::to_string(p + 1) + ",";
      if (h.onset_day[p] != kNoOnset) s += std::to_string(h.onset_day[p]);
      s += "\n";
    }
  return s;
}

inline std::vector<Household> households_from_csv(const std::vector<std::string>& lines) {
  std::vector<Household> out;
  if (lines.empty()) throw DataError("household csv: empty file");
  std::vector<int> hh_index;  // id -> position in out
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = trim(lines[li]);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw DataError("household csv: expected 3 fields per row");
    const int hid = int(parse_long(trim(f[0])));
    auto it = std::find_if(out.begin(), out.end(), [&](const Household& h) { return h.id == hid; });
    if (it == out.end()) {
      out.push_back(Household{hid, {}});
      it = out.end() - 1;
    }
    const int pid = int(parse_long(trim(f[1])));
    if (int(it->onset_day.size()) < pid) it->onset_day.resize(pid, kNoOnset);
    const auto onset = trim(f[2]);
    it->onset_day[pid - 1] = onset.empty() ? kNoOnset : int(parse_long(onset));
  }
  return out;
}

// --------------------------------------------------------------------------
// Pooled record construction under a natural-history assumption.
// --------------------------------------------------------------------------

struct PooledHouseholds {
  EpidemicRecord record;
  std::vector<std::string> issues;    // one note per excluded household
  std::vector<int> excluded;          // household ids dropped
  int households_used = 0;
};

/// Builds one pooled record: infection day = onset - incubation, complete
/// contact graph within each household, earliest case(s) treated as imported
/// co-primaries, each household shifted so its primaries are infected at 0.
/// Households with a secondary whose onset fits no candidate window are
/// excluded and reported.
inline PooledHouseholds build_pooled_record(const std::vector<Household>& households,
                                            const NaturalHistory& nh) {
  nh.check();
  PooledHouseholds out;
  std::vector<std::pair<int, int>> edges;
  auto& rec = out.record;

  for (const auto& h : households) {
    if (h.size() == 0 || h.cases() == 0) {
      out.excluded.push_back(h.id);
      out.issues.push_back("household " + std::to_string(h.id) + ": no cases");
      continue;
    }
    int min_onset = kNoOnset;
    for (int d : h.onset_day)
      if (d != kNoOnset && (min_onset == kNoOnset || d < min_onset)) min_onset = d;

    // Per-member histories, shifted so primary infection lands on day 0.
    std::vector<PersonHistory> persons(h.size());
    std::vector<int> infector(h.size(), kInfectorUnknown);
    bool consistent = true;
    for (int p = 0; p < h.size(); ++p) {
      if (h.onset_day[p] == kNoOnset) continue;
      auto& ph = persons[p];
      ph.t_infection = double(h.onset_day[p] - min_onset);  // = onset - incubation, shifted
      ph.latent = double(nh.latent);
      ph.infectious_duration = double(nh.infectious);
      if (h.onset_day[p] == min_onset) infector[p] = kInfectorImported;
    }
    for (int p = 0; p < h.size() && consistent; ++p) {
      if (!persons[p].infected() || infector[p] == kInfectorImported) continue;
      bool candidate = false;
      for (int q = 0; q < h.size(); ++q) {
        if (q == p || !persons[q].infected()) continue;
        if (persons[q].onset() < persons[p].t_infection &&
            persons[p].t_infection <= persons[q].recovery())
          candidate = true;
      }
      if (!candidate) {
        consistent = false;
        out.issues.push_back("household " + std::to_string(h.id) + ": case with onset day " +
                             std::to_string(h.onset_day[p]) +
                             " fits no candidate infector window");
      }
    }
    if (!consistent) {
      out.excluded.push_back(h.id);
      continue;
    }

    const int base = rec.n();
    for (int p = 0; p < h.size(); ++p) {
      rec.persons.push_back(persons[p]);
      rec.infector.push_back(infector[p]);
      for (int q = 0; q < h.size(); ++q)
        if (q != p) edges.emplace_back(base + p, base + q);
    }
    ++out.households_used;
  }

  if (rec.persons.empty()) throw DataError("no usable households");
  rec.contacts = ContactStructure::network(rec.n(), edges);
  double t_end = 0.0;
  for (const auto& p : rec.persons)
    if (p.infected()) t_end = std::max(t_end, p.recovery());
  rec.T = t_end;  // follow-up covered every infectious period
  return out;
}

// --------------------------------------------------------------------------
// Synthetic household fixture generator (daily within-household chains).
// --------------------------------------------------------------------------

struct HouseholdGenConfig {
  int n_households = 58;
  int total_members = 299;
  int coprimary_households = 4;
  double contact_probability = 0.07;  // over the whole infectious period
  NaturalHistory nh;
  int max_size = 9;
};

/// Generates surveillance data by running a daily chain within each
/// household: every susceptible escapes each infectious member each day with
/// probability (1-p)^(1/D).
inline std::vector<Household> generate_households(const HouseholdGenConfig& cfg, Rng& rng) {
  cfg.nh.check();
  if (cfg.total_members < 2 * cfg.n_households)
    throw DataError("generate_households: too few members");
  const int D = cfg.nh.infectious;
  const double daily =
      -std::expm1(std::log1p(-cfg.contact_probability) / double(D));  // 1-(1-p)^(1/D)

  std::vector<int> sizes(std::size_t(cfg.n_households), 2);
  int remaining = cfg.total_members - 2 * cfg.n_households;
  while (remaining > 0) {
    const int h = int(rng.below(std::uint64_t(cfg.n_households)));
    if (sizes[std::size_t(h)] < cfg.max_size) {
      ++sizes[std::size_t(h)];
      --remaining;
    }
  }
  std::vector<char> coprimary(std::size_t(cfg.n_households), 0);
  for (int placed = 0; placed < cfg.coprimary_households;) {
    const int h = int(rng.below(std::uint64_t(cfg.n_households)));
    if (!coprimary[std::size_t(h)] && sizes[std::size_t(h)] >= 3) {
      coprimary[std::size_t(h)] = 1;
      ++placed;
    }
  }

  std::vector<Household> out;
  for (int h = 0; h < cfg.n_households; ++h) {
    Household hh;
    hh.id = h + 1;
    const int size = sizes[std::size_t(h)];
    std::vector<int> infection_day(std::size_t(size), kNoOnset);
    infection_day[0] = 0;
    if (coprimary[std::size_t(h)]) infection_day[1] = 0;

    // March forward one day at a time until no one can still transmit.
    for (int day = 1;; ++day) {
      bool any_infectious = false, any_future = false;
      for (int p = 0; p < size; ++p) {
        if (infection_day[std::size_t(p)] == kNoOnset) continue;
        const int first = infection_day[std::size_t(p)] + cfg.nh.latent + 1;
        const int last = infection_day[std::size_t(p)] + cfg.nh.latent + D;
        if (day >= first && day <= last) any_infectious = true;
        if (day < first) any_future = true;
      }
      if (!any_infectious) {
        if (!any_future) break;
        continue;
      }
      for (int p = 0; p < size; ++p) {
        if (infection_day[std::size_t(p)] != kNoOnset) continue;
        for (int q = 0; q < size; ++q) {
          if (q == p || infection_day[std::size_t(q)] == kNoOnset) continue;
          const int first = infection_day[std::size_t(q)] + cfg.nh.latent + 1;
          const int last = infection_day[std::size_t(q)] + cfg.nh.latent + D;
          if (day < first || day > last) continue;
          if (rng.uniform() < daily) {
            infection_day[std::size_t(p)] = day;
            break;
          }
        }
      }
    }
    hh.onset_day.assign(std::size_t(size), kNoOnset);
    for (int p = 0; p < size; ++p)
      if (infection_day[std::size_t(p)] != kNoOnset)
        hh.onset_day[std::size_t(p)] = infection_day[std::size_t(p)] + cfg.nh.incubation;
    out.push_back(std::move(hh));
  }
  return out;
}

}  // namespace epihaz
