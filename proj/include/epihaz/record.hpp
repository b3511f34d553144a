#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "epihaz/csv.hpp"
#include "epihaz/math.hpp"

namespace epihaz {

// Infector sentinels (internal person ids are 0-based).
inline constexpr int kInfectorUnknown = -2;
inline constexpr int kInfectorImported = -1;

/// One person's event history. Times are in abstract units; +inf means the
/// transition never happened.
struct PersonHistory {
  double t_infection = kInf;       // S -> E
  double latent = 0.0;             // E -> I delay
  double infectious_duration = 0;  // I -> R duration

  bool infected() const { return std::isfinite(t_infection); }
  double onset() const { return t_infection + latent; }          // E -> I time
  double recovery() const { return onset() + infectious_duration; }  // I -> R time
};

enum class ContactMode { Network, MassAction };

/// Who can infect whom: an explicit directed edge set, or mass action where
/// every ordered pair is implicitly present.
struct ContactStructure {
  ContactMode mode = ContactMode::MassAction;
  int n = 0;
  std::vector<std::vector<int>> out;  // network mode: j with C_ij = 1
  std::vector<std::vector<int>> in;   // network mode: i with C_ij = 1

  static ContactStructure mass_action(int n) {
    ContactStructure c;
    c.mode = ContactMode::MassAction;
    c.n = n;
    return c;
  }

  static ContactStructure network(int n, const std::vector<std::pair<int, int>>& directed_edges) {
    ContactStructure c;
    c.mode = ContactMode::Network;
    c.n = n;
    c.out.resize(n);
    c.in.resize(n);
    for (auto [i, j] : directed_edges) {
      if (i < 0 || j < 0 || i >= n || j >= n) throw DataError("edge endpoint out of range");
      if (i == j) throw DataError("self-edge in contact structure");
      c.out[i].push_back(j);
      c.in[j].push_back(i);
    }
    for (auto& v : c.out) std::sort(v.begin(), v.end());
    for (auto& v : c.in) std::sort(v.begin(), v.end());
    return c;
  }

  std::size_t directed_edge_count() const {
    std::size_t e = 0;
    for (const auto& v : out) e += v.size();
    return e;
  }
};

/// The observed data: per-person histories, contact structure, observation end
/// T, and the (possibly partial) transmission vector.
struct EpidemicRecord {
  std::vector<PersonHistory> persons;
  ContactStructure contacts;
  double T = 0.0;
  // Per person: kInfectorUnknown, kInfectorImported, or the infector's index.
  std::vector<int> infector;
  bool extinct = false;  // simulator stopped before reaching its target size

  int n() const { return int(persons.size()); }

  int num_infected() const {
    int m = 0;
    for (const auto& p : persons) m += p.infected();
    return m;
  }

  bool imported(int j) const { return infector[j] == kInfectorImported; }
  bool mass_action() const { return contacts.mode == ContactMode::MassAction; }
};

/// The infectious set V_j: persons i with C_ij = 1 that were infectious at
/// t_j. Windows are half-open on the left, so i with onset exactly t_j is out.
inline std::vector<int> infectious_set(const EpidemicRecord& rec, int j) {
  if (j < 0 || j >= rec.n()) throw DataError("infectious_set: person id out of range");
  const auto& pj = rec.persons[j];
  if (!pj.infected()) throw DataError("infectious_set: person never infected");
  if (rec.imported(j)) throw DataError("infectious_set: imported infection has no infectious set");
  const double tj = pj.t_infection;
  std::vector<int> out;
  auto check = [&](int i) {
    const auto& pi = rec.persons[i];
    if (!pi.infected()) return;
    if (pi.onset() < tj && tj <= pi.recovery()) out.push_back(i);
  };
  if (rec.contacts.mode == ContactMode::Network) {
    for (int i : rec.contacts.in[j]) check(i);
  } else {
    for (int i = 0; i < rec.n(); ++i)
      if (i != j) check(i);
  }
  if (out.empty())
    throw DataError("infectious_set: no possible infector for person " + std::to_string(j + 1) +
                    " (inconsistent record)");
  return out;
}

/// Copy with all non-imported infectors hidden.
inline EpidemicRecord mask_transmission(const EpidemicRecord& rec) {
  EpidemicRecord out = rec;
  for (int j = 0; j < out.n(); ++j)
    if (out.infector[j] >= 0) out.infector[j] = kInfectorUnknown;
  return out;
}

/// Consistency checks; returns human-readable problems, empty if clean.
inline std::vector<std::string> validate(const EpidemicRecord& rec) {
  std::vector<std::string> issues;
  const int n = rec.n();
  if (rec.contacts.n != n) issues.push_back("contact structure size != person count");
  if (int(rec.infector.size()) != n) issues.push_back("infector vector size != person count");
  if (!(rec.T >= 0.0) || !std::isfinite(rec.T)) issues.push_back("T must be finite and >= 0");
  for (int j = 0; j < n && int(rec.infector.size()) == n; ++j) {
    const auto& p = rec.persons[j];
    if (p.infected()) {
      if (p.t_infection > rec.T)
        issues.push_back("person " + std::to_string(j + 1) + ": infection time beyond T");
      if (p.latent < 0.0) issues.push_back("person " + std::to_string(j + 1) + ": negative latent");
      if (!(p.infectious_duration > 0.0))
        issues.push_back("person " + std::to_string(j + 1) + ": infectious duration not positive");
      if (rec.imported(j) && p.t_infection != 0.0)
        issues.push_back("person " + std::to_string(j + 1) + ": imported but t != 0");
      if (rec.infector[j] >= 0) {
        const int i = rec.infector[j];
        if (i >= n || i == j) {
          issues.push_back("person " + std::to_string(j + 1) + ": bad infector id");
        } else {
          const auto& pi = rec.persons[i];
          const bool window_ok =
              pi.infected() && pi.onset() < p.t_infection && p.t_infection <= pi.recovery();
          bool edge_ok = true;
          if (rec.contacts.mode == ContactMode::Network) {
            const auto& nb = rec.contacts.in[j];
            edge_ok = std::binary_search(nb.begin(), nb.end(), i);
          }
          if (!window_ok || !edge_ok)
            issues.push_back("person " + std::to_string(j + 1) +
                             ": recorded infector not in infectious set");
        }
      }
    } else {
      if (rec.infector[j] != kInfectorUnknown)
        issues.push_back("person " + std::to_string(j + 1) + ": uninfected but has infector");
    }
  }
  return issues;
}

// ---------------------------------------------------------------------------
// CSV serialization.
//
// Person file: `#mode=network|massaction,n=<int>,T=<float>` then a column
// header, then one row `id,t_infection,latent,infectious_duration,infector`
// per person. Empty fields mean +inf / unknown; infector 0 means imported.
// Network mode has a companion directed edge list `i,j`.
// ---------------------------------------------------------------------------

inline std::string record_to_csv(const EpidemicRecord& rec) {
  std::string s = "#mode=";
  s += rec.mass_action() ? "massaction" : "network";
  s += ",n=" + std::to_string(rec.n()) + ",T=" + fmt_double(rec.T) + "\n";
  s += "id,t_infection,latent,infectious_duration,infector\n";
  for (int j = 0; j < rec.n(); ++j) {
    const auto& p = rec.persons[j];
    s += std::to_string(j + 1);
    s += ',';
    if (p.infected()) {
      s += fmt_double(p.t_infection);
      s += ',';
      s += fmt_double(p.latent);
      s += ',';
      s += fmt_double(p.infectious_duration);
      s += ',';
      if (rec.infector[j] >= 0)
        s += std::to_string(rec.infector[j] + 1);
      else if (rec.infector[j] == kInfectorImported)
        s += '0';
    } else {
      s += ",,,";
    }
    s += '\n';
  }
  return s;
}

inline std::string edges_to_csv(const ContactStructure& c) {
  if (c.mode != ContactMode::Network) throw DataError("edges_to_csv: not a network record");
  std::string s = "i,j\n";
  for (int i = 0; i < c.n; ++i)
    for (int j : c.out[i]) s += std::to_string(i + 1) + "," + std::to_string(j + 1) + "\n";
  return s;
}

inline EpidemicRecord record_from_csv(const std::vector<std::string>& person_lines,
                                      const std::vector<std::string>* edge_lines = nullptr) {
  if (person_lines.size() < 2) throw DataError("record csv: too few lines");
  EpidemicRecord rec;
  int n = -1;
  std::string mode;
  for (auto& [k, v] : parse_header_line(person_lines[0])) {
    if (k == "mode")
      mode = v;
    else if (k == "n")
      n = int(parse_long(v));
    else if (k == "T")
      rec.T = parse_double(v);
  }
  if (n <= 0) throw DataError("record csv: bad n");
  if (mode != "network" && mode != "massaction") throw DataError("record csv: bad mode");
  rec.persons.resize(n);
  rec.infector.assign(n, kInfectorUnknown);
  for (std::size_t li = 2; li < person_lines.size(); ++li) {
    const auto line = trim(person_lines[li]);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw DataError("record csv: expected 5 fields per row");
    const int id = int(parse_long(trim(f[0]))) - 1;
    if (id < 0 || id >= n) throw DataError("record csv: id out of range");
    auto& p = rec.persons[id];
    if (!trim(f[1]).empty()) {
      p.t_infection = parse_double(trim(f[1]));
      p.latent = parse_double(trim(f[2]));
      p.infectious_duration = parse_double(trim(f[3]));
      const auto inf = trim(f[4]);
      if (inf.empty())
        rec.infector[id] = kInfectorUnknown;
      else {
        const long v = parse_long(inf);
        rec.infector[id] = (v == 0) ? kInfectorImported : int(v - 1);
      }
    }
  }
  if (mode == "massaction") {
    rec.contacts = ContactStructure::mass_action(n);
  } else {
    if (!edge_lines) throw DataError("record csv: network mode needs an edge list");
    std::vector<std::pair<int, int>> edges;
    for (std::size_t li = 1; li < edge_lines->size(); ++li) {
      const auto line = trim((*edge_lines)[li]);
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != 2) throw DataError("edge csv: expected 2 fields per row");
      edges.emplace_back(int(parse_long(trim(f[0]))) - 1, int(parse_long(trim(f[1]))) - 1);
    }
    rec.contacts = ContactStructure::network(n, edges);
  }
  return rec;
}

inline void write_record_files(const EpidemicRecord& rec, const std::filesystem::path& person_path,
                               const std::filesystem::path& edge_path = {}) {
  write_file_atomic(person_path, record_to_csv(rec));
  if (!rec.mass_action()) {
    if (edge_path.empty()) throw DataError("network record needs an edge path");
    write_file_atomic(edge_path, edges_to_csv(rec.contacts));
  }
}

inline EpidemicRecord read_record_files(const std::filesystem::path& person_path,
                                        const std::filesystem::path& edge_path = {}) {
  const auto person_lines = read_lines(person_path);
  if (edge_path.empty()) return record_from_csv(person_lines);
  const auto edge_lines = read_lines(edge_path);
  return record_from_csv(person_lines, &edge_lines);
}

}  // namespace epihaz
