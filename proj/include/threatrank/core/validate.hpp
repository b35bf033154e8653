#pragma once

#include <set>
#include <string>
#include <vector>

#include "threatrank/core/types.hpp"

namespace threatrank {

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Reports every violated invariant; never throws. An empty report means all
// type invariants hold. known_incidents, when provided, lets the parent
// reference be checked.
inline ValidationReport validate(const EnrichedThreatInstance& e,
                                 const std::set<std::string>* known_incidents = nullptr) {
  ValidationReport r;
  auto add = [&](std::string field, std::string msg) {
    r.violations.push_back({std::move(field), std::move(msg)});
  };

  const auto& t = e.instance;
  if (t.id.empty()) add("instance.id", "empty id");
  if (t.parent_incident.empty()) {
    add("instance.parent_incident", "empty parent incident id");
  } else if (known_incidents && !known_incidents->count(t.parent_incident)) {
    add("instance.parent_incident", "parent incident '" + t.parent_incident + "' does not resolve");
  }

  int cve_count = 0;
  for (const auto& ind : t.indicators)
    if (is_cve_id(ind)) ++cve_count;
  if (cve_count > 1)
    add("instance.indicators", "more than one primary vulnerability identifier (" +
                                   std::to_string(cve_count) + " CVE ids)");

  const auto& m = e.metadata;
  if (m.cve_id && !is_cve_id(*m.cve_id))
    add("metadata.cve_id", "'" + *m.cve_id + "' does not match CVE-\\d{4}-\\d{4,}");
  if (m.epss) {
    if (m.epss->probability < 0.0 || m.epss->probability > 1.0)
      add("metadata.epss.probability", "outside [0,1]");
    if (m.epss->percentile < 0.0 || m.epss->percentile > 1.0)
      add("metadata.epss.percentile", "outside [0,1]");
  }
  if (m.kev_listed && !m.kev_date_added)
    add("metadata.kev_date_added", "kev_listed set without a date-added");
  if (m.kev_listed && m.exploitation_status != ExploitationStatus::confirmed_in_wild)
    add("metadata.exploitation_status", "kev_listed implies confirmed-in-wild");

  return r;
}

inline ValidationReport validate(const TemporalNarrative& n) {
  ValidationReport r;
  auto add = [&](std::string field, std::string msg) {
    r.violations.push_back({std::move(field), std::move(msg)});
  };
  for (std::size_t i = 1; i < n.events.size(); ++i)
    if (n.events[i].at < n.events[i - 1].at) {
      add("events", "not sorted ascending by time");
      break;
    }
  std::size_t expected = n.events.empty() ? 0 : n.events.size() - 1;
  if (n.gaps_seconds.size() != expected)
    add("gaps_seconds", "expected " + std::to_string(expected) + " gaps, have " +
                            std::to_string(n.gaps_seconds.size()));
  for (const auto& e : n.events)
    if (e.at < n.window.first || n.window.second < e.at) {
      add("window", "event outside window");
      break;
    }
  return r;
}

}  // namespace threatrank
