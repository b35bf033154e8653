#pragma once

#include <string>

#include "threatrank/core/types.hpp"

namespace threatrank {

// Compact single-line rendering of an instance for prompt bindings and logs.
inline std::string instance_summary(const ThreatInstance& t) {
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += v[i];
    }
    return out.empty() ? "-" : out;
  };
  std::string s = t.id + " | vendor: " + (t.vendor.empty() ? "-" : t.vendor) +
                  " | components: " + join(t.affected_components) +
                  " | impact: " + (t.impact.empty() ? "-" : t.impact) +
                  " | patterns: " + join(t.attack_patterns) +
                  " | indicators: " + join(t.indicators);
  if (t.campaign) s += " | campaign: " + *t.campaign;
  return s;
}

inline std::string instance_summary(const EnrichedThreatInstance& e) {
  std::string s = instance_summary(e.instance);
  s += " | exploitation: " + to_string(e.metadata.exploitation_status);
  if (e.metadata.kev_listed) s += " (KEV-listed)";
  return s;
}

}  // namespace threatrank
