#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "threatrank/core/cvss_vector.hpp"

namespace threatrank::cvss {

struct OutOfRange : std::runtime_error {
  explicit OutOfRange(const std::string& what) : std::runtime_error(what) {}
};

enum class Rating { none, low, medium, high, critical };

inline std::string to_string(Rating r) {
  switch (r) {
    case Rating::none: return "None";
    case Rating::low: return "Low";
    case Rating::medium: return "Medium";
    case Rating::high: return "High";
    case Rating::critical: return "Critical";
  }
  return "None";
}

struct ScoreBreakdown {
  double iss = 0.0;
  double impact = 0.0;
  double exploitability = 0.0;
  double base = 0.0;  // [0,10], one decimal place
};

namespace weights {

inline double av(AttackVector v) {
  switch (v) {
    case AttackVector::network: return 0.85;
    case AttackVector::adjacent: return 0.62;
    case AttackVector::local: return 0.55;
    case AttackVector::physical: return 0.20;
  }
  return 0.0;
}
inline double ac(AttackComplexity v) { return v == AttackComplexity::low ? 0.77 : 0.44; }
inline double pr(PrivilegesRequired v, Scope s) {
  switch (v) {
    case PrivilegesRequired::none: return 0.85;
    case PrivilegesRequired::low: return s == Scope::changed ? 0.68 : 0.62;
    case PrivilegesRequired::high: return s == Scope::changed ? 0.50 : 0.27;
  }
  return 0.0;
}
inline double ui(UserInteraction v) { return v == UserInteraction::none ? 0.85 : 0.62; }
inline double cia(ImpactLevel v) {
  switch (v) {
    case ImpactLevel::none: return 0.0;
    case ImpactLevel::low: return 0.22;
    case ImpactLevel::high: return 0.56;
  }
  return 0.0;
}

}  // namespace weights

// RoundUp to one decimal via integer arithmetic so results are bit-identical
// across platforms: scale by 1e5, then bump to the next tenth unless the
// remainder is exactly zero.
inline double round_up1(double value) {
  std::int64_t scaled = std::llround(value * 100000.0);
  if (scaled % 10000 == 0) return static_cast<double>(scaled) / 100000.0;
  return static_cast<double>(scaled / 10000 + 1) / 10.0;
}

inline ScoreBreakdown base_score(const CvssVector& v) {
  ScoreBreakdown out;
  const double c = weights::cia(v.c);
  const double i = weights::cia(v.i);
  const double a = weights::cia(v.a);
  out.iss = 1.0 - (1.0 - c) * (1.0 - i) * (1.0 - a);

  if (v.scope == Scope::unchanged) {
    out.impact = 6.42 * out.iss;
  } else {
    out.impact = 7.52 * (out.iss - 0.029) - 3.25 * std::pow(out.iss - 0.02, 15.0);
  }

  out.exploitability = 8.22 * weights::av(v.av) * weights::ac(v.ac) *
                       weights::pr(v.pr, v.scope) * weights::ui(v.ui);

  if (out.impact <= 0.0) {
    out.base = 0.0;
  } else if (v.scope == Scope::unchanged) {
    out.base = round_up1(std::min(out.impact + out.exploitability, 10.0));
  } else {
    out.base = round_up1(std::min(1.08 * (out.impact + out.exploitability), 10.0));
  }
  return out;
}

// v3.1 qualitative bands: None 0.0, Low 0.1-3.9, Medium 4.0-6.9,
// High 7.0-8.9, Critical 9.0-10.0.
inline Rating severity_rating(double score) {
  if (score < 0.0 || score > 10.0) throw OutOfRange("score outside [0,10]");
  if (score < 0.1) return Rating::none;
  if (score < 4.0) return Rating::low;
  if (score < 7.0) return Rating::medium;
  if (score < 9.0) return Rating::high;
  return Rating::critical;
}

}  // namespace threatrank::cvss
