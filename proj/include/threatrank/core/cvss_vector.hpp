#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace threatrank {

enum class AttackVector { network, adjacent, local, physical };
enum class AttackComplexity { low, high };
enum class PrivilegesRequired { none, low, high };
enum class UserInteraction { none, required };
enum class Scope { unchanged, changed };
enum class ImpactLevel { none, low, high };

struct CvssVectorError : std::runtime_error {
  explicit CvssVectorError(const std::string& what) : std::runtime_error(what) {}
};
struct MalformedVector : CvssVectorError {
  explicit MalformedVector(const std::string& what) : CvssVectorError(what) {}
};
struct MissingMetric : CvssVectorError {
  explicit MissingMetric(const std::string& what) : CvssVectorError(what) {}
};
struct DuplicateMetric : CvssVectorError {
  explicit DuplicateMetric(const std::string& what) : CvssVectorError(what) {}
};

// The eight CVSS v3.1 base metrics. Serialization is bit-exact and canonical:
// AV/AC/PR/UI/S/C/I/A.
struct CvssVector {
  AttackVector av = AttackVector::network;
  AttackComplexity ac = AttackComplexity::low;
  PrivilegesRequired pr = PrivilegesRequired::none;
  UserInteraction ui = UserInteraction::none;
  Scope scope = Scope::unchanged;
  ImpactLevel c = ImpactLevel::none;
  ImpactLevel i = ImpactLevel::none;
  ImpactLevel a = ImpactLevel::none;

  bool operator==(const CvssVector&) const = default;
};

namespace cvss_abbrev {

inline char av(AttackVector v) {
  switch (v) {
    case AttackVector::network: return 'N';
    case AttackVector::adjacent: return 'A';
    case AttackVector::local: return 'L';
    case AttackVector::physical: return 'P';
  }
  return '?';
}
inline char ac(AttackComplexity v) { return v == AttackComplexity::low ? 'L' : 'H'; }
inline char pr(PrivilegesRequired v) {
  switch (v) {
    case PrivilegesRequired::none: return 'N';
    case PrivilegesRequired::low: return 'L';
    case PrivilegesRequired::high: return 'H';
  }
  return '?';
}
inline char ui(UserInteraction v) { return v == UserInteraction::none ? 'N' : 'R'; }
inline char scope(Scope v) { return v == Scope::unchanged ? 'U' : 'C'; }
inline char impact(ImpactLevel v) {
  switch (v) {
    case ImpactLevel::none: return 'N';
    case ImpactLevel::low: return 'L';
    case ImpactLevel::high: return 'H';
  }
  return '?';
}

inline std::optional<AttackVector> parse_av(std::string_view v) {
  if (v == "N") return AttackVector::network;
  if (v == "A") return AttackVector::adjacent;
  if (v == "L") return AttackVector::local;
  if (v == "P") return AttackVector::physical;
  return std::nullopt;
}
inline std::optional<AttackComplexity> parse_ac(std::string_view v) {
  if (v == "L") return AttackComplexity::low;
  if (v == "H") return AttackComplexity::high;
  return std::nullopt;
}
inline std::optional<PrivilegesRequired> parse_pr(std::string_view v) {
  if (v == "N") return PrivilegesRequired::none;
  if (v == "L") return PrivilegesRequired::low;
  if (v == "H") return PrivilegesRequired::high;
  return std::nullopt;
}
inline std::optional<UserInteraction> parse_ui(std::string_view v) {
  if (v == "N") return UserInteraction::none;
  if (v == "R") return UserInteraction::required;
  return std::nullopt;
}
inline std::optional<Scope> parse_scope(std::string_view v) {
  if (v == "U") return Scope::unchanged;
  if (v == "C") return Scope::changed;
  return std::nullopt;
}
inline std::optional<ImpactLevel> parse_impact(std::string_view v) {
  if (v == "N") return ImpactLevel::none;
  if (v == "L") return ImpactLevel::low;
  if (v == "H") return ImpactLevel::high;
  return std::nullopt;
}

}  // namespace cvss_abbrev

inline std::string serialize_cvss_vector(const CvssVector& v) {
  std::string out;
  out.reserve(32);
  using namespace cvss_abbrev;
  out += "AV:";
  out += av(v.av);
  out += "/AC:";
  out += ac(v.ac);
  out += "/PR:";
  out += pr(v.pr);
  out += "/UI:";
  out += ui(v.ui);
  out += "/S:";
  out += scope(v.scope);
  out += "/C:";
  out += impact(v.c);
  out += "/I:";
  out += impact(v.i);
  out += "/A:";
  out += impact(v.a);
  return out;
}

// Accepts slash-delimited KEY:VALUE tokens in any order; the optional
// "CVSS:3.1/" prefix is tolerated. Rejects unknown keys, bad values,
// duplicates and missing metrics.
inline CvssVector parse_cvss_vector(std::string_view text) {
  std::array<bool, 8> seen{};
  CvssVector v;

  std::string_view rest = text;
  if (rest.rfind("CVSS:3.1/", 0) == 0) rest.remove_prefix(9);
  if (rest.empty()) throw MalformedVector("empty vector string");

  while (!rest.empty()) {
    auto slash = rest.find('/');
    std::string_view token = rest.substr(0, slash);
    rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash + 1);

    auto colon = token.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 >= token.size())
      throw MalformedVector("bad token '" + std::string(token) + "'");
    std::string_view key = token.substr(0, colon);
    std::string_view val = token.substr(colon + 1);

    auto assign = [&](int idx, auto parsed, auto member) {
      if (!parsed) throw MalformedVector("value '" + std::string(val) + "' not in domain of " + std::string(key));
      if (seen[idx]) throw DuplicateMetric("duplicate metric " + std::string(key));
      seen[idx] = true;
      v.*member = *parsed;
    };
    using namespace cvss_abbrev;
    if (key == "AV") assign(0, parse_av(val), &CvssVector::av);
    else if (key == "AC") assign(1, parse_ac(val), &CvssVector::ac);
    else if (key == "PR") assign(2, parse_pr(val), &CvssVector::pr);
    else if (key == "UI") assign(3, parse_ui(val), &CvssVector::ui);
    else if (key == "S") assign(4, parse_scope(val), &CvssVector::scope);
    else if (key == "C") assign(5, parse_impact(val), &CvssVector::c);
    else if (key == "I") assign(6, parse_impact(val), &CvssVector::i);
    else if (key == "A") assign(7, parse_impact(val), &CvssVector::a);
    else throw MalformedVector("unknown key '" + std::string(key) + "'");
  }

  static constexpr const char* names[8] = {"AV", "AC", "PR", "UI", "S", "C", "I", "A"};
  for (int idx = 0; idx < 8; ++idx) {
    if (!seen[idx]) throw MissingMetric(std::string("missing metric ") + names[idx]);
  }
  return v;
}

}  // namespace threatrank
