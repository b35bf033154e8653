#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "threatrank/common/digest.hpp"
#include "threatrank/common/time.hpp"

namespace threatrank {

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Incidents and threat instances
// ---------------------------------------------------------------------------

struct RawIncident {
  std::string id;
  std::string text;        // free-form incident body, non-empty
  std::string source;      // provenance: vendor advisory / blog / aggregator / exploit repo
  UtcTime observed_at{};
};

struct ThreatInstance {
  std::string id;
  std::string parent_incident;
  std::string vendor;
  std::vector<std::string> affected_components;
  std::optional<std::string> campaign;
  std::string impact;
  std::vector<std::string> attack_patterns;
  std::vector<std::string> indicators;  // CVE ids, IPs, domains, signatures

  // The single primary vulnerability identifier, if any (disentanglement
  // contract: at most one per instance).
  std::optional<std::string> primary_cve() const;
};

// Matches CVE-\d{4}-\d{4,}.
inline bool is_cve_id(std::string_view s) {
  if (s.size() < 13 || s.rfind("CVE-", 0) != 0) return false;
  for (int i = 4; i < 8; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  if (s[8] != '-') return false;
  for (std::size_t i = 9; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

inline std::optional<std::string> ThreatInstance::primary_cve() const {
  for (const auto& ind : indicators) {
    if (is_cve_id(ind)) return ind;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Enrichment metadata
// ---------------------------------------------------------------------------

enum class ExploitationStatus { confirmed_in_wild, poc_public, no_evidence, unknown };

inline std::string to_string(ExploitationStatus s) {
  switch (s) {
    case ExploitationStatus::confirmed_in_wild: return "confirmed-in-wild";
    case ExploitationStatus::poc_public: return "poc-public";
    case ExploitationStatus::no_evidence: return "no-evidence";
    case ExploitationStatus::unknown: return "unknown";
  }
  return "unknown";
}

inline ExploitationStatus exploitation_status_from_string(const std::string& s) {
  if (s == "confirmed-in-wild") return ExploitationStatus::confirmed_in_wild;
  if (s == "poc-public") return ExploitationStatus::poc_public;
  if (s == "no-evidence") return ExploitationStatus::no_evidence;
  if (s == "unknown") return ExploitationStatus::unknown;
  throw DomainError("unknown exploitation status: " + s);
}

struct AffectedSystem {
  std::string vendor;
  std::string product;
  std::string version_range;
};

struct ChronologyEntry {
  std::string label;  // e.g. "cve-published", "patch-released"
  UtcTime at{};
};

struct DisclosureRecord {
  std::string channel;  // vendor advisory / government alert / researcher blog
  std::string type;     // coordinated / limited / uncoordinated
  std::vector<ChronologyEntry> chronology;
  bool patch_available = false;
};

struct EpssValue {
  double probability = 0.0;  // [0,1]
  double percentile = 0.0;   // [0,1]
  UtcTime snapshot_date{};
};

struct Metadata {
  std::optional<std::string> cve_id;
  std::vector<std::string> attack_techniques;  // ATT&CK technique ids
  ExploitationStatus exploitation_status = ExploitationStatus::unknown;
  std::vector<AffectedSystem> affected_systems;
  DisclosureRecord disclosure;
  std::optional<EpssValue> epss;
  bool kev_listed = false;
  std::optional<UtcTime> kev_date_added;
};

struct EnrichedThreatInstance {
  ThreatInstance instance;
  Metadata metadata;
};

// ---------------------------------------------------------------------------
// Evidence and metric decisions
// ---------------------------------------------------------------------------

struct EvidenceSpan {
  std::string span;     // verbatim excerpt, non-empty
  std::string source;   // provenance label
  std::optional<std::string> locator;
};

enum class CvssMetric { av, ac, pr, ui, s, c, i, a };

inline constexpr CvssMetric kAllMetrics[] = {
    CvssMetric::av, CvssMetric::ac, CvssMetric::pr, CvssMetric::ui,
    CvssMetric::s,  CvssMetric::c,  CvssMetric::i,  CvssMetric::a};

inline std::string to_string(CvssMetric m) {
  switch (m) {
    case CvssMetric::av: return "AV";
    case CvssMetric::ac: return "AC";
    case CvssMetric::pr: return "PR";
    case CvssMetric::ui: return "UI";
    case CvssMetric::s: return "S";
    case CvssMetric::c: return "C";
    case CvssMetric::i: return "I";
    case CvssMetric::a: return "A";
  }
  return "?";
}

struct MetricDecision {
  CvssMetric metric = CvssMetric::av;
  std::string value;  // abbreviation within the metric's domain, e.g. "N"
  std::vector<EvidenceSpan> evidence;
  std::string rationale;
  double confidence = 0.0;  // self-reported likelihood in [0,1]
  bool defaulted = false;   // assigned by the declared default rule
  // Signals carried from classification for conflict resolution.
  std::optional<bool> necessary;
  std::optional<bool> confirmed;
};

// ---------------------------------------------------------------------------
// Temporal evidence
// ---------------------------------------------------------------------------

enum class EventKind {
  cve_published,
  poc_released,
  kev_listed,
  in_wild_observed,
  advisory_updated,
  malware_seen
};

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::cve_published: return "cve-published";
    case EventKind::poc_released: return "poc-released";
    case EventKind::kev_listed: return "kev-listed";
    case EventKind::in_wild_observed: return "in-wild-observed";
    case EventKind::advisory_updated: return "advisory-updated";
    case EventKind::malware_seen: return "malware-seen";
  }
  return "advisory-updated";
}

inline std::optional<EventKind> event_kind_from_string(const std::string& s) {
  if (s == "cve-published") return EventKind::cve_published;
  if (s == "poc-released") return EventKind::poc_released;
  if (s == "kev-listed") return EventKind::kev_listed;
  if (s == "in-wild-observed") return EventKind::in_wild_observed;
  if (s == "advisory-updated") return EventKind::advisory_updated;
  if (s == "malware-seen") return EventKind::malware_seen;
  return std::nullopt;
}

struct TemporalEvent {
  UtcTime at{};
  EventKind kind = EventKind::advisory_updated;
  std::string detail;
  std::string source;
};

struct TemporalNarrative {
  std::vector<TemporalEvent> events;       // ascending by time
  std::vector<std::int64_t> gaps_seconds;  // |events| - 1 entries (0 when empty)
  std::pair<UtcTime, UtcTime> window{};

  // Sorts, recomputes gaps and enforces the window invariant.
  static TemporalNarrative build(std::vector<TemporalEvent> evs,
                                 std::pair<UtcTime, UtcTime> window) {
    if (window.second < window.first) throw DomainError("narrative window end precedes start");
    for (const auto& e : evs) {
      if (e.at < window.first || window.second < e.at)
        throw DomainError("event outside narrative window: " + format_iso8601(e.at));
    }
    std::stable_sort(evs.begin(), evs.end(),
                     [](const TemporalEvent& a, const TemporalEvent& b) { return a.at < b.at; });
    TemporalNarrative n;
    n.window = window;
    n.events = std::move(evs);
    for (std::size_t i = 1; i < n.events.size(); ++i)
      n.gaps_seconds.push_back(n.events[i].at.secs - n.events[i - 1].at.secs);
    return n;
  }
};

// ---------------------------------------------------------------------------
// Forecast
// ---------------------------------------------------------------------------

struct ExploitForecast {
  double probability = 0.0;  // [0,1]
  int horizon_days = 30;     // {30, 90} in the shipped configuration
  std::string rationale;
  std::string inputs_digest;  // fingerprint over (instance+metadata, vector, events)
  bool fallback_used = false;
};

// ---------------------------------------------------------------------------
// Mitigation
// ---------------------------------------------------------------------------

enum class ActionKind { patch, workaround, mitigation_note, vendor_advisory, detection };

inline std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::patch: return "patch";
    case ActionKind::workaround: return "workaround";
    case ActionKind::mitigation_note: return "mitigation-note";
    case ActionKind::vendor_advisory: return "vendor-advisory";
    case ActionKind::detection: return "detection";
  }
  return "workaround";
}

inline ActionKind action_kind_from_string(const std::string& s) {
  if (s == "patch") return ActionKind::patch;
  if (s == "workaround") return ActionKind::workaround;
  if (s == "mitigation-note") return ActionKind::mitigation_note;
  if (s == "vendor-advisory") return ActionKind::vendor_advisory;
  if (s == "detection") return ActionKind::detection;
  throw DomainError("unknown action kind: " + s);
}

// Authority order for conflicting mitigation sources; lower ranks first.
enum class SourceAuthority { vendor = 0, kev = 1, nvd = 2, maintainer = 3, cert_blog = 4, proposed = 5 };

inline std::string to_string(SourceAuthority a) {
  switch (a) {
    case SourceAuthority::vendor: return "vendor";
    case SourceAuthority::kev: return "kev";
    case SourceAuthority::nvd: return "nvd";
    case SourceAuthority::maintainer: return "maintainer";
    case SourceAuthority::cert_blog: return "cert-blog";
    case SourceAuthority::proposed: return "proposed";
  }
  return "proposed";
}

inline SourceAuthority source_authority_from_string(const std::string& s) {
  if (s == "vendor") return SourceAuthority::vendor;
  if (s == "kev") return SourceAuthority::kev;
  if (s == "nvd") return SourceAuthority::nvd;
  if (s == "maintainer") return SourceAuthority::maintainer;
  if (s == "cert-blog") return SourceAuthority::cert_blog;
  if (s == "proposed") return SourceAuthority::proposed;
  throw DomainError("unknown source authority: " + s);
}

enum class PatchMaturity { ga = 0, hotfix = 1, beta = 2, unknown = 3 };

inline std::string to_string(PatchMaturity m) {
  switch (m) {
    case PatchMaturity::ga: return "ga";
    case PatchMaturity::hotfix: return "hotfix";
    case PatchMaturity::beta: return "beta";
    case PatchMaturity::unknown: return "unknown";
  }
  return "unknown";
}

inline PatchMaturity patch_maturity_from_string(const std::string& s) {
  if (s == "ga") return PatchMaturity::ga;
  if (s == "hotfix") return PatchMaturity::hotfix;
  if (s == "beta") return PatchMaturity::beta;
  if (s == "unknown") return PatchMaturity::unknown;
  throw DomainError("unknown patch maturity: " + s);
}

enum class Complexity { simple = 0, moderate = 1, complex_ = 2 };

inline std::string to_string(Complexity c) {
  switch (c) {
    case Complexity::simple: return "simple";
    case Complexity::moderate: return "moderate";
    case Complexity::complex_: return "complex";
  }
  return "moderate";
}

inline Complexity complexity_from_string(const std::string& s) {
  if (s == "simple") return Complexity::simple;
  if (s == "moderate") return Complexity::moderate;
  if (s == "complex") return Complexity::complex_;
  throw DomainError("unknown complexity: " + s);
}

struct MitigationAction {
  ActionKind kind = ActionKind::workaround;
  std::string title;
  std::string vendor;
  std::string version_scope;
  std::optional<UtcTime> released;
  std::optional<std::string> supersedes;  // canonical key of the superseded action
  std::string side_effects;
  std::string source;  // provenance label
  SourceAuthority authority = SourceAuthority::proposed;
  PatchMaturity maturity = PatchMaturity::unknown;
  Complexity complexity = Complexity::moderate;
  std::optional<std::string> superseded_by;  // annotated during dedup
};

namespace detail {
inline std::string lc_trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace detail

// Pure function of (title, vendor, version); 128-bit digest over the
// lowercase-trimmed fields joined with an unambiguous separator.
inline std::string canonical_key(std::string_view title, std::string_view vendor,
                                 std::string_view version) {
  std::string joined = detail::lc_trim(title);
  joined.push_back('\x1f');
  joined += detail::lc_trim(vendor);
  joined.push_back('\x1f');
  joined += detail::lc_trim(version);
  return digest128_hex(joined);
}

inline std::string canonical_key(const MitigationAction& a) {
  return canonical_key(a.title, a.vendor, a.version_scope);
}

// ---------------------------------------------------------------------------
// Risk and the prioritized plan
// ---------------------------------------------------------------------------

struct RiskInputs {
  double severity = 0.0;            // s_k in [0,10]
  double exploit_prob = 0.0;        // p_k in [0,1]
  double exposure_factor = 1.0;     // alpha, (0,10]
  double criticality_factor = 1.0;  // beta, (0,10]

  void validate() const {
    if (severity < 0.0 || severity > 10.0) throw DomainError("severity outside [0,10]");
    if (exploit_prob < 0.0 || exploit_prob > 1.0) throw DomainError("exploit_prob outside [0,1]");
    if (!(exposure_factor > 0.0) || exposure_factor > 10.0)
      throw DomainError("exposure_factor outside (0,10]");
    if (!(criticality_factor > 0.0) || criticality_factor > 10.0)
      throw DomainError("criticality_factor outside (0,10]");
  }
};

struct PlanEntry {
  std::string threat_id;
  double risk = 0.0;
  std::vector<MitigationAction> actions;  // deduped, best-first
  int phase = 0;
  std::vector<std::string> dependencies;  // threat ids this entry waits on
  std::string justification;
  std::string decisive_tiebreaker;  // "risk" or the tie-break level that decided
};

struct UnpatchableFlag {
  std::string threat_id;
  std::string note;
  std::string recommendation;
};

struct PrioritizedPlan {
  std::vector<PlanEntry> entries;  // sorted by descending risk + tie-break chain
  std::vector<UnpatchableFlag> flags;
};

}  // namespace threatrank
