#pragma once

#include <json.hpp>

#include "threatrank/core/assessment.hpp"
#include "threatrank/core/cvss_vector.hpp"
#include "threatrank/core/types.hpp"

// JSON interchange. Field names match the type definitions (snake_case);
// optional fields are omitted when absent. nlohmann::json orders object keys
// alphabetically, which keeps emitted documents stable byte-for-byte.

namespace threatrank {

using json = nlohmann::json;

struct JsonCodecError : std::runtime_error {
  explicit JsonCodecError(const std::string& what) : std::runtime_error(what) {}
};

namespace jsondetail {

inline const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw JsonCodecError(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
inline void set_optional(json& j, const char* key, const std::optional<T>& v);

inline std::vector<std::string> string_list(const json& j) {
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(e.get<std::string>());
  return out;
}

}  // namespace jsondetail

// --- RawIncident -----------------------------------------------------------

inline json to_json(const RawIncident& r) {
  return json{{"id", r.id},
              {"text", r.text},
              {"source", r.source},
              {"observed_at", format_iso8601(r.observed_at)}};
}

inline RawIncident raw_incident_from_json(const json& j) {
  RawIncident r;
  r.id = jsondetail::require(j, "id").get<std::string>();
  r.text = jsondetail::require(j, "text").get<std::string>();
  r.source = jsondetail::require(j, "source").get<std::string>();
  r.observed_at = parse_iso8601(jsondetail::require(j, "observed_at").get<std::string>());
  if (r.text.empty()) throw JsonCodecError("incident '" + r.id + "' has empty text");
  return r;
}

// --- ThreatInstance / Metadata / EnrichedThreatInstance ---------------------

inline json to_json(const ThreatInstance& t) {
  json j{{"id", t.id},
         {"parent_incident", t.parent_incident},
         {"vendor", t.vendor},
         {"affected_components", t.affected_components},
         {"impact", t.impact},
         {"attack_patterns", t.attack_patterns},
         {"indicators", t.indicators}};
  if (t.campaign) j["campaign"] = *t.campaign;
  return j;
}

inline ThreatInstance threat_instance_from_json(const json& j) {
  ThreatInstance t;
  t.id = jsondetail::require(j, "id").get<std::string>();
  t.parent_incident = jsondetail::require(j, "parent_incident").get<std::string>();
  t.vendor = j.value("vendor", "");
  t.affected_components = jsondetail::string_list(j.value("affected_components", json::array()));
  if (j.contains("campaign") && !j["campaign"].is_null())
    t.campaign = j["campaign"].get<std::string>();
  t.impact = j.value("impact", "");
  t.attack_patterns = jsondetail::string_list(j.value("attack_patterns", json::array()));
  t.indicators = jsondetail::string_list(j.value("indicators", json::array()));
  return t;
}

inline json to_json(const AffectedSystem& s) {
  return json{{"vendor", s.vendor}, {"product", s.product}, {"version_range", s.version_range}};
}

inline AffectedSystem affected_system_from_json(const json& j) {
  return AffectedSystem{j.value("vendor", ""), j.value("product", ""),
                        j.value("version_range", "")};
}

inline json to_json(const DisclosureRecord& d) {
  json chron = json::array();
  for (const auto& c : d.chronology)
    chron.push_back(json{{"label", c.label}, {"at", format_iso8601(c.at)}});
  return json{{"channel", d.channel},
              {"type", d.type},
              {"chronology", chron},
              {"patch_available", d.patch_available}};
}

inline DisclosureRecord disclosure_from_json(const json& j) {
  DisclosureRecord d;
  d.channel = j.value("channel", "");
  d.type = j.value("type", "");
  for (const auto& c : j.value("chronology", json::array()))
    d.chronology.push_back({c.at("label").get<std::string>(),
                            parse_iso8601(c.at("at").get<std::string>())});
  d.patch_available = j.value("patch_available", false);
  return d;
}

inline json to_json(const Metadata& m) {
  json j{{"attack_techniques", m.attack_techniques},
         {"exploitation_status", to_string(m.exploitation_status)},
         {"disclosure", to_json(m.disclosure)},
         {"kev_listed", m.kev_listed}};
  if (m.cve_id) j["cve_id"] = *m.cve_id;
  json systems = json::array();
  for (const auto& s : m.affected_systems) systems.push_back(to_json(s));
  j["affected_systems"] = systems;
  if (m.epss)
    j["epss"] = json{{"probability", m.epss->probability},
                     {"percentile", m.epss->percentile},
                     {"snapshot_date", format_iso8601_date(m.epss->snapshot_date)}};
  if (m.kev_date_added) j["kev_date_added"] = format_iso8601_date(*m.kev_date_added);
  return j;
}

inline Metadata metadata_from_json(const json& j) {
  Metadata m;
  if (j.contains("cve_id") && !j["cve_id"].is_null()) m.cve_id = j["cve_id"].get<std::string>();
  m.attack_techniques = jsondetail::string_list(j.value("attack_techniques", json::array()));
  m.exploitation_status = exploitation_status_from_string(j.value("exploitation_status", "unknown"));
  for (const auto& s : j.value("affected_systems", json::array()))
    m.affected_systems.push_back(affected_system_from_json(s));
  if (j.contains("disclosure")) m.disclosure = disclosure_from_json(j["disclosure"]);
  if (j.contains("epss") && !j["epss"].is_null()) {
    const auto& e = j["epss"];
    m.epss = EpssValue{e.at("probability").get<double>(), e.at("percentile").get<double>(),
                       parse_iso8601(e.at("snapshot_date").get<std::string>())};
  }
  m.kev_listed = j.value("kev_listed", false);
  if (j.contains("kev_date_added") && !j["kev_date_added"].is_null())
    m.kev_date_added = parse_iso8601(j["kev_date_added"].get<std::string>());
  return m;
}

inline json to_json(const EnrichedThreatInstance& e) {
  return json{{"instance", to_json(e.instance)}, {"metadata", to_json(e.metadata)}};
}

inline EnrichedThreatInstance enriched_from_json(const json& j) {
  EnrichedThreatInstance e;
  e.instance = threat_instance_from_json(jsondetail::require(j, "instance"));
  e.metadata = metadata_from_json(jsondetail::require(j, "metadata"));
  return e;
}

// --- Evidence / decisions / assessment --------------------------------------

inline json to_json(const EvidenceSpan& s) {
  json j{{"span", s.span}, {"source", s.source}};
  if (s.locator) j["locator"] = *s.locator;
  return j;
}

inline EvidenceSpan evidence_span_from_json(const json& j) {
  EvidenceSpan s;
  s.span = jsondetail::require(j, "span").get<std::string>();
  s.source = j.value("source", "");
  if (j.contains("locator") && !j["locator"].is_null())
    s.locator = j["locator"].get<std::string>();
  return s;
}

inline json to_json(const MetricDecision& d) {
  json ev = json::array();
  for (const auto& e : d.evidence) ev.push_back(to_json(e));
  json j{{"metric", to_string(d.metric)}, {"value", d.value},      {"evidence", ev},
         {"rationale", d.rationale},      {"confidence", d.confidence},
         {"defaulted", d.defaulted}};
  if (d.necessary) j["necessary"] = *d.necessary;
  if (d.confirmed) j["confirmed"] = *d.confirmed;
  return j;
}

inline json to_json(const StaticAssessment& a) {
  json decisions = json::array();
  for (const auto& d : a.per_metric_decisions) decisions.push_back(to_json(d));
  return json{{"vector", serialize_cvss_vector(a.vector)},
              {"base_score", a.base_score},
              {"rating", cvss::to_string(a.rating)},
              {"per_metric_decisions", decisions},
              {"breakdown",
               json{{"iss", a.breakdown.iss},
                    {"impact", a.breakdown.impact},
                    {"exploitability", a.breakdown.exploitability}}}};
}

// --- Temporal events / narrative / forecast ---------------------------------

inline json to_json(const TemporalEvent& e) {
  return json{{"at", format_iso8601(e.at)},
              {"kind", to_string(e.kind)},
              {"detail", e.detail},
              {"source", e.source}};
}

inline TemporalEvent temporal_event_from_json(const json& j) {
  TemporalEvent e;
  e.at = parse_iso8601(jsondetail::require(j, "at").get<std::string>());
  auto kind = event_kind_from_string(jsondetail::require(j, "kind").get<std::string>());
  if (!kind) throw JsonCodecError("unknown event kind: " + j["kind"].get<std::string>());
  e.kind = *kind;
  e.detail = j.value("detail", "");
  e.source = j.value("source", "");
  return e;
}

inline json to_json(const TemporalNarrative& n) {
  json events = json::array();
  for (const auto& e : n.events) events.push_back(to_json(e));
  return json{{"events", events},
              {"gaps_seconds", n.gaps_seconds},
              {"window", json{{"start", format_iso8601(n.window.first)},
                              {"end", format_iso8601(n.window.second)}}}};
}

inline json to_json(const ExploitForecast& f) {
  return json{{"probability", f.probability},
              {"horizon_days", f.horizon_days},
              {"rationale", f.rationale},
              {"inputs_digest", f.inputs_digest},
              {"fallback_used", f.fallback_used}};
}

inline ExploitForecast forecast_from_json(const json& j) {
  ExploitForecast f;
  f.probability = jsondetail::require(j, "probability").get<double>();
  f.horizon_days = j.value("horizon_days", 30);
  f.rationale = j.value("rationale", "");
  f.inputs_digest = j.value("inputs_digest", "");
  f.fallback_used = j.value("fallback_used", false);
  return f;
}

// --- Mitigation --------------------------------------------------------------

inline json to_json(const MitigationAction& a) {
  json j{{"kind", to_string(a.kind)},
         {"title", a.title},
         {"vendor", a.vendor},
         {"version_scope", a.version_scope},
         {"side_effects", a.side_effects},
         {"source", a.source},
         {"authority", to_string(a.authority)},
         {"maturity", to_string(a.maturity)},
         {"complexity", to_string(a.complexity)},
         {"canonical_key", canonical_key(a)}};
  if (a.released) j["released"] = format_iso8601_date(*a.released);
  if (a.supersedes) j["supersedes"] = *a.supersedes;
  if (a.superseded_by) j["superseded_by"] = *a.superseded_by;
  return j;
}

inline MitigationAction mitigation_action_from_json(const json& j) {
  MitigationAction a;
  a.kind = action_kind_from_string(jsondetail::require(j, "kind").get<std::string>());
  a.title = jsondetail::require(j, "title").get<std::string>();
  a.vendor = j.value("vendor", "");
  a.version_scope = j.value("version_scope", "");
  if (j.contains("released") && !j["released"].is_null())
    a.released = parse_iso8601(j["released"].get<std::string>());
  if (j.contains("supersedes") && !j["supersedes"].is_null())
    a.supersedes = j["supersedes"].get<std::string>();
  a.side_effects = j.value("side_effects", "");
  a.source = j.value("source", "");
  a.authority = source_authority_from_string(j.value("authority", "proposed"));
  a.maturity = patch_maturity_from_string(j.value("maturity", "unknown"));
  a.complexity = complexity_from_string(j.value("complexity", "moderate"));
  if (j.contains("superseded_by") && !j["superseded_by"].is_null())
    a.superseded_by = j["superseded_by"].get<std::string>();
  return a;
}

inline json to_json(const PlanEntry& e) {
  json actions = json::array();
  for (const auto& a : e.actions) actions.push_back(to_json(a));
  return json{{"threat_id", e.threat_id},
              {"risk", e.risk},
              {"actions", actions},
              {"phase", e.phase},
              {"dependencies", e.dependencies},
              {"justification", e.justification},
              {"decisive_tiebreaker", e.decisive_tiebreaker}};
}

inline json to_json(const PrioritizedPlan& p) {
  json entries = json::array();
  for (const auto& e : p.entries) entries.push_back(to_json(e));
  json flags = json::array();
  for (const auto& f : p.flags)
    flags.push_back(json{{"threat_id", f.threat_id},
                         {"note", f.note},
                         {"recommendation", f.recommendation}});
  return json{{"entries", entries}, {"flags", flags}};
}

// Stable serialization used for files and digests: two-space indent,
// trailing newline, keys sorted by nlohmann's ordering.
inline std::string dump_stable(const json& j) { return j.dump(2) + "\n"; }

}  // namespace threatrank
