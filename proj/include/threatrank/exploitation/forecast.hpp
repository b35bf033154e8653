#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "threatrank/core/assessment.hpp"
#include "threatrank/core/json_codec.hpp"
#include "threatrank/core/summary.hpp"
#include "threatrank/core/types.hpp"
#include "threatrank/gateway/gateway.hpp"
#include "threatrank/knowledge/store.hpp"

namespace threatrank::exploitation {

// Events sorted ascending; ties at equal timestamps ordered by source
// priority (KEV > Exploit-DB > VirusTotal > advisory), then by kind name.
inline TemporalNarrative build_narrative(knowledge::KnowledgeStore& store,
                                         const EnrichedThreatInstance& t,
                                         std::pair<UtcTime, UtcTime> window) {
  if (window.second < window.first) throw DomainError("narrative window end precedes start");
  std::vector<TemporalEvent> events;
  if (auto cve = t.instance.primary_cve())
    events = store.query_exploit_events(*cve, window);
  std::stable_sort(events.begin(), events.end(),
                   [](const TemporalEvent& a, const TemporalEvent& b) {
                     if (a.at != b.at) return a.at < b.at;
                     auto pa = knowledge::KnowledgeStore::source_priority(a.source);
                     auto pb = knowledge::KnowledgeStore::source_priority(b.source);
                     if (pa != pb) return pa < pb;
                     return to_string(a.kind) < to_string(b.kind);
                   });
  UtcTime end = window.second;
  if (store.config().as_of && *store.config().as_of < end) end = *store.config().as_of;
  return TemporalNarrative::build(std::move(events), {window.first, end});
}

struct ForecastOptions {
  int horizon_days = 30;      // {30, 90}
  double base_rate = 0.02;    // fallback prior with no signals
  bool use_gateway = true;
};

// ---------------------------------------------------------------------------
// Deterministic fallback scorer: a documented monotone logistic weighting of
// exploitation signals. It exists so offline runs always have a forecaster;
// it is not a reimplementation of EPSS.
//
//   z = logit(base_rate)
//     + 2.0 * kev                      kev catalog listing (metadata or event)
//     + 0.9 * min(poc_rw, 3)          recency-weighted PoC count
//     + 0.7 * min(wild, 3)            in-the-wild / malware sightings
//     + 1.6 * (base_score / 10)       static severity
//     + 2.5 * epss                    EPSS prior when available
//   p30 = sigmoid(z);  p_h = 1 - (1 - p30)^(h/30)
//
// Event influence decays exponentially with a 90-day half-life measured from
// the narrative window end.
// ---------------------------------------------------------------------------

namespace fallback_weights {
inline constexpr double kKev = 2.0;
inline constexpr double kPoc = 0.9;
inline constexpr double kWild = 0.7;
inline constexpr double kSeverity = 1.6;
inline constexpr double kEpss = 2.5;
inline constexpr double kHalfLifeDays = 90.0;
inline constexpr double kSignalCap = 3.0;
}  // namespace fallback_weights

struct FallbackTrace {
  double kev = 0.0;
  double poc_weighted = 0.0;
  double wild = 0.0;
  double severity = 0.0;
  double epss = 0.0;
  double p30 = 0.0;
};

inline FallbackTrace fallback_signals(const EnrichedThreatInstance& t,
                                      const StaticAssessment& assessment,
                                      const TemporalNarrative& narrative, double base_rate) {
  namespace w = fallback_weights;
  FallbackTrace tr;
  bool kev = t.metadata.kev_listed;
  for (const auto& e : narrative.events) {
    double age_days = std::max(0.0, e.at.days_until(narrative.window.second));
    double decay = std::exp2(-age_days / w::kHalfLifeDays);
    switch (e.kind) {
      case EventKind::kev_listed: kev = true; break;
      case EventKind::poc_released: tr.poc_weighted += decay; break;
      case EventKind::in_wild_observed:
      case EventKind::malware_seen: tr.wild += 1.0; break;
      default: break;
    }
  }
  tr.kev = kev ? 1.0 : 0.0;
  tr.poc_weighted = std::min(tr.poc_weighted, w::kSignalCap);
  tr.wild = std::min(tr.wild, w::kSignalCap);
  tr.severity = assessment.base_score / 10.0;
  tr.epss = t.metadata.epss ? t.metadata.epss->probability : 0.0;

  double prior = std::clamp(base_rate, 1e-6, 1.0 - 1e-6);
  double z = std::log(prior / (1.0 - prior)) + w::kKev * tr.kev + w::kPoc * tr.poc_weighted +
             w::kWild * tr.wild + w::kSeverity * tr.severity + w::kEpss * tr.epss;
  tr.p30 = 1.0 / (1.0 + std::exp(-z));
  return tr;
}

inline double horizon_adjust(double p30, int horizon_days) {
  return 1.0 - std::pow(1.0 - p30, static_cast<double>(horizon_days) / 30.0);
}

inline std::string inputs_digest(const EnrichedThreatInstance& t,
                                 const StaticAssessment& assessment,
                                 const TemporalNarrative& narrative) {
  json doc{{"instance", to_json(t)},
           {"vector", serialize_cvss_vector(assessment.vector)},
           {"events", json::array()}};
  for (const auto& e : narrative.events) doc["events"].push_back(to_json(e));
  return sha256_hex(doc.dump());
}

namespace detail {

inline std::string narrative_text(const TemporalNarrative& n) {
  if (n.events.empty()) return "(no exploitation events in window)";
  std::string out;
  for (std::size_t i = 0; i < n.events.size(); ++i) {
    const auto& e = n.events[i];
    out += format_iso8601_date(e.at) + " " + to_string(e.kind) + " [" + e.source + "]";
    if (!e.detail.empty()) out += " " + e.detail;
    if (i + 1 < n.events.size()) {
      auto days = static_cast<double>(n.gaps_seconds[i]) / 86400.0;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.1f", days);
      out += std::string("\n  +") + buf + " days\n";
    }
  }
  return out;
}

inline std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", p);
  return buf;
}

}  // namespace detail

inline ExploitForecast fallback_forecast(const EnrichedThreatInstance& t,
                                         const StaticAssessment& assessment,
                                         const TemporalNarrative& narrative,
                                         const ForecastOptions& opts) {
  auto tr = fallback_signals(t, assessment, narrative, opts.base_rate);
  ExploitForecast f;
  f.horizon_days = opts.horizon_days;
  f.probability = std::clamp(horizon_adjust(tr.p30, opts.horizon_days), 0.0, 1.0);
  f.fallback_used = true;
  f.inputs_digest = inputs_digest(t, assessment, narrative);
  f.rationale =
      "(i) exploitation signals: kev=" + std::to_string(tr.kev > 0) +
      ", poc_weighted=" + detail::format_probability(tr.poc_weighted) +
      ", in_wild=" + detail::format_probability(tr.wild) +
      "; (ii) exposure and mitigation frictions: severity=" +
      detail::format_probability(tr.severity * 10.0) +
      (t.metadata.disclosure.patch_available ? ", patch available" : ", no patch recorded") +
      "; (iii) adversary interest: epss_prior=" + detail::format_probability(tr.epss) +
      ", status=" + to_string(t.metadata.exploitation_status) +
      "; rule-based fallback scorer";
  return f;
}

inline gateway::RenderedPrompt forecast_prompt(const EnrichedThreatInstance& t,
                                               const StaticAssessment& assessment,
                                               const TemporalNarrative& narrative,
                                               int horizon_days) {
  char score_buf[16];
  std::snprintf(score_buf, sizeof(score_buf), "%.1f", assessment.base_score);
  gateway::Bindings bindings{
      {"INSTANCE_SUMMARY", instance_summary(t)},
      {"CVSS_VECTOR", serialize_cvss_vector(assessment.vector)},
      {"BASE_SCORE", score_buf},
      {"WINDOW", format_iso8601_date(narrative.window.first) + ".." +
                     format_iso8601_date(narrative.window.second)},
      {"NARRATIVE", detail::narrative_text(narrative)},
      {"HORIZON_DAYS", std::to_string(horizon_days)}};
  return gateway::render(gateway::TemplateId::forecast, bindings);
}

// Gateway-backed forecast with the deterministic fallback on failure.
// Out-of-range gateway probabilities are clamped and the raw value kept in
// the rationale.
inline ExploitForecast forecast(gateway::Gateway& gw, const EnrichedThreatInstance& t,
                                const StaticAssessment& assessment,
                                const TemporalNarrative& narrative,
                                const ForecastOptions& opts) {
  if (opts.horizon_days != 30 && opts.horizon_days != 90)
    throw DomainError("horizon_days must be 30 or 90");
  if (!opts.use_gateway) return fallback_forecast(t, assessment, narrative, opts);

  try {
    auto prompt = forecast_prompt(t, assessment, narrative, opts.horizon_days);
    auto result = gw.complete_structured({prompt, gateway::temperature_for(prompt.template_id)});
    ExploitForecast f;
    f.horizon_days = opts.horizon_days;
    double raw = result.document["probability"].get<double>();
    f.probability = std::clamp(raw, 0.0, 1.0);
    f.rationale = result.document.value("rationale", "");
    if (raw != f.probability)
      f.rationale += " [raw probability " + detail::format_probability(raw) + " clamped]";
    f.inputs_digest = inputs_digest(t, assessment, narrative);
    f.fallback_used = false;
    return f;
  } catch (const gateway::GatewayError& e) {
    auto f = fallback_forecast(t, assessment, narrative, opts);
    f.rationale += "; gateway unavailable (" + std::string(e.what()) + ")";
    return f;
  }
}

}  // namespace threatrank::exploitation
