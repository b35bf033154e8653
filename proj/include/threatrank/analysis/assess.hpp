#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "threatrank/analysis/evidence.hpp"
#include "threatrank/core/assessment.hpp"
#include "threatrank/core/summary.hpp"
#include "threatrank/core/types.hpp"
#include "threatrank/gateway/gateway.hpp"

namespace threatrank::analysis {

using json = nlohmann::json;

// Value domains by abbreviation and display name, in domain order.
struct MetricDomain {
  std::vector<std::pair<std::string, std::string>> values;  // (abbrev, name)

  std::optional<std::string> abbrev_for(const std::string& name) const {
    for (const auto& [ab, nm] : values)
      if (nm == name || ab == name) return ab;
    return std::nullopt;
  }
  std::string name_for(const std::string& abbrev) const {
    for (const auto& [ab, nm] : values)
      if (ab == abbrev) return nm;
    return abbrev;
  }
};

inline const MetricDomain& domain_of(CvssMetric metric) {
  static const MetricDomain av{{{"N", "Network"}, {"A", "Adjacent"}, {"L", "Local"}, {"P", "Physical"}}};
  static const MetricDomain ac{{{"L", "Low"}, {"H", "High"}}};
  static const MetricDomain pr{{{"N", "None"}, {"L", "Low"}, {"H", "High"}}};
  static const MetricDomain ui{{{"N", "None"}, {"R", "Required"}}};
  static const MetricDomain s{{{"U", "Unchanged"}, {"C", "Changed"}}};
  static const MetricDomain cia{{{"N", "None"}, {"L", "Low"}, {"H", "High"}}};
  switch (metric) {
    case CvssMetric::av: return av;
    case CvssMetric::ac: return ac;
    case CvssMetric::pr: return pr;
    case CvssMetric::ui: return ui;
    case CvssMetric::s: return s;
    default: return cia;
  }
}

// Evidence-empty defaults: the least-severe exploitability / least-impact
// assignment, so missing evidence never inflates priority.
inline std::string default_value(CvssMetric metric) {
  switch (metric) {
    case CvssMetric::av: return "L";
    case CvssMetric::ac: return "H";
    case CvssMetric::pr: return "H";
    case CvssMetric::ui: return "R";
    case CvssMetric::s: return "U";
    default: return "N";
  }
}

inline MetricDecision defaulted_decision(CvssMetric metric, const std::string& why) {
  MetricDecision d;
  d.metric = metric;
  d.value = default_value(metric);
  d.rationale = why + "; default rule applied (" + domain_of(metric).name_for(d.value) + ")";
  d.confidence = 0.0;
  d.defaulted = true;
  return d;
}

// Single decision from a set of same-metric candidates, applying the
// metric's documented rule. Rules are symmetric functions of the candidate
// set, so the outcome is independent of candidate order. A single candidate
// is returned unchanged.
inline MetricDecision resolve_conflicts(std::vector<MetricDecision> candidates,
                                        CvssMetric metric) {
  if (candidates.empty()) throw DomainError("resolve_conflicts: no candidates");
  if (candidates.size() == 1) return candidates[0];

  auto merged_evidence = [&] {
    std::vector<EvidenceSpan> ev;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& c : candidates)
      for (const auto& e : c.evidence)
        if (seen.emplace(e.span, e.source).second) ev.push_back(e);
    return ev;
  };

  auto note_discarded = [&](MetricDecision& winner) {
    const auto& dom = domain_of(metric);
    std::set<std::string> discarded;
    for (const auto& c : candidates)
      if (c.value != winner.value) discarded.insert(dom.name_for(c.value));
    if (!discarded.empty()) {
      winner.rationale += "; discarded alternative:";
      for (const auto& d : discarded) winner.rationale += " " + d;
    }
    winner.evidence = merged_evidence();
  };

  auto rank_of = [&](const MetricDecision& c) -> int {
    const auto& vals = domain_of(metric).values;
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (vals[i].first == c.value) return static_cast<int>(i);
    return static_cast<int>(vals.size());
  };

  auto pick = [&](auto better) {
    const MetricDecision* best = &candidates[0];
    for (const auto& c : candidates)
      if (better(c, *best)) best = &c;
    MetricDecision winner = *best;
    note_discarded(winner);
    return winner;
  };

  switch (metric) {
    case CvssMetric::av:
      // highest exposure explicitly supported (Network > Adjacent > Local > Physical)
      return pick([&](const MetricDecision& a, const MetricDecision& b) {
        return rank_of(a) < rank_of(b);
      });
    case CvssMetric::pr:
      // minimum privileges the attacker must possess
      return pick([&](const MetricDecision& a, const MetricDecision& b) {
        return rank_of(a) < rank_of(b);
      });
    case CvssMetric::ac: {
      // elevate to High only if the demanding condition is explicitly necessary
      bool high_necessary = false, any_low = false;
      for (const auto& c : candidates) {
        if (c.value == "H" && c.necessary.value_or(false)) high_necessary = true;
        if (c.value == "L") any_low = true;
      }
      std::string want = high_necessary ? "H" : (any_low ? "L" : "H");
      return pick([&](const MetricDecision& a, const MetricDecision& b) {
        return (a.value == want) > (b.value == want);
      });
    }
    case CvssMetric::ui: {
      // Required only when user action is a necessary condition
      bool required_necessary = false, any_none = false;
      for (const auto& c : candidates) {
        if (c.value == "R" && c.necessary.value_or(false)) required_necessary = true;
        if (c.value == "N") any_none = true;
      }
      std::string want = required_necessary ? "R" : (any_none ? "N" : "R");
      return pick([&](const MetricDecision& a, const MetricDecision& b) {
        return (a.value == want) > (b.value == want);
      });
    }
    case CvssMetric::s: {
      bool changed = false;
      for (const auto& c : candidates)
        if (c.value == "C" && !c.evidence.empty()) changed = true;
      std::string want = changed ? "C" : "U";
      return pick([&](const MetricDecision& a, const MetricDecision& b) {
        return (a.value == want) > (b.value == want);
      });
    }
    default: {
      // C/I/A: downgrade to Low unless High is confirmed (an explicit
      // confirmation flag or agreement of two candidates).
      int high_votes = 0;
      bool high_confirmed = false, any_low = false, any_high = false;
      for (const auto& c : candidates) {
        if (c.value == "H") {
          ++high_votes;
          any_high = true;
          if (c.confirmed.value_or(false)) high_confirmed = true;
        }
        if (c.value == "L") any_low = true;
      }
      std::string want;
      if (any_high && (high_confirmed || high_votes >= 2))
        want = "H";
      else if (any_low || any_high)
        want = "L";
      else
        want = "N";
      // A downgraded High becomes a Low decision even when no candidate said
      // Low explicitly.
      if (want == "L" && !any_low) {
        MetricDecision winner;
        for (const auto& c : candidates)
          if (c.value == "H") winner = c;
        winner.value = "L";
        winner.rationale += "; downgraded to Low (complete compromise not confirmed)";
        note_discarded(winner);
        return winner;
      }
      return pick([&](const MetricDecision& a, const MetricDecision& b) {
        return (a.value == want) > (b.value == want);
      });
    }
  }
}

struct AssessOptions {
  std::vector<EvidenceDoc> extra_docs;  // e.g. parent incident text, NVD description
};

inline gateway::TemplateId classify_template(CvssMetric metric) {
  switch (metric) {
    case CvssMetric::av: return gateway::TemplateId::classify_av;
    case CvssMetric::ac: return gateway::TemplateId::classify_ac;
    case CvssMetric::pr: return gateway::TemplateId::classify_pr;
    case CvssMetric::ui: return gateway::TemplateId::classify_ui;
    default: return gateway::TemplateId::classify_cia;
  }
}

inline std::string impact_metric_name(CvssMetric metric) {
  switch (metric) {
    case CvssMetric::c: return "Confidentiality";
    case CvssMetric::i: return "Integrity";
    case CvssMetric::a: return "Availability";
    default: return to_string(metric);
  }
}

inline gateway::RenderedPrompt classify_prompt(const std::vector<EvidenceSpan>& evidence,
                                               CvssMetric metric,
                                               const EnrichedThreatInstance& t) {
  const auto& dom = domain_of(metric);
  std::string ev_text;
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    ev_text += std::to_string(i + 1) + ". \"" + evidence[i].span + "\" (" + evidence[i].source +
               ")\n";
  }
  std::string domain_text;
  json domain_names = json::array();
  for (const auto& [ab, nm] : dom.values) {
    if (!domain_text.empty()) domain_text += ", ";
    domain_text += nm;
    domain_names.push_back(nm);
  }
  gateway::Bindings bindings{{"METRIC", to_string(metric)},
                             {"INSTANCE_SUMMARY", instance_summary(t)},
                             {"EVIDENCE", ev_text},
                             {"DOMAIN", domain_text}};
  if (classify_template(metric) == gateway::TemplateId::classify_cia)
    bindings["IMPACT_NAME"] = impact_metric_name(metric);
  return gateway::render(classify_template(metric), bindings, json{{"domain", domain_names}});
}

// Per-metric evidence construction, gateway-assisted classification and
// rule-based conflict resolution, terminating in a deterministic score.
class StaticAnalyzer {
 public:
  explicit StaticAnalyzer(gateway::Gateway& gw) : gw_(gw) {}

  // Maps one evidence set to a metric decision through the gateway. Empty
  // evidence applies the declared default without a call; gateway failure
  // falls back to the default with the decision flagged.
  MetricDecision classify_metric(const std::vector<EvidenceSpan>& evidence, CvssMetric metric,
                                 const EnrichedThreatInstance& t) {
    if (metric == CvssMetric::s) return classify_scope(evidence);
    if (evidence.empty()) return defaulted_decision(metric, "no evidence");
    try {
      return classify_via_gateway(evidence, metric, t);
    } catch (const gateway::GatewayError& e) {
      auto d = defaulted_decision(metric, std::string("gateway failure: ") + e.what());
      return d;
    }
  }

  // Full assessment: evidence -> classify (per source) -> resolve, for all
  // eight metrics; the score always comes from the scoring engine, never
  // from model text.
  StaticAssessment assess_static(const EnrichedThreatInstance& t,
                                 const AssessOptions& opts = {}) {
    StaticAssessment out;
    auto docs = default_docs(t, opts.extra_docs);
    for (auto metric : kAllMetrics) {
      auto tagged = build_tagged_evidence(metric, docs);
      MetricDecision decision;
      if (tagged.empty()) {
        decision = defaulted_decision(metric, "no evidence");
      } else if (metric == CvssMetric::s) {
        std::vector<EvidenceSpan> ev;
        for (auto& te : tagged) ev.push_back(te.span);
        decision = classify_scope(ev);
      } else {
        // group evidence by source; each group yields one candidate
        std::map<std::string, std::vector<EvidenceSpan>> groups;
        for (auto& te : tagged) groups[te.span.source].push_back(te.span);
        std::vector<MetricDecision> candidates;
        for (auto& [source, ev] : groups) {
          try {
            candidates.push_back(classify_via_gateway(ev, metric, t));
          } catch (const gateway::GatewayError&) {
            // per-group failure degrades; full failure defaults below
          }
        }
        decision = candidates.empty()
                       ? defaulted_decision(metric, "gateway failure for every evidence group")
                       : resolve_conflicts(std::move(candidates), metric);
      }
      if (metric == CvssMetric::pr && !decision.defaulted) {
        // Scope-aware check: boundary crossing is recorded but does not
        // change the categorical PR value.
        if (!build_tagged_evidence(CvssMetric::s, docs).empty())
          decision.rationale += "; scope-aware check: boundary-crossing signals present";
      }
      out.per_metric_decisions.push_back(std::move(decision));
    }

    out.vector = assemble_vector(out.per_metric_decisions);
    out.breakdown = cvss::base_score(out.vector);
    out.base_score = out.breakdown.base;
    out.rating = cvss::severity_rating(out.base_score);
    return out;
  }

  static CvssVector assemble_vector(const std::vector<MetricDecision>& decisions) {
    using namespace cvss_abbrev;
    CvssVector v;
    for (const auto& d : decisions) {
      switch (d.metric) {
        case CvssMetric::av: v.av = *parse_av(d.value); break;
        case CvssMetric::ac: v.ac = *parse_ac(d.value); break;
        case CvssMetric::pr: v.pr = *parse_pr(d.value); break;
        case CvssMetric::ui: v.ui = *parse_ui(d.value); break;
        case CvssMetric::s: v.scope = *parse_scope(d.value); break;
        case CvssMetric::c: v.c = *parse_impact(d.value); break;
        case CvssMetric::i: v.i = *parse_impact(d.value); break;
        case CvssMetric::a: v.a = *parse_impact(d.value); break;
      }
    }
    return v;
  }

 private:
  static MetricDecision classify_scope(const std::vector<EvidenceSpan>& evidence) {
    if (evidence.empty()) return defaulted_decision(CvssMetric::s, "no boundary-crossing cues");
    MetricDecision d;
    d.metric = CvssMetric::s;
    d.value = "C";
    d.evidence = evidence;
    d.rationale = "boundary-crossing cue: \"" + evidence.front().span + "\"";
    d.confidence = 0.7;
    return d;
  }

  MetricDecision classify_via_gateway(const std::vector<EvidenceSpan>& evidence,
                                      CvssMetric metric, const EnrichedThreatInstance& t) {
    const auto& dom = domain_of(metric);
    auto prompt = classify_prompt(evidence, metric, t);
    auto result = gw_.complete_structured({prompt, gateway::temperature_for(prompt.template_id)});

    MetricDecision d;
    d.metric = metric;
    d.value = *dom.abbrev_for(result.document["value"].get<std::string>());
    d.evidence = evidence;
    d.rationale = result.document.value("rationale", "");
    d.confidence = result.document.value("confidence", 0.0);
    if (result.document.contains("necessary"))
      d.necessary = result.document["necessary"].get<bool>();
    if (result.document.contains("confirmed"))
      d.confirmed = result.document["confirmed"].get<bool>();
    return d;
  }

  gateway::Gateway& gw_;
};

}  // namespace threatrank::analysis
