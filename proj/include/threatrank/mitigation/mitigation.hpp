#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "threatrank/core/assessment.hpp"
#include "threatrank/core/json_codec.hpp"
#include "threatrank/core/summary.hpp"
#include "threatrank/core/types.hpp"
#include "threatrank/gateway/gateway.hpp"
#include "threatrank/knowledge/store.hpp"

namespace threatrank::mitigation {

struct CyclicDependency : DomainError {
  std::vector<std::string> cycle;
  explicit CyclicDependency(std::vector<std::string> c)
      : DomainError("cyclic dependency: " + join(c)), cycle(std::move(c)) {}
  static std::string join(const std::vector<std::string>& c) {
    std::string out;
    for (const auto& id : c) {
      if (!out.empty()) out += " -> ";
      out += id;
    }
    return out;
  }
};

struct RetrievalLog {
  std::vector<std::string> dropped;  // ungrounded gateway proposals
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

inline gateway::RenderedPrompt retrieval_prompt(const EnrichedThreatInstance& t,
                                                const std::vector<MitigationAction>& known) {
  std::string known_text;
  for (const auto& a : known)
    known_text += "- [" + to_string(a.kind) + "] " + a.title + " (" + a.vendor + ", " +
                  a.version_scope + ")\n";
  if (known_text.empty()) known_text = "(none)\n";
  return gateway::render(gateway::TemplateId::mitigation_retrieve,
                         {{"INSTANCE_SUMMARY", instance_summary(t)},
                          {"CVE_ID", t.instance.primary_cve().value_or("(none)")},
                          {"KNOWN_ACTIONS", known_text}});
}

// Actions from the knowledge store (patches, KEV notes, advisories) plus
// gateway-proposed workarounds and detections. Gateway-proposed patches,
// advisories, or notes that match nothing in the sources are dropped by the
// grounding filter and logged.
inline std::vector<MitigationAction> retrieve_mitigations(gateway::Gateway& gw,
                                                          knowledge::KnowledgeStore& store,
                                                          const EnrichedThreatInstance& t,
                                                          RetrievalLog& log,
                                                          bool use_gateway = true) {
  std::vector<MitigationAction> out;
  auto cve = t.instance.primary_cve();
  if (cve) out = store.source_actions(*cve);

  std::set<std::string> known_keys;
  for (const auto& a : out) known_keys.insert(canonical_key(a));

  if (!use_gateway) return out;

  try {
    auto prompt = retrieval_prompt(t, out);
    auto result = gw.complete_structured({prompt, gateway::temperature_for(prompt.template_id)});
    for (const auto& row : result.document["actions"]) {
      MitigationAction a;
      a.kind = action_kind_from_string(row.at("kind").get<std::string>());
      a.title = row.at("title").get<std::string>();
      a.vendor = row.value("vendor", "");
      a.version_scope = row.value("version_scope", "");
      if (row.contains("released") && row["released"].is_string())
        a.released = parse_iso8601(row["released"].get<std::string>());
      a.side_effects = row.value("side_effects", "");
      a.source = "gateway";
      a.authority = SourceAuthority::proposed;
      a.maturity = patch_maturity_from_string(row.value("maturity", "unknown"));
      a.complexity = complexity_from_string(row.value("complexity", "moderate"));

      bool needs_grounding = a.kind == ActionKind::patch ||
                             a.kind == ActionKind::vendor_advisory ||
                             a.kind == ActionKind::mitigation_note;
      if (needs_grounding && !known_keys.count(canonical_key(a))) {
        log.dropped.push_back(to_string(a.kind) + " '" + a.title +
                              "' absent from all sources; dropped by grounding filter");
        continue;
      }
      out.push_back(std::move(a));
    }
  } catch (const gateway::GatewayError& e) {
    log.warnings.push_back(std::string("mitigation retrieval degraded to source actions: ") +
                           e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// Merges semantically equal actions on canonical_key keeping the
// highest-authority source; superseded entries are retained and annotated
// with their superseder. Idempotent.
inline std::vector<MitigationAction> normalize_dedup(std::vector<MitigationAction> actions) {
  std::map<std::string, MitigationAction> by_key;
  auto better = [](const MitigationAction& a, const MitigationAction& b) {
    return std::tuple(static_cast<int>(a.authority), static_cast<int>(a.maturity), a.source) <
           std::tuple(static_cast<int>(b.authority), static_cast<int>(b.maturity), b.source);
  };
  for (auto& a : actions) {
    auto key = canonical_key(a);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      by_key.emplace(key, std::move(a));
      continue;
    }
    MitigationAction& kept = it->second;
    MitigationAction& loser = better(a, kept) ? kept : a;
    MitigationAction& winner = better(a, kept) ? a : kept;
    if (!winner.released && loser.released) winner.released = loser.released;
    if (!winner.supersedes && loser.supersedes) winner.supersedes = loser.supersedes;
    if (winner.side_effects.empty()) winner.side_effects = loser.side_effects;
    if (&winner != &kept) kept = std::move(winner);
  }

  for (auto& [key, a] : by_key) {
    a.superseded_by.reset();
  }
  for (const auto& [key, a] : by_key) {
    if (a.supersedes) {
      auto target = by_key.find(*a.supersedes);
      if (target != by_key.end()) target->second.superseded_by = key;
    }
  }

  std::vector<MitigationAction> out;
  out.reserve(by_key.size());
  for (auto& [key, a] : by_key) out.push_back(std::move(a));
  std::sort(out.begin(), out.end(), [](const MitigationAction& a, const MitigationAction& b) {
    return std::tuple(static_cast<int>(a.authority), static_cast<int>(a.kind), a.title,
                      canonical_key(a)) <
           std::tuple(static_cast<int>(b.authority), static_cast<int>(b.kind), b.title,
                      canonical_key(b));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Risk and prioritization
// ---------------------------------------------------------------------------

// Risk_k = s_k * p_k * alpha_exp * beta_crit; no rounding before comparison.
inline double risk_score(const RiskInputs& inputs) {
  return inputs.severity * inputs.exploit_prob * inputs.exposure_factor *
         inputs.criticality_factor;
}

struct PlanConstraints {
  int disruption = 1;  // 0 low, 1 moderate, 2 high; lower disrupts less
  std::vector<std::string> dependencies;  // threat ids this entry waits on
  bool unpatchable = false;
  int earliest_phase = 0;  // first phase allowed by maintenance windows
};

struct PlanInput {
  EnrichedThreatInstance threat;
  StaticAssessment assessment;
  ExploitForecast forecast;
  std::vector<MitigationAction> actions;  // normalized
  RiskInputs risk_inputs;
  PlanConstraints constraints;
};

inline constexpr double kTieThreshold = 0.1;  // |dRisk| below this is a tie

namespace detail {

inline int action_type_rank(ActionKind k) {
  switch (k) {
    case ActionKind::patch: return 0;
    case ActionKind::workaround: return 1;
    case ActionKind::vendor_advisory: return 1;
    case ActionKind::mitigation_note: return 1;
    case ActionKind::detection: return 2;
  }
  return 3;
}

// The action an entry leads with: best type, then maturity, then complexity;
// superseded actions are never recommended.
inline const MitigationAction* recommended_action(const std::vector<MitigationAction>& actions) {
  const MitigationAction* best = nullptr;
  for (const auto& a : actions) {
    if (a.superseded_by) continue;
    if (!best) {
      best = &a;
      continue;
    }
    auto ka = std::tuple(action_type_rank(a.kind), static_cast<int>(a.maturity),
                         static_cast<int>(a.complexity), canonical_key(a));
    auto kb = std::tuple(action_type_rank(best->kind), static_cast<int>(best->maturity),
                         static_cast<int>(best->complexity), canonical_key(*best));
    if (ka < kb) best = &a;
  }
  return best;
}

inline int velocity_rank(const EnrichedThreatInstance& t) {
  switch (t.metadata.exploitation_status) {
    case ExploitationStatus::confirmed_in_wild: return 0;  // active
    case ExploitationStatus::poc_public: return 1;         // PoC released
    default: return 2;                                     // no evidence
  }
}

struct TieKey {
  int type_rank;
  int maturity;
  int complexity;
  int velocity;
  int disruption;
  double neg_risk;
  std::string id;

  auto tuple() const {
    return std::tie(type_rank, maturity, complexity, velocity, disruption, neg_risk, id);
  }
  bool operator<(const TieKey& o) const { return tuple() < o.tuple(); }
};

inline TieKey tie_key(const PlanInput& in, double risk) {
  const auto* rec = recommended_action(in.actions);
  TieKey k;
  k.type_rank = rec ? action_type_rank(rec->kind) : 3;
  k.maturity = rec ? static_cast<int>(rec->maturity) : static_cast<int>(PatchMaturity::unknown);
  k.complexity = rec ? static_cast<int>(rec->complexity)
                     : static_cast<int>(Complexity::moderate);
  k.velocity = velocity_rank(in.threat);
  k.disruption = in.constraints.disruption;
  k.neg_risk = -risk;
  k.id = in.threat.instance.id;
  return k;
}

inline const char* tiebreak_level_name(int idx) {
  switch (idx) {
    case 0: return "mitigation-type";
    case 1: return "patch-maturity";
    case 2: return "complexity";
    case 3: return "velocity";
    case 4: return "disruption";
    case 5: return "risk";
    default: return "id";
  }
}

inline int first_difference(const TieKey& a, const TieKey& b) {
  if (a.type_rank != b.type_rank) return 0;
  if (a.maturity != b.maturity) return 1;
  if (a.complexity != b.complexity) return 2;
  if (a.velocity != b.velocity) return 3;
  if (a.disruption != b.disruption) return 4;
  if (a.neg_risk != b.neg_risk) return 5;
  return 6;
}

}  // namespace detail

// Descending Risk_k with the documented tie-break chain at threshold 0.1.
// Near-ties are clustered into chains first (pairwise closeness is not
// transitive); inside a chain the tie-break key decides, ending with
// descending risk and the threat id so the order is total. Phases respect
// dependencies and maintenance windows; unpatchable systems are flagged with
// compensating-control recommendations but still ranked by risk.
inline PrioritizedPlan prioritize(const std::vector<PlanInput>& inputs,
                                  double tie_threshold = kTieThreshold) {
  if (inputs.empty()) throw DomainError("prioritize: no entries");
  for (const auto& in : inputs) in.risk_inputs.validate();

  struct Row {
    const PlanInput* in;
    double risk;
    detail::TieKey key;
    std::size_t cluster = 0;
  };
  std::vector<Row> rows;
  rows.reserve(inputs.size());
  for (const auto& in : inputs) {
    double r = risk_score(in.risk_inputs);
    rows.push_back({&in, r, detail::tie_key(in, r)});
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.risk != b.risk) return a.risk > b.risk;
    return a.key.id < b.key.id;
  });

  // chains of near-ties on the raw (unrounded) risk
  std::size_t cluster = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i - 1].risk - rows[i].risk >= tie_threshold) ++cluster;
    rows[i].cluster = cluster;
  }
  for (std::size_t begin = 0; begin < rows.size();) {
    std::size_t end = begin;
    while (end < rows.size() && rows[end].cluster == rows[begin].cluster) ++end;
    std::sort(rows.begin() + begin, rows.begin() + end,
              [](const Row& a, const Row& b) { return a.key < b.key; });
    begin = end;
  }

  // dependency phases (Kahn) over entries present in the plan
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < rows.size(); ++i) index[rows[i].in->threat.instance.id] = i;
  std::vector<int> phase(rows.size(), 0);
  std::vector<int> indegree(rows.size(), 0);
  std::vector<std::vector<std::size_t>> dependents(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    phase[i] = rows[i].in->constraints.earliest_phase;
    for (const auto& dep : rows[i].in->constraints.dependencies) {
      auto it = index.find(dep);
      if (it == index.end()) continue;  // dependency outside this plan
      dependents[it->second].push_back(i);
      ++indegree[i];
    }
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::size_t processed = 0;
  while (!ready.empty()) {
    auto i = ready.back();
    ready.pop_back();
    ++processed;
    for (auto j : dependents[i]) {
      phase[j] = std::max(phase[j], phase[i] + 1);
      if (--indegree[j] == 0) ready.push_back(j);
    }
  }
  if (processed != rows.size()) {
    std::vector<std::string> cycle;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (indegree[i] > 0) cycle.push_back(rows[i].in->threat.instance.id);
    throw CyclicDependency(std::move(cycle));
  }

  PrioritizedPlan plan;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    const PlanInput& in = *row.in;
    PlanEntry e;
    e.threat_id = in.threat.instance.id;
    e.risk = row.risk;
    e.actions = in.actions;
    e.phase = phase[i];
    e.dependencies = in.constraints.dependencies;

    // decisive level vs the next entry in the same chain
    if (i + 1 < rows.size() && rows[i + 1].cluster == row.cluster)
      e.decisive_tiebreaker = detail::tiebreak_level_name(
          detail::first_difference(row.key, rows[i + 1].key));
    else
      e.decisive_tiebreaker = "risk";

    char risk_buf[32];
    std::snprintf(risk_buf, sizeof(risk_buf), "%.4f", row.risk);
    const auto* rec = detail::recommended_action(in.actions);
    e.justification = std::string("risk ") + risk_buf + " (severity " +
                      std::to_string(in.risk_inputs.severity).substr(0, 4) + ", p=" +
                      std::to_string(in.risk_inputs.exploit_prob).substr(0, 6) +
                      "); decisive: " + e.decisive_tiebreaker +
                      (rec ? "; recommended: " + rec->title : "; no eligible action");
    plan.entries.push_back(std::move(e));

    if (in.constraints.unpatchable) {
      plan.flags.push_back(
          {in.threat.instance.id, "no applicable patch for an unsupported or end-of-life system",
           "isolate the system, apply compensating controls, and schedule an accelerated "
           "upgrade path"});
    }
  }
  return plan;
}

inline gateway::RenderedPrompt plan_prompt(const PrioritizedPlan& plan) {
  std::string summary;
  for (const auto& e : plan.entries) {
    char risk_buf[32];
    std::snprintf(risk_buf, sizeof(risk_buf), "%.4f", e.risk);
    summary += e.threat_id + " | risk " + risk_buf + " | decisive " + e.decisive_tiebreaker +
               " | phase " + std::to_string(e.phase) + "\n";
  }
  return gateway::render(gateway::TemplateId::mitigation_prioritize, {{"PLAN_SUMMARY", summary}});
}

// Replaces the deterministic justifications with gateway-written narratives;
// the order never changes. Failure keeps the deterministic texts.
inline void narrate_plan(gateway::Gateway& gw, PrioritizedPlan& plan, RetrievalLog& log) {
  try {
    auto prompt = plan_prompt(plan);
    auto result = gw.complete_structured({prompt, gateway::temperature_for(prompt.template_id)});
    std::map<std::string, std::string> texts;
    for (const auto& j : result.document["justifications"])
      texts[j.at("target").get<std::string>()] = j.at("justification").get<std::string>();
    for (auto& e : plan.entries) {
      auto it = texts.find(e.threat_id);
      if (it != texts.end()) e.justification = it->second;
    }
  } catch (const gateway::GatewayError& e) {
    log.warnings.push_back(std::string("plan narration unavailable: ") + e.what());
  }
}

// The plan as the external JSON contract: an array of
// {target, recommended_action, ETA, justification, dependencies,
// operational_notes}. ETA is derived from the phase index and the configured
// phase length, measured from the plan date.
inline json plan_contract_json(const PrioritizedPlan& plan, UtcTime plan_date,
                               int phase_length_days) {
  json arr = json::array();
  std::map<std::string, const UnpatchableFlag*> flags;
  for (const auto& f : plan.flags) flags[f.threat_id] = &f;
  for (const auto& e : plan.entries) {
    const auto* rec = detail::recommended_action(e.actions);
    std::string notes;
    if (rec && !rec->side_effects.empty()) notes = "side effects: " + rec->side_effects;
    if (auto it = flags.find(e.threat_id); it != flags.end()) {
      if (!notes.empty()) notes += "; ";
      notes += "unpatchable: " + it->second->recommendation;
    }
    arr.push_back(json{
        {"target", e.threat_id},
        {"recommended_action",
         rec ? to_string(rec->kind) + ": " + rec->title : "no eligible action"},
        {"ETA", format_iso8601_date(
                    plan_date.plus_days((e.phase + 1) * phase_length_days))},
        {"justification", e.justification},
        {"dependencies", e.dependencies},
        {"operational_notes", notes}});
  }
  return arr;
}

}  // namespace threatrank::mitigation
