#pragma once

#include <algorithm>
#include <cctype>
#include <future>
#include <limits>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "threatrank/core/json_codec.hpp"
#include "threatrank/core/types.hpp"
#include "threatrank/gateway/gateway.hpp"
#include "threatrank/knowledge/store.hpp"

namespace threatrank::triage {

struct TriageWarning {
  std::string incident_id;
  std::string message;
};

struct TriageFailure {
  std::string incident_id;
  std::string error;
};

struct DroppedIndicator {
  std::string incident_id;
  std::string indicator;
  std::string reason;
};

struct TriageReport {
  std::vector<TriageWarning> warnings;
  std::vector<TriageFailure> failures;
  std::vector<DroppedIndicator> dropped_indicators;
  std::vector<std::string> enrichment_notes;  // "<instance-id>: note"

  json to_json() const {
    json w = json::array(), f = json::array(), d = json::array();
    for (const auto& x : warnings)
      w.push_back(json{{"incident_id", x.incident_id}, {"message", x.message}});
    for (const auto& x : failures)
      f.push_back(json{{"incident_id", x.incident_id}, {"error", x.error}});
    for (const auto& x : dropped_indicators)
      d.push_back(json{{"incident_id", x.incident_id},
                       {"indicator", x.indicator},
                       {"reason", x.reason}});
    return json{{"warnings", w},
                {"failures", f},
                {"dropped_indicators", d},
                {"enrichment_notes", enrichment_notes}};
  }
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool locatable(const std::string& needle, const std::string& haystack_lower) {
  return haystack_lower.find(lower(needle)) != std::string::npos;
}

}  // namespace detail

// phi (event separation via the gateway) and psi (metadata enrichment via the
// knowledge store).
class Triage {
 public:
  Triage(gateway::Gateway& gw, knowledge::KnowledgeStore& store) : gw_(gw), store_(store) {}

  // Splits one raw incident into structured threat instances. Indicators the
  // gateway cannot ground in the incident text (or, for CVE ids, in the
  // knowledge store) are dropped with a warning rather than failing the
  // incident. Instances that carry more than one CVE id after gateway output
  // are re-split mechanically, one instance per CVE with shared context
  // copied. An extraction with no instances is not an error.
  std::vector<ThreatInstance> separate_events(const RawIncident& incident,
                                              TriageReport& report) {
    auto prompt = gateway::render(gateway::TemplateId::disentangle,
                                  {{"INCIDENT_SOURCE", incident.source},
                                   {"RAW_INCIDENT_TEXT", incident.text}});
    auto result = gw_.complete_structured({prompt, gateway::temperature_for(prompt.template_id)});

    const std::string text_lower = detail::lower(incident.text);
    std::vector<ThreatInstance> parsed;
    for (const auto& inst : result.document["instances"]) {
      ThreatInstance t;
      t.parent_incident = incident.id;
      t.vendor = inst.value("vendor", "");
      for (const auto& c : inst.value("affected_components", json::array()))
        t.affected_components.push_back(c.get<std::string>());
      if (inst.contains("campaign") && inst["campaign"].is_string())
        t.campaign = inst["campaign"].get<std::string>();
      t.impact = inst.value("impact", "");
      for (const auto& p : inst.value("attack_patterns", json::array()))
        t.attack_patterns.push_back(p.get<std::string>());

      for (const auto& ind_j : inst.value("indicators", json::array())) {
        auto ind = ind_j.get<std::string>();
        if (detail::locatable(ind, text_lower)) {
          t.indicators.push_back(ind);
        } else if (is_cve_id(ind) && store_.lookup_cve(ind)) {
          // knowledge-store-confirmed CVE alias
          t.indicators.push_back(ind);
        } else {
          report.dropped_indicators.push_back(
              {incident.id, ind, "not locatable in incident text or knowledge store"});
          report.warnings.push_back(
              {incident.id, "dropped ungrounded indicator '" + ind + "'"});
        }
      }
      parsed.push_back(std::move(t));
    }

    // Re-split instances carrying several CVE ids: one threat per instance.
    std::vector<ThreatInstance> out;
    for (auto& t : parsed) {
      std::vector<std::string> cves, rest;
      for (auto& ind : t.indicators)
        (is_cve_id(ind) ? cves : rest).push_back(ind);
      if (cves.size() <= 1) {
        out.push_back(std::move(t));
        continue;
      }
      report.warnings.push_back({incident.id,
                                 "instance carried " + std::to_string(cves.size()) +
                                     " CVE ids; re-split into one instance per CVE"});
      for (const auto& cve : cves) {
        ThreatInstance copy = t;
        copy.indicators = rest;
        copy.indicators.push_back(cve);
        out.push_back(std::move(copy));
      }
    }

    for (std::size_t i = 0; i < out.size(); ++i)
      out[i].id = incident.id + "#" + std::to_string(i + 1);

    if (out.empty())
      report.warnings.push_back({incident.id, "no threat indicators extracted"});
    return out;
  }

  // Populates metadata from the knowledge store; unresolvable fields stay
  // unknown and are listed in the report. KEV listing is authoritative for
  // exploitation status (KEV > vendor advisory > blog).
  EnrichedThreatInstance enrich(const ThreatInstance& instance, TriageReport& report) {
    EnrichedThreatInstance out;
    out.instance = instance;
    Metadata& m = out.metadata;
    auto note = [&](const std::string& msg) {
      report.enrichment_notes.push_back(instance.id + ": " + msg);
    };

    auto cve = instance.primary_cve();
    if (!cve) {
      note("no CVE id; metadata left unresolved");
      return out;
    }
    m.cve_id = *cve;

    UtcTime as_of = store_.config().as_of.value_or(
        UtcTime{std::numeric_limits<std::int64_t>::max() / 2});

    if (auto record = store_.lookup_cve(*cve)) {
      m.disclosure.chronology.push_back({"cve-published", record->published});
      if (record->published < record->last_modified)
        m.disclosure.chronology.push_back({"advisory-updated", record->last_modified});
    } else {
      note("CVE record unresolved in knowledge store");
    }

    m.attack_techniques = store_.lookup_techniques(*cve);
    if (m.attack_techniques.empty()) note("no ATT&CK technique mapping");

    std::string advisory_claim;
    if (auto ctx = store_.lookup_advisory_context(*cve)) {
      m.disclosure.channel = ctx->channel;
      m.disclosure.type = ctx->type;
      m.disclosure.patch_available = ctx->patch_available;
      m.affected_systems = ctx->affected_systems;
      advisory_claim = ctx->exploitation_claim;
    } else {
      note("no advisory context; disclosure fields unresolved");
    }

    if (auto kev = store_.lookup_kev(*cve)) {
      m.kev_listed = true;
      m.kev_date_added = kev->date_added;
    }

    if (m.disclosure.patch_available) {
      std::optional<UtcTime> first_patch;
      for (const auto& a : store_.source_actions(*cve))
        if (a.kind == ActionKind::patch && a.released &&
            (!first_patch || *a.released < *first_patch))
          first_patch = a.released;
      if (first_patch) m.disclosure.chronology.push_back({"patch-released", *first_patch});
    }

    try {
      if (auto epss = store_.lookup_epss(*cve, as_of))
        m.epss = EpssValue{epss->probability, epss->percentile, epss->snapshot_date};
      else
        note("no EPSS snapshot at or before as_of");
    } catch (const knowledge::NoSnapshotLoaded&) {
      note("EPSS snapshots not loaded");
    }

    bool poc_public = false;
    for (const auto& e : store_.query_exploit_events(*cve, {UtcTime{0}, as_of}))
      if (e.kind == EventKind::poc_released) poc_public = true;

    if (m.kev_listed) {
      m.exploitation_status = ExploitationStatus::confirmed_in_wild;
      if (advisory_claim == "none")
        note("advisory claims no exploitation but KEV lists the CVE; KEV is authoritative");
    } else if (advisory_claim == "in-wild") {
      m.exploitation_status = ExploitationStatus::confirmed_in_wild;
    } else if (poc_public) {
      m.exploitation_status = ExploitationStatus::poc_public;
    } else if (advisory_claim == "none") {
      m.exploitation_status = ExploitationStatus::no_evidence;
    } else {
      m.exploitation_status = ExploitationStatus::unknown;
      note("exploitation status unresolved");
    }
    return out;
  }

  // Processes incidents independently (optionally in parallel); output order
  // is deterministic (incident id, then instance index) regardless of
  // scheduling, and a failing incident never poisons the batch.
  std::pair<std::vector<EnrichedThreatInstance>, TriageReport> triage_batch(
      const std::vector<RawIncident>& incidents, int parallelism = 1) {
    struct PerIncident {
      std::string incident_id;
      std::vector<EnrichedThreatInstance> enriched;
      TriageReport report;
      std::optional<std::string> error;
    };

    auto work = [&](const RawIncident& incident) {
      PerIncident r;
      r.incident_id = incident.id;
      try {
        auto instances = separate_events(incident, r.report);
        for (const auto& t : instances) r.enriched.push_back(enrich(t, r.report));
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      return r;
    };

    std::vector<PerIncident> results(incidents.size());
    if (parallelism <= 1) {
      for (std::size_t i = 0; i < incidents.size(); ++i) results[i] = work(incidents[i]);
    } else {
      std::vector<std::future<PerIncident>> futures;
      futures.reserve(incidents.size());
      std::counting_semaphore<> slots(parallelism);
      for (const auto& incident : incidents) {
        slots.acquire();
        futures.push_back(std::async(std::launch::async, [&, incident] {
          auto r = work(incident);
          slots.release();
          return r;
        }));
      }
      for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
    }

    // Deterministic merge: by incident id, then instance index.
    std::stable_sort(results.begin(), results.end(),
                     [](const PerIncident& a, const PerIncident& b) {
                       return a.incident_id < b.incident_id;
                     });
    std::vector<EnrichedThreatInstance> out;
    TriageReport report;
    for (auto& r : results) {
      if (r.error) {
        report.failures.push_back({r.incident_id, *r.error});
        continue;
      }
      for (auto& e : r.enriched) out.push_back(std::move(e));
      for (auto& w : r.report.warnings) report.warnings.push_back(std::move(w));
      for (auto& f : r.report.failures) report.failures.push_back(std::move(f));
      for (auto& d : r.report.dropped_indicators)
        report.dropped_indicators.push_back(std::move(d));
      for (auto& n : r.report.enrichment_notes)
        report.enrichment_notes.push_back(std::move(n));
    }
    return {std::move(out), std::move(report)};
  }

 private:
  gateway::Gateway& gw_;
  knowledge::KnowledgeStore& store_;
};

}  // namespace threatrank::triage
