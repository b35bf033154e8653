#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "threatrank/pipeline/pipeline.hpp"

// Self-contained demo workspace: two print-spooler incidents from mid-2021,
// offline knowledge fixtures, and stub gateway fixtures generated by
// replaying the production pipeline stage by stage (so fixture digests always
// match the prompts the pipeline renders).

namespace threatrank::demo {

namespace fs = std::filesystem;
using pipeline::Config;

inline const char* kIncident1Id = "inc-2021-0001";
inline const char* kIncident2Id = "inc-2021-0002";
inline const char* kCveLpe = "CVE-2021-1675";
inline const char* kCveRce = "CVE-2021-34527";

inline std::vector<RawIncident> demo_incidents() {
  RawIncident i1;
  i1.id = kIncident1Id;
  i1.source = "vendor advisory";
  i1.observed_at = parse_iso8601("2021-07-08T09:00:00Z");
  i1.text =
      "Microsoft has published guidance covering two distinct flaws in the Windows Print "
      "Spooler service that were reported together in July 2021. The first issue, tracked as "
      "CVE-2021-1675, lets a local user abuse improper access control checks to elevate "
      "privileges to SYSTEM, enabling complete system takeover; it has been observed in "
      "ransomware operator toolkits. The second issue, tracked as CVE-2021-34527 and known as "
      "PrintNightmare, lets an authenticated remote attacker send a crafted DCERPC request "
      "that forces the spooler to load a malicious DLL over SMB, resulting in remote code "
      "execution as NT AUTHORITY\\SYSTEM; APT groups use it for lateral movement. Both issues "
      "are reliably exploitable under default configurations and no user interaction is "
      "required. Proof-of-concept code for the remote variant circulated before the "
      "out-of-band update became available.";

  RawIncident i2;
  i2.id = kIncident2Id;
  i2.source = "vendor advisory";
  i2.observed_at = parse_iso8601("2021-07-12T14:30:00Z");
  i2.text =
      "A remote code execution flaw in the Windows Print Spooler service allows an "
      "authenticated remote attacker to load a DLL through a crafted DCERPC request over the "
      "MS-RPRN protocol, giving code execution as NT AUTHORITY\\SYSTEM on Windows 10, "
      "Windows 11 and Server editions. Microsoft maps this issue to CVE-2021-34527. "
      "Exploitation is reliable under default configurations and no user interaction is "
      "required. Administrators should apply the out-of-band update or disable the Print "
      "Spooler service where printing is not needed.";
  return {i1, i2};
}

// ---------------------------------------------------------------------------
// Authored stub responses
// ---------------------------------------------------------------------------

inline json disentangle_response(const std::string& incident_id) {
  if (incident_id == kIncident1Id) {
    return json{
        {"instances",
         json::array(
             {json{{"vendor", "Microsoft Windows"},
                   {"affected_components", json::array({"Print Spooler"})},
                   {"campaign", "observed in ransomware operator toolkits"},
                   {"impact", "local privilege escalation: local user can elevate privileges "
                              "to SYSTEM, enabling complete system takeover"},
                   {"attack_patterns",
                    json::array({"abuse improper access control checks",
                                 "reliably exploitable under default configurations"})},
                   {"indicators", json::array({kCveLpe})}},
              json{{"vendor", "Microsoft Windows 10, Windows 11, Server editions"},
                   {"affected_components", json::array({"Print Spooler"})},
                   {"campaign", "APT groups use it for lateral movement"},
                   {"impact", "remote code execution as NT AUTHORITY\\SYSTEM"},
                   {"attack_patterns",
                    json::array({"authenticated remote attacker sends a crafted DCERPC "
                                 "request",
                                 "forces the spooler to load a malicious DLL over SMB",
                                 "reliably exploitable under default configurations, no user "
                                 "interaction is required"})},
                   {"indicators", json::array({kCveRce})}}})}};
  }
  return json{
      {"instances",
       json::array({json{
           {"vendor", "Microsoft Windows 11"},
           {"affected_components", json::array({"Print Spooler"})},
           {"campaign", nullptr},
           {"impact", "remote code execution as NT AUTHORITY\\SYSTEM"},
           {"attack_patterns",
            json::array({"authenticated remote attacker loads a DLL through a crafted DCERPC "
                         "request over MS-RPRN",
                         "reliable under default configurations, no user interaction is "
                         "required"})},
           {"indicators", json::array({kCveRce})}}})}};
}

struct AuthoredDecision {
  std::string value;  // display name within the metric domain
  double confidence;
  bool necessary = false;
  bool confirmed = false;
};

inline AuthoredDecision authored_classification(const std::string& cve, CvssMetric metric) {
  const bool rce = cve == kCveRce;
  switch (metric) {
    case CvssMetric::av:
      return rce ? AuthoredDecision{"Network", 0.92}
                 : AuthoredDecision{"Local", 0.85};
    case CvssMetric::ac: return {"Low", 0.90};
    case CvssMetric::pr: return {"Low", 0.88};
    case CvssMetric::ui: return {"None", 0.88};
    case CvssMetric::c: return {"High", rce ? 0.93 : 0.90, false, true};
    case CvssMetric::i: return {"High", rce ? 0.93 : 0.90, false, true};
    case CvssMetric::a: return {"High", rce ? 0.87 : 0.84, false, true};
    default: return {"Unchanged", 0.5};
  }
}

inline json classification_response(const std::string& cve, CvssMetric metric,
                                    const std::vector<EvidenceSpan>& evidence) {
  auto d = authored_classification(cve, metric);
  std::string rationale = "decisive span: \"" + evidence.front().span + "\" (" +
                          evidence.front().source + ")";
  json out{{"value", d.value}, {"rationale", rationale}, {"confidence", d.confidence}};
  if (metric == CvssMetric::ac || metric == CvssMetric::ui) out["necessary"] = d.necessary;
  if (metric == CvssMetric::c || metric == CvssMetric::i || metric == CvssMetric::a)
    out["confirmed"] = d.confirmed;
  return out;
}

inline json forecast_response(const std::string& threat_id) {
  double p = 0.90;
  std::string signals = "public proof-of-concept code and confirmed in-the-wild activity";
  if (threat_id == std::string(kIncident1Id) + "#2") p = 0.93;
  else if (threat_id == std::string(kIncident2Id) + "#1") p = 0.91;
  else if (threat_id == std::string(kIncident1Id) + "#1") {
    p = 0.78;
    signals = "a public proof-of-concept and ransomware toolkit adoption";
  }
  return json{{"probability", p},
              {"rationale",
               "(i) exploitation signals: " + signals +
                   "; (ii) exposure and mitigation frictions: spooler enabled by default and "
                   "widely deployed, vendor update available; (iii) adversary interest: "
                   "sustained campaign reporting and catalogued exploitation"}};
}

inline json retrieve_response(const std::string& cve) {
  json actions = json::array();
  actions.push_back(json{{"kind", "workaround"},
                         {"title", "Disable the Print Spooler service"},
                         {"vendor", "Microsoft"},
                         {"version_scope", "all affected versions"},
                         {"side_effects", "printing is unavailable while disabled"},
                         {"maturity", "ga"}});
  actions.push_back(json{{"kind", "detection"},
                         {"title", "Alert on the spooler process loading unsigned DLLs"},
                         {"vendor", ""},
                         {"version_scope", "all affected versions"},
                         {"side_effects", ""}});
  if (cve == kCveRce) {
    actions.push_back(json{{"kind", "patch"},
                           {"title", "July 2021 out-of-band security update KB5004945"},
                           {"vendor", "Microsoft"},
                           {"version_scope", "Windows 10 and Server editions"},
                           {"released", "2021-07-06"},
                           {"maturity", "hotfix"}});
  }
  return json{{"actions", actions}};
}

inline json prioritize_response(const PrioritizedPlan& plan) {
  json out = json::array();
  for (const auto& e : plan.entries) {
    char risk_buf[32];
    std::snprintf(risk_buf, sizeof(risk_buf), "%.2f", e.risk);
    std::string text = std::string("Risk ") + risk_buf +
                       " places this threat at this rank; exploitation is confirmed in the "
                       "wild and a vendor remediation path exists. Decisive factor: " +
                       e.decisive_tiebreaker + ".";
    out.push_back(json{{"target", e.threat_id}, {"justification", text}});
  }
  return json{{"justifications", out}};
}

// ---------------------------------------------------------------------------
// Knowledge fixtures
// ---------------------------------------------------------------------------

inline void write_knowledge_fixtures(const fs::path& dir) {
  auto write = [&](const fs::path& rel, const json& doc) {
    fs::create_directories((dir / rel).parent_path());
    std::ofstream out(dir / rel);
    out << doc.dump(2) << "\n";
  };

  write("kev.json",
        json{{"title", "Known Exploited Vulnerabilities Catalog"},
             {"vulnerabilities",
              json::array({json{{"cveID", kCveRce},
                                {"vulnerabilityName",
                                 "Microsoft Windows Print Spooler Remote Code Execution"},
                                {"dateAdded", "2021-11-03"},
                                {"dueDate", "2021-11-17"},
                                {"notes", "Apply updates per vendor instructions."}}})}});

  {
    fs::create_directories(dir / "epss");
    std::ofstream out(dir / "epss" / "epss_scores-2021-11-15.csv");
    out << "#model_version:v2021.09.15,score_date:2021-11-15\n";
    out << "cve,epss,percentile\n";
    out << "CVE-2021-34527,0.974,0.999\n";
    out << "CVE-2021-1675,0.921,0.996\n";
  }

  write(fs::path("nvd") / (std::string(kCveRce) + ".json"),
        json{{"vulnerabilities",
              json::array({json{
                  {"cve",
                   json{{"id", kCveRce},
                        {"published", "2021-07-02T22:15:00Z"},
                        {"lastModified", "2021-07-08T16:00:00Z"},
                        {"vulnStatus", "Analyzed"},
                        {"descriptions",
                         json::array({json{
                             {"lang", "en"},
                             {"value",
                              "Windows Print Spooler remote code execution vulnerability. An "
                              "authenticated remote attacker can send a crafted DCERPC request "
                              "that forces the spooler service to load a malicious DLL, giving "
                              "code execution as NT AUTHORITY\\SYSTEM. Exploitation is reliable "
                              "under default configurations and no user interaction is "
                              "required."}}})},
                        {"references",
                         json::array({json{{"url",
                                            "https://msrc.microsoft.com/update-guide/"
                                            "vulnerability/CVE-2021-34527"}}})},
                        {"metrics",
                         json{{"cvssMetricV31",
                               json::array({json{{"cvssData",
                                                  json{{"vectorString",
                                                        "CVSS:3.1/AV:N/AC:L/PR:L/UI:N/S:U/"
                                                        "C:H/I:H/A:H"},
                                                       {"baseScore", 8.8}}}}})}}}}}}})}});

  write(fs::path("nvd") / (std::string(kCveLpe) + ".json"),
        json{{"vulnerabilities",
              json::array({json{
                  {"cve",
                   json{{"id", kCveLpe},
                        {"published", "2021-06-08T23:15:00Z"},
                        {"lastModified", "2021-07-02T00:00:00Z"},
                        {"vulnStatus", "Analyzed"},
                        {"descriptions",
                         json::array({json{
                             {"lang", "en"},
                             {"value",
                              "Windows Print Spooler elevation of privilege vulnerability. A "
                              "local user can abuse improper access control checks to elevate "
                              "privileges to SYSTEM, enabling complete system takeover. "
                              "Exploitation is reliable under default configurations and no "
                              "user interaction is required."}}})},
                        {"references",
                         json::array({json{{"url",
                                            "https://msrc.microsoft.com/update-guide/"
                                            "vulnerability/CVE-2021-1675"}}})},
                        {"metrics",
                         json{{"cvssMetricV31",
                               json::array({json{{"cvssData",
                                                  json{{"vectorString",
                                                        "CVSS:3.1/AV:N/AC:L/PR:L/UI:N/S:U/"
                                                        "C:H/I:H/A:H"},
                                                       {"baseScore", 8.8}}}}})}}}}}}})}});

  write("exploitdb.json",
        json::array(
            {json{{"cve_id", kCveRce},
                  {"date", "2021-06-29"},
                  {"title", "print spooler remote DLL loading proof of concept"},
                  {"source", "exploit-db"}},
             json{{"cve_id", kCveRce},
                  {"date", "2021-06-29"},
                  {"title", "mirrored proof of concept repository"},
                  {"source", "github"}},
             json{{"cve_id", kCveLpe},
                  {"date", "2021-07-01"},
                  {"title", "local privilege escalation proof of concept"},
                  {"source", "exploit-db"}}}));

  write("advisories.json",
        json::array(
            {json{{"cve_id", kCveRce}, {"date", "2021-07-02"}, {"kind", "cve-published"},
                  {"detail", "CVE record published"}, {"source", "nvd"}},
             json{{"cve_id", kCveRce}, {"date", "2021-07-06"}, {"kind", "advisory-updated"},
                  {"detail", "out-of-band security update released"},
                  {"source", "vendor advisory"}},
             json{{"cve_id", kCveRce}, {"date", "2021-07-09"}, {"kind", "in-wild-observed"},
                  {"detail", "active exploitation confirmed"}, {"source", "vendor advisory"}},
             json{{"cve_id", kCveLpe}, {"date", "2021-06-08"}, {"kind", "cve-published"},
                  {"detail", "CVE record published"}, {"source", "nvd"}},
             json{{"cve_id", kCveLpe}, {"date", "2021-06-08"}, {"kind", "advisory-updated"},
                  {"detail", "monthly security update released"},
                  {"source", "vendor advisory"}},
             json{{"cve_id", kCveLpe}, {"date", "2021-07-12"}, {"kind", "in-wild-observed"},
                  {"detail", "exploitation observed in ransomware intrusions"},
                  {"source", "vendor advisory"}}}));

  write("advisory_context.json",
        json{{kCveRce,
              json{{"channel", "vendor advisory"},
                   {"type", "coordinated"},
                   {"patch_available", true},
                   {"affected_systems",
                    json::array({json{{"vendor", "Microsoft"},
                                      {"product", "Windows"},
                                      {"version_range", "10, 11 and Server editions"}}})},
                   {"exploitation_claim", "in-wild"}}},
             {kCveLpe,
              json{{"channel", "vendor advisory"},
                   {"type", "coordinated"},
                   {"patch_available", true},
                   {"affected_systems",
                    json::array({json{{"vendor", "Microsoft"},
                                      {"product", "Windows"},
                                      {"version_range", "all supported versions"}}})},
                   {"exploitation_claim", "in-wild"}}}});

  write("attack_map.json", json{{kCveRce, json::array({"T1210", "T1068"})},
                                {kCveLpe, json::array({"T1068"})}});

  write(fs::path("mitigations") / (std::string(kCveRce) + ".json"),
        json::array(
            {json{{"kind", "patch"},
                  {"title", "July 2021 out-of-band security update KB5004945"},
                  {"vendor", "Microsoft"},
                  {"version_scope", "Windows 10 and Server editions"},
                  {"released", "2021-07-06"},
                  {"maturity", "hotfix"},
                  {"authority", "vendor"},
                  {"source", "vendor advisory"},
                  {"side_effects", "may affect some label printers using Point and Print"},
                  {"complexity", "simple"}},
             json{{"kind", "patch"},
                  {"title", "July 2021 cumulative update KB5004237"},
                  {"vendor", "Microsoft"},
                  {"version_scope", "Windows 10 and Server editions"},
                  {"released", "2021-07-13"},
                  {"maturity", "ga"},
                  {"authority", "vendor"},
                  {"source", "vendor advisory"},
                  {"supersedes_ref",
                   json{{"title", "July 2021 out-of-band security update KB5004945"},
                        {"vendor", "Microsoft"},
                        {"version_scope", "Windows 10 and Server editions"}}},
                  {"complexity", "simple"}},
             json{{"kind", "workaround"},
                  {"title", "Disable the Print Spooler service"},
                  {"vendor", "Microsoft"},
                  {"version_scope", "all affected versions"},
                  {"authority", "vendor"},
                  {"source", "vendor advisory"},
                  {"side_effects", "printing is unavailable while disabled"},
                  {"complexity", "simple"}},
             json{{"kind", "vendor-advisory"},
                  {"title", "MSRC guidance for CVE-2021-34527"},
                  {"vendor", "Microsoft"},
                  {"version_scope", "all affected versions"},
                  {"released", "2021-07-01"},
                  {"authority", "vendor"},
                  {"source", "vendor advisory"}},
             json{{"kind", "detection"},
                  {"title", "Monitor the spooler service for unexpected DLL loads"},
                  {"vendor", ""},
                  {"version_scope", "all affected versions"},
                  {"authority", "cert-blog"},
                  {"source", "security blog"},
                  {"complexity", "moderate"}}}));

  write(fs::path("mitigations") / (std::string(kCveLpe) + ".json"),
        json::array(
            {json{{"kind", "patch"},
                  {"title", "June 2021 security update KB5003635"},
                  {"vendor", "Microsoft"},
                  {"version_scope", "Windows 10 and Server editions"},
                  {"released", "2021-06-08"},
                  {"maturity", "ga"},
                  {"authority", "vendor"},
                  {"source", "vendor advisory"},
                  {"complexity", "simple"}},
             json{{"kind", "workaround"},
                  {"title", "Disable the Print Spooler service"},
                  {"vendor", "Microsoft"},
                  {"version_scope", "all affected versions"},
                  {"authority", "vendor"},
                  {"source", "vendor advisory"},
                  {"side_effects", "printing is unavailable while disabled"},
                  {"complexity", "simple"}}}));
}

// ---------------------------------------------------------------------------
// Demo workspace
// ---------------------------------------------------------------------------

inline fs::path write_config(const fs::path& root) {
  json cfg{{"backend", "stub"},
           {"offline", true},
           {"incidents", "incidents.jsonl"},
           {"fixture_dir", "fixtures/knowledge"},
           {"gateway_fixture_dir", "fixtures/gateway"},
           {"cache_dir", "cache"},
           {"output_dir", "out"},
           {"as_of", "2021-12-01T00:00:00Z"},
           {"horizon_days", 30},
           {"window_days", 365},
           {"seed", 42},
           {"parallelism", 1},
           {"phase_length_days", 7},
           {"base_rate", 0.02},
           {"narrate_plan", true},
           {"eval_dataset", "eval_dataset.json"},
           {"assets", json{{"default", json{{"exposure", 1.0}, {"criticality", 1.0}}}}}};
  fs::create_directories(root);
  std::ofstream out(root / "config.json");
  out << cfg.dump(2) << "\n";
  return root / "config.json";
}

inline void write_incidents(const fs::path& root) {
  fs::create_directories(root);
  std::ofstream out(root / "incidents.jsonl");
  for (const auto& i : demo_incidents()) out << to_json(i).dump() << "\n";
}

// Generates the gateway fixtures by replaying the pipeline against the
// knowledge fixtures: each stage runs with the production code after its
// prompts' fixtures are in place, so digests always line up.
inline void write_gateway_fixtures(const fs::path& root, const Config& cfg) {
  const fs::path gdir = root / "fixtures" / "gateway";
  Config boot = cfg;
  boot.output_dir = root / "bootstrap";
  auto rt = pipeline::make_runtime(boot);

  // Stage 1: disentanglement responses.
  for (const auto& incident : demo_incidents()) {
    auto prompt = gateway::render(gateway::TemplateId::disentangle,
                                  {{"INCIDENT_SOURCE", incident.source},
                                   {"RAW_INCIDENT_TEXT", incident.text}});
    gateway::write_stub_fixture(gdir, prompt, disentangle_response(incident.id));
  }
  pipeline::run_triage(rt);

  // Stage 2: per-metric classification responses, one per evidence group.
  auto instances_doc =
      pipeline::read_json_or_fail(boot.output_dir / "triage" / "instances.json", "demo");
  auto incidents = pipeline::incident_index(boot);
  for (const auto& ej : instances_doc) {
    auto t = enriched_from_json(ej);
    auto cve = t.instance.primary_cve().value_or("");
    auto docs = analysis::default_docs(t, pipeline::context_docs(rt, t, incidents));
    for (auto metric : kAllMetrics) {
      if (metric == CvssMetric::s) continue;  // rule-based, no gateway call
      auto tagged = analysis::build_tagged_evidence(metric, docs);
      if (tagged.empty()) continue;
      std::map<std::string, std::vector<EvidenceSpan>> groups;
      for (auto& te : tagged) groups[te.span.source].push_back(te.span);
      for (auto& [source, ev] : groups) {
        auto prompt = analysis::classify_prompt(ev, metric, t);
        gateway::write_stub_fixture(gdir, prompt, classification_response(cve, metric, ev));
      }
    }
  }
  pipeline::run_assess(rt);

  // Stage 3: forecast responses.
  auto assess_doc =
      pipeline::read_json_or_fail(boot.output_dir / "assess" / "assessments.json", "demo");
  std::map<std::string, json> assessments;
  for (const auto& row : assess_doc)
    assessments[row.at("threat_id").get<std::string>()] = row.at("assessment");
  UtcTime as_of = *boot.as_of;
  for (const auto& ej : instances_doc) {
    auto t = enriched_from_json(ej);
    auto assessment = pipeline::assessment_from_json(assessments.at(t.instance.id));
    auto narrative = exploitation::build_narrative(
        *rt.store, t, {as_of.plus_days(-boot.window_days), as_of});
    auto prompt = exploitation::forecast_prompt(t, assessment, narrative, boot.horizon_days);
    gateway::write_stub_fixture(gdir, prompt, forecast_response(t.instance.id));
  }
  pipeline::run_forecast(rt);

  // Stage 4: retrieval responses, then the plan narration.
  for (const auto& ej : instances_doc) {
    auto t = enriched_from_json(ej);
    auto cve = t.instance.primary_cve().value_or("");
    auto known = rt.store->source_actions(cve);
    auto prompt = mitigation::retrieval_prompt(t, known);
    gateway::write_stub_fixture(gdir, prompt, retrieve_response(cve));
  }
  mitigation::RetrievalLog log;
  auto inputs = pipeline::build_plan_inputs(rt, log);
  auto plan = mitigation::prioritize(inputs);
  gateway::write_stub_fixture(gdir, mitigation::plan_prompt(plan), prioritize_response(plan));

  // Labeled evaluation dataset: assessed vectors against the official NVD
  // vectors, the authored forecasts against the EPSS references, the plan
  // order for the ranking metrics, and the trend/window protocols.
  auto forecast_doc =
      pipeline::read_json_or_fail(boot.output_dir / "forecast" / "forecasts.json", "demo");
  json static_rows = json::array();
  json forecast_rows = json::array();
  json sweep_cases = json::array();
  for (const auto& ej : instances_doc) {
    auto t = enriched_from_json(ej);
    auto cve = t.instance.primary_cve().value_or("");
    auto record = rt.store->lookup_cve(cve);
    if (!record || !record->cvss_vector) continue;
    auto official = serialize_cvss_vector(parse_cvss_vector(*record->cvss_vector));
    const auto& assessment_json = assessments.at(t.instance.id);
    static_rows.push_back(json{{"id", t.instance.id},
                               {"predicted_vector", assessment_json.at("vector")},
                               {"official_vector", official}});
    auto epss = rt.store->lookup_epss(cve, as_of);
    for (const auto& row : forecast_doc) {
      if (row.at("threat_id") != t.instance.id) continue;
      forecast_rows.push_back(json{{"id", t.instance.id},
                                   {"predicted", row.at("forecast").at("probability")},
                                   {"reference", epss ? epss->probability : 0.0},
                                   {"group", "all"}});
    }
    if (t.instance.id == std::string(kIncident1Id) + "#2") {
      sweep_cases.push_back(json{{"threat", ej},
                                 {"assessment", assessment_json},
                                 {"reference", epss ? epss->probability : 0.0}});
    }
  }
  json ranking = json::array();
  {
    json order = json::array(), relevance = json::object();
    double grade = static_cast<double>(plan.entries.size());
    for (const auto& e : plan.entries) {
      order.push_back(e.threat_id);
      relevance[e.threat_id] = grade--;
    }
    ranking.push_back(json{{"name", "demo-plan"},
                           {"predicted_order", order},
                           {"reference_order", order},
                           {"relevance", relevance}});
  }
  json dataset{{"static", static_rows},
               {"forecast", forecast_rows},
               {"ranking", ranking},
               {"trend_protocol", json{{"seeds", 50}}},
               {"window_sweep",
                json{{"windows_days", json::array({182.5, 365.0, 730.0, 1095.0})},
                     {"cases", sweep_cases}}}};
  {
    std::ofstream out(root / "eval_dataset.json");
    out << dataset.dump(2) << "\n";
  }

  fs::remove_all(boot.output_dir);
}

// Writes the full demo workspace and returns the config path.
inline fs::path write_demo(const fs::path& root) {
  write_incidents(root);
  write_knowledge_fixtures(root / "fixtures" / "knowledge");
  auto config_path = write_config(root);
  auto cfg = Config::load(config_path);
  write_gateway_fixtures(root, cfg);
  fs::remove_all(root / "cache");  // bootstrap cache; runs repopulate it
  return config_path;
}

}  // namespace threatrank::demo
