#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "threatrank/common/digest.hpp"
#include "threatrank/gateway/schemas.hpp"

namespace threatrank::gateway {

enum class TemplateId {
  disentangle,
  classify_av,
  classify_ac,
  classify_pr,
  classify_ui,
  classify_cia,
  forecast,
  mitigation_retrieve,
  mitigation_prioritize
};

inline std::string to_string(TemplateId t) {
  switch (t) {
    case TemplateId::disentangle: return "disentangle";
    case TemplateId::classify_av: return "metric-classify-av";
    case TemplateId::classify_ac: return "metric-classify-ac";
    case TemplateId::classify_pr: return "metric-classify-pr";
    case TemplateId::classify_ui: return "metric-classify-ui";
    case TemplateId::classify_cia: return "metric-classify-cia";
    case TemplateId::forecast: return "forecast";
    case TemplateId::mitigation_retrieve: return "mitigation-retrieve";
    case TemplateId::mitigation_prioritize: return "mitigation-prioritize";
  }
  return "?";
}

struct PromptTemplate {
  TemplateId id;
  std::string version;
  SchemaId response_schema;
  std::string system_text;
  std::string user_text;

  // Templates are versioned assets addressed by the digest of their body.
  std::string content_digest() const { return sha256_hex(system_text + "\x1e" + user_text); }
};

// Template bodies are authored assets. The numbered analyst rules and the
// per-metric guideline digests are part of the pipeline contract; the
// classification system texts summarize the scoring guideline each metric
// follows.
namespace template_text {

inline constexpr const char* kDisentangleSystem =
    "You are a cybersecurity analyst processing cyber threat intelligence reports. "
    "Incoming reports may describe several threats at once. Separate them into "
    "independent, structured threat instances. Follow these rules:\n"
    "1. Identify threat indicators: CVE identifiers, malware family names, IPs and "
    "domains, exploit techniques, affected products, and timestamps.\n"
    "2. Disentangle overlapping events: when several threats are described in one "
    "text, split them into independent threat instances, each covering exactly one "
    "vulnerability, malware family, or attack campaign.\n"
    "3. Preserve context: keep associated attributes such as vendor, affected "
    "systems, attack patterns, and source references with the instance they belong to.\n"
    "4. Be explicit and structured: respond with a JSON document holding one entry "
    "per disentangled threat instance.\n"
    "5. Do not invent information: use only details explicitly present in the input "
    "text.";

inline constexpr const char* kDisentangleUser =
    "The following report may describe multiple threats entangled together. "
    "Disentangle them into distinct structured threat instances.\n"
    "\n"
    "Source: {INCIDENT_SOURCE}\n"
    "\n"
    "Text:\n"
    "{RAW_INCIDENT_TEXT}\n"
    "\n"
    "Respond with JSON of the form {\"instances\": [{\"vendor\": string, "
    "\"affected_components\": [string], \"campaign\": string or null, \"impact\": "
    "string, \"attack_patterns\": [string], \"indicators\": [string]}]}. List CVE "
    "identifiers, addresses, domains and signatures under \"indicators\".";

inline constexpr const char* kClassifySystemAv =
    "You classify the CVSS v3.1 Attack Vector metric. Network means the flaw is "
    "exploitable across a routed network; Adjacent is limited to a shared physical "
    "or logical network segment; Local requires local access or a login session; "
    "Physical requires physically touching the device. Select the highest exposure "
    "level that the evidence explicitly supports, preferring protocol-backed spans "
    "over vague wording.";

inline constexpr const char* kClassifySystemAc =
    "You classify the CVSS v3.1 Attack Complexity metric. Complexity is Low when "
    "exploitation succeeds deterministically under default conditions, and High "
    "only when conditions outside the attacker's control, such as race windows or "
    "non-default configuration, are strictly necessary for success. Mark the "
    "'necessary' flag true only when the evidence shows the demanding condition is "
    "required on every feasible path.";

inline constexpr const char* kClassifySystemPr =
    "You classify the CVSS v3.1 Privileges Required metric: the minimum privileges "
    "the attacker must hold before exploitation starts. None means pre-auth or "
    "anonymous access suffices; Low means a basic authenticated user; High means "
    "administrative or equivalent privileged access. Exclude privileges gained "
    "during the exploit. When several paths exist, pick the least-privileged path "
    "the evidence explicitly supports.";

inline constexpr const char* kClassifySystemUi =
    "You classify the CVSS v3.1 User Interaction metric. Required applies only "
    "when an action by a legitimate user, such as opening a file or following a "
    "link, is a necessary condition for successful exploitation; otherwise None. "
    "Set 'necessary' true when user participation is strictly required.";

inline constexpr const char* kClassifySystemCia =
    "You classify one CVSS v3.1 impact metric ({IMPACT_NAME}). High requires "
    "credible, corroborated evidence of complete compromise of that property; "
    "ambiguous wording such as 'may allow exposure' downgrades to Low; no effect "
    "means None. Set 'confirmed' true when multiple authoritative sources agree.";

inline constexpr const char* kClassifyUser =
    "Classify the {METRIC} metric for the threat below.\n"
    "\n"
    "Threat: {INSTANCE_SUMMARY}\n"
    "\n"
    "Evidence spans (verbatim, with source):\n"
    "{EVIDENCE}\n"
    "\n"
    "Allowed values: {DOMAIN}\n"
    "\n"
    "Respond with JSON of the form {\"value\": string, \"rationale\": string citing "
    "at least one evidence span, \"confidence\": number in [0,1], \"necessary\": "
    "boolean (optional), \"confirmed\": boolean (optional)}.";

inline constexpr const char* kForecastSystem =
    "You are a threat analyst estimating near-term exploitation likelihood from a "
    "temporal narrative of exploitation events. Reason in three steps: (i) identify "
    "exploitation signals such as public proof-of-concept code or catalogued "
    "in-the-wild activity; (ii) estimate exposure and mitigation frictions such as "
    "prevalence, default configurations, and patch availability; (iii) judge "
    "adversary interest from advisories and campaign reporting.";

inline constexpr const char* kForecastUser =
    "Threat: {INSTANCE_SUMMARY}\n"
    "CVSS: {CVSS_VECTOR} (base score {BASE_SCORE})\n"
    "\n"
    "Exploitation events in the window {WINDOW}, oldest first, with gaps in days:\n"
    "{NARRATIVE}\n"
    "\n"
    "Estimate the probability that this threat is exploited in the wild within the "
    "next {HORIZON_DAYS} days. Respond with JSON of the form {\"probability\": "
    "number in [0,1], \"rationale\": string covering the three reasoning steps}.";

inline constexpr const char* kRetrieveSystem =
    "You are a cybersecurity mitigation analyst. Retrieve and normalize "
    "authoritative mitigation knowledge for the given threat. Source authority, "
    "highest first: vendor advisories and official patch bulletins; CISA KEV "
    "mitigation notes; NVD references; maintainer repositories or official project "
    "pages; trusted CERT advisories and vetted security blogs. Aggregate "
    "semantically equivalent entries, prefer vendor-issued entries, annotate "
    "superseded items, and harmonize all dates to ISO 8601.";

inline constexpr const char* kRetrieveUser =
    "Threat: {INSTANCE_SUMMARY}\n"
    "CVE: {CVE_ID}\n"
    "\n"
    "Actions already known from source databases:\n"
    "{KNOWN_ACTIONS}\n"
    "\n"
    "Propose additional configuration workarounds or detection guidance grounded "
    "in the threat description, and repeat any source actions that apply. Respond "
    "with JSON of the form {\"actions\": [{\"kind\": \"patch\"|\"workaround\"|"
    "\"mitigation-note\"|\"vendor-advisory\"|\"detection\", \"title\": string, "
    "\"vendor\": string, \"version_scope\": string, \"released\": ISO date "
    "(optional), \"side_effects\": string (optional), \"maturity\": "
    "\"ga\"|\"hotfix\"|\"beta\" (optional)}]}.";

inline constexpr const char* kPrioritizeSystem =
    "You are a vulnerability risk manager. The mitigation plan below is already "
    "ordered by risk with documented tie-breaking. Write one concise justification "
    "per entry citing its risk value, exploitation context, and the decisive "
    "tie-breaker. Do not reorder entries and do not add entries.";

inline constexpr const char* kPrioritizeUser =
    "Ordered plan entries:\n"
    "{PLAN_SUMMARY}\n"
    "\n"
    "Respond with JSON of the form {\"justifications\": [{\"target\": threat id, "
    "\"justification\": string}]}.";

}  // namespace template_text

inline const PromptTemplate& template_for(TemplateId id) {
  using namespace template_text;
  static const std::map<TemplateId, PromptTemplate> registry = {
      {TemplateId::disentangle,
       {TemplateId::disentangle, "1", SchemaId::disentangle, kDisentangleSystem,
        kDisentangleUser}},
      {TemplateId::classify_av,
       {TemplateId::classify_av, "1", SchemaId::metric_classification, kClassifySystemAv,
        kClassifyUser}},
      {TemplateId::classify_ac,
       {TemplateId::classify_ac, "1", SchemaId::metric_classification, kClassifySystemAc,
        kClassifyUser}},
      {TemplateId::classify_pr,
       {TemplateId::classify_pr, "1", SchemaId::metric_classification, kClassifySystemPr,
        kClassifyUser}},
      {TemplateId::classify_ui,
       {TemplateId::classify_ui, "1", SchemaId::metric_classification, kClassifySystemUi,
        kClassifyUser}},
      {TemplateId::classify_cia,
       {TemplateId::classify_cia, "1", SchemaId::metric_classification, kClassifySystemCia,
        kClassifyUser}},
      {TemplateId::forecast,
       {TemplateId::forecast, "1", SchemaId::forecast, kForecastSystem, kForecastUser}},
      {TemplateId::mitigation_retrieve,
       {TemplateId::mitigation_retrieve, "1", SchemaId::mitigation_retrieve, kRetrieveSystem,
        kRetrieveUser}},
      {TemplateId::mitigation_prioritize,
       {TemplateId::mitigation_prioritize, "1", SchemaId::mitigation_prioritize,
        kPrioritizeSystem, kPrioritizeUser}},
  };
  return registry.at(id);
}

}  // namespace threatrank::gateway
