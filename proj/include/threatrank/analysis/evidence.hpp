#pragma once

#include <regex>
#include <set>
#include <string>
#include <vector>

#include "threatrank/core/types.hpp"

namespace threatrank::analysis {

// A text body evidence can be located in, with its provenance label.
struct EvidenceDoc {
  std::string text;
  std::string source;
};

namespace lexicon {

// Cue patterns per metric. The full regex match is the extracted span, so
// every span is verbatim-locatable in its document. Patterns are matched
// case-insensitively; continuation classes stop at punctuation.
struct Cue {
  const char* pattern;
  const char* hint;  // candidate value the cue argues for, by abbreviation
};

inline const std::vector<Cue>& cues(CvssMetric metric) {
  static const std::vector<Cue> av = {
      {R"((?:un)?authenticated remote attackers?)", "N"},
      {R"(remote(?:ly)? exploit\w*)", "N"},
      {R"(remote attackers?)", "N"},
      {R"(remote code execution)", "N"},
      {R"(crafted [\w-]+ (?:request|call|packet)s?)", "N"},
      {R"(network[- ]facing [\w ]{0,20}service)", "N"},
      {R"(over the network)", "N"},
      {R"(internet[- ]exposed)", "N"},
      {R"(adjacent network)", "A"},
      {R"(same (?:physical|logical) network)", "A"},
      {R"(bluetooth|wi-?fi range)", "A"},
      {R"(local(?:ly authenticated)? users?)", "L"},
      {R"(local attackers?)", "L"},
      {R"(local access)", "L"},
      {R"(local privilege escalation)", "L"},
      {R"(physical(?:ly)? (?:access|present|proximate)[\w ]{0,12})", "P"},
  };
  static const std::vector<Cue> ac = {
      {R"(race condition)", "H"},
      {R"(requires? [\w -]{0,24}(?:non-default|specific) (?:configuration|setting)s?)", "H"},
      {R"(registry key must be enabled)", "H"},
      {R"((?:man|adversary)[- ]in[- ]the[- ]middle position)", "H"},
      {R"(timing window)", "H"},
      {R"(requires? [\w ]{0,16}misconfigur\w+)", "H"},
      {R"(no (?:special|environmental) (?:conditions?|preconditions?))", "L"},
      {R"(default configurations?)", "L"},
      {R"(reliably exploit\w*)", "L"},
  };
  static const std::vector<Cue> pr = {
      {R"(unauthenticated(?: attackers?)?)", "N"},
      {R"(no authentication required)", "N"},
      {R"(without (?:any )?credentials)", "N"},
      {R"(pre-auth\w*)", "N"},
      {R"(authenticated (?:remote )?(?:attacker|user)s?)", "L"},
      {R"(any (?:basic|standard|low[- ]privileged) users?)", "L"},
      {R"(valid (?:user )?credentials)", "L"},
      {R"(api token)", "L"},
      {R"(administrator (?:credentials|privileges|access|account))", "H"},
      {R"(requires? (?:admin|root|system) (?:privileges|access))", "H"},
      {R"(privileged role)", "H"},
      {R"(console login)", "H"},
  };
  static const std::vector<Cue> ui = {
      {R"((?:victim|user) must open[^,.;\n]*)", "R"},
      {R"(requires? (?:a )?(?:victim|user) (?:to )?(?:open|click|visit|enable)[^,.;\n]*)", "R"},
      {R"(clicking a (?:malicious )?link)", "R"},
      {R"(malicious (?:attachment|document|file) [\w ]{0,16}opened)", "R"},
      {R"(phishing (?:e-?mail|message|campaign))", "R"},
      {R"(drive-by download)", "R"},
      {R"(social engineering)", "R"},
      {R"(user interaction(?: is)? (?:not |un)(?:needed|required))", "N"},
      {R"(without (?:any )?user interaction)", "N"},
      {R"(no user (?:interaction|action) (?:is )?(?:needed|required))", "N"},
  };
  // Scope has no dedicated workflow; classification is a boundary-crossing
  // cue lexicon with default Unchanged.
  static const std::vector<Cue> s = {
      {R"(sandbox escape)", "C"},
      {R"(crosses? (?:a )?security boundar(?:y|ies))", "C"},
      {R"((?:vm|container|hypervisor|guest[- ]to[- ]host) escape)", "C"},
      {R"((?:code )?execution as nt authority\\?(?:\\|/)?system)", "C"},
      {R"(execution as (?:nt authority|system|root) from a[\w ]{0,20}account)", "C"},
      {R"(gain(?:s|ing)? system privileges from [\w ]{0,24}user)", "C"},
      {R"(escapes? the browser sandbox)", "C"},
      {R"(affects? resources beyond [\w ]{0,24}component)", "C"},
  };
  static const std::vector<Cue> c = {
      {R"(information disclosure)", "H"},
      {R"(read (?:arbitrary|sensitive) (?:files?|memory|data))", "H"},
      {R"((?:data|credential) exfiltration)", "H"},
      {R"(complete (?:system )?takeover)", "H"},
      {R"(remote code execution[\w ,]{0,32})", "H"},
      {R"(arbitrary code execution)", "H"},
      {R"(may (?:allow|lead to)[\w ]{0,16}(?:exposure|disclosure))", "L"},
      {R"(limited (?:information|data) (?:exposure|disclosure))", "L"},
  };
  static const std::vector<Cue> i = {
      {R"(arbitrary code execution)", "H"},
      {R"(remote code execution[\w ,]{0,32})", "H"},
      {R"(modify (?:arbitrary|system) (?:files?|data|configuration))", "H"},
      {R"(tamper\w* with [\w ]{0,24})", "H"},
      {R"(install(?:s|ing)? (?:arbitrary )?programs)", "H"},
      {R"(complete (?:system )?takeover)", "H"},
      {R"(load(?:s|ing)? (?:a )?(?:malicious|arbitrary) dll[\w ]{0,24})", "H"},
      {R"(partial (?:data )?modification)", "L"},
  };
  static const std::vector<Cue> a = {
      {R"(denial of service)", "H"},
      {R"((?:system|service|host) crash\w*)", "H"},
      {R"(remote code execution[\w ,]{0,32})", "H"},
      {R"(complete (?:system|service) (?:shutdown|outage))", "H"},
      {R"(resource exhaustion)", "H"},
      {R"(complete (?:system )?takeover)", "H"},
      {R"(temporary (?:or partial )?(?:outage|disruption))", "L"},
  };
  switch (metric) {
    case CvssMetric::av: return av;
    case CvssMetric::ac: return ac;
    case CvssMetric::pr: return pr;
    case CvssMetric::ui: return ui;
    case CvssMetric::s: return s;
    case CvssMetric::c: return c;
    case CvssMetric::i: return i;
    case CvssMetric::a: return a;
  }
  return av;
}

}  // namespace lexicon

struct TaggedEvidence {
  EvidenceSpan span;
  std::string hint;  // value abbreviation the cue argues for
};

// Scans the documents with the metric's cue lexicon; each hit yields the
// matched text verbatim, tagged with its source. Duplicate (span, source)
// pairs collapse. Empty results are legitimate.
inline std::vector<TaggedEvidence> build_tagged_evidence(CvssMetric metric,
                                                         const std::vector<EvidenceDoc>& docs) {
  std::vector<TaggedEvidence> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& cue : lexicon::cues(metric)) {
    std::regex re(cue.pattern, std::regex::icase | std::regex::ECMAScript);
    for (const auto& doc : docs) {
      auto begin = std::sregex_iterator(doc.text.begin(), doc.text.end(), re);
      for (auto it = begin; it != std::sregex_iterator(); ++it) {
        std::string span = it->str();
        while (!span.empty() && (span.back() == ' ' || span.back() == '\n')) span.pop_back();
        if (span.empty()) continue;
        if (!seen.emplace(span, doc.source).second) continue;
        TaggedEvidence te;
        te.span = EvidenceSpan{span, doc.source, "offset:" + std::to_string(it->position())};
        te.hint = cue.hint;
        out.push_back(std::move(te));
      }
    }
  }
  return out;
}

// The documents an enriched instance contributes evidence from: its own
// textual fields plus any caller-provided context (e.g. the parent incident
// body or the NVD description).
inline std::vector<EvidenceDoc> default_docs(const EnrichedThreatInstance& t,
                                             const std::vector<EvidenceDoc>& extra = {}) {
  std::string fields = t.instance.impact;
  for (const auto& p : t.instance.attack_patterns) fields += ". " + p;
  if (t.instance.campaign) fields += ". " + *t.instance.campaign;
  for (const auto& c : t.instance.affected_components) fields += ". " + c;
  std::vector<EvidenceDoc> docs{{fields, "threat instance"}};
  for (const auto& d : extra) docs.push_back(d);
  return docs;
}

// Spec operation surface: the evidence set for one metric.
inline std::vector<EvidenceSpan> build_evidence_set(const EnrichedThreatInstance& t,
                                                    CvssMetric metric,
                                                    const std::vector<EvidenceDoc>& extra = {}) {
  std::vector<EvidenceSpan> out;
  for (auto& te : build_tagged_evidence(metric, default_docs(t, extra)))
    out.push_back(std::move(te.span));
  return out;
}

}  // namespace threatrank::analysis
