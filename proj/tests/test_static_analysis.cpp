#include <doctest.h>

#include <algorithm>
#include <random>

#include "threatrank/analysis/assess.hpp"
#include "threatrank/analysis/evidence.hpp"

using namespace threatrank;
using namespace threatrank::analysis;

namespace {

EnrichedThreatInstance spooler_rce_instance() {
  EnrichedThreatInstance e;
  e.instance.id = "t#1";
  e.instance.parent_incident = "t";
  e.instance.vendor = "Microsoft Windows 11";
  e.instance.affected_components = {"Print Spooler"};
  e.instance.impact = "remote code execution as NT AUTHORITY\\SYSTEM";
  e.instance.attack_patterns = {
      "an authenticated remote attacker sends a crafted DCERPC request",
      "forces the spooler to load a malicious DLL over SMB"};
  e.instance.indicators = {"CVE-2021-34527"};
  e.metadata.cve_id = "CVE-2021-34527";
  return e;
}

bool has_span(const std::vector<EvidenceSpan>& spans, const std::string& needle) {
  return std::any_of(spans.begin(), spans.end(),
                     [&](const EvidenceSpan& s) { return s.span == needle; });
}

MetricDecision candidate(CvssMetric metric, const std::string& value, const std::string& source,
                         std::optional<bool> necessary = std::nullopt,
                         std::optional<bool> confirmed = std::nullopt) {
  MetricDecision d;
  d.metric = metric;
  d.value = value;
  d.evidence = {{"span for " + value, source, std::nullopt}};
  d.rationale = "cites span for " + value;
  d.confidence = 0.8;
  d.necessary = necessary;
  d.confirmed = confirmed;
  return d;
}

}  // namespace

TEST_SUITE("evidence construction") {
  TEST_CASE("AV evidence for a spooler RCE carries the remote-protocol spans") {
    auto t = spooler_rce_instance();
    auto spans = build_evidence_set(t, CvssMetric::av);
    CHECK(has_span(spans, "authenticated remote attacker"));
    CHECK(has_span(spans, "crafted DCERPC request"));
    for (const auto& s : spans) CHECK(s.source == "threat instance");
  }

  TEST_CASE("no auth language yields an empty PR evidence set") {
    EnrichedThreatInstance e;
    e.instance.id = "t#1";
    e.instance.parent_incident = "t";
    e.instance.impact = "service crash on malformed input";
    CHECK(build_evidence_set(e, CvssMetric::pr).empty());
  }

  TEST_CASE("UI evidence extracts the victim-must-open span verbatim") {
    EnrichedThreatInstance e;
    e.instance.id = "t#1";
    e.instance.parent_incident = "t";
    e.instance.impact = "arbitrary code execution in Office";
    e.instance.attack_patterns = {
        "the victim must open a malicious RTF document delivered by mail"};
    auto spans = build_evidence_set(e, CvssMetric::ui);
    CHECK(has_span(spans, "victim must open a malicious RTF document delivered by mail"));
  }

  TEST_CASE("spans are verbatim-locatable in their documents") {
    auto t = spooler_rce_instance();
    std::vector<EvidenceDoc> extra{{"An internet-exposed service with a public proof of "
                                    "concept; no user interaction is required.",
                                    "vendor advisory"}};
    for (auto metric : kAllMetrics) {
      auto docs = default_docs(t, extra);
      for (const auto& span : build_evidence_set(t, metric, extra)) {
        bool located = false;
        for (const auto& doc : docs) {
          auto lower = [](std::string s) {
            std::transform(s.begin(), s.end(), s.begin(), ::tolower);
            return s;
          };
          if (lower(doc.text).find(lower(span.span)) != std::string::npos) located = true;
        }
        INFO("span: ", span.span);
        CHECK(located);
      }
    }
  }
}

TEST_SUITE("conflict resolution") {
  TEST_CASE("AV picks the highest explicitly supported exposure") {
    auto d = resolve_conflicts({candidate(CvssMetric::av, "L", "blog"),
                                candidate(CvssMetric::av, "N", "vendor advisory")},
                               CvssMetric::av);
    CHECK(d.value == "N");
    CHECK(d.evidence.size() == 2);  // merged
    CHECK(d.rationale.find("discarded alternative") != std::string::npos);
    CHECK(d.rationale.find("Local") != std::string::npos);
  }

  TEST_CASE("AC elevates to High only when the condition is necessary") {
    auto low = resolve_conflicts({candidate(CvssMetric::ac, "L", "advisory"),
                                  candidate(CvssMetric::ac, "H", "blog", false)},
                                 CvssMetric::ac);
    CHECK(low.value == "L");
    auto high = resolve_conflicts({candidate(CvssMetric::ac, "L", "advisory"),
                                   candidate(CvssMetric::ac, "H", "blog", true)},
                                  CvssMetric::ac);
    CHECK(high.value == "H");
  }

  TEST_CASE("PR picks the minimum privileges") {
    auto d = resolve_conflicts({candidate(CvssMetric::pr, "H", "blog"),
                                candidate(CvssMetric::pr, "L", "advisory"),
                                candidate(CvssMetric::pr, "N", "writeup")},
                               CvssMetric::pr);
    CHECK(d.value == "N");
  }

  TEST_CASE("UI requires necessity for Required") {
    auto none = resolve_conflicts({candidate(CvssMetric::ui, "R", "blog", false),
                                   candidate(CvssMetric::ui, "N", "advisory")},
                                  CvssMetric::ui);
    CHECK(none.value == "N");
    auto required = resolve_conflicts({candidate(CvssMetric::ui, "R", "blog", true),
                                       candidate(CvssMetric::ui, "N", "advisory")},
                                      CvssMetric::ui);
    CHECK(required.value == "R");
  }

  TEST_CASE("impact metrics downgrade to Low unless confirmed") {
    auto low = resolve_conflicts({candidate(CvssMetric::c, "H", "blog"),
                                  candidate(CvssMetric::c, "L", "advisory")},
                                 CvssMetric::c);
    CHECK(low.value == "L");
    CHECK(low.rationale.find("discarded alternative") != std::string::npos);
    // unconfirmed High against None: downgraded even with no explicit Low
    auto downgraded = resolve_conflicts({candidate(CvssMetric::c, "H", "blog"),
                                         candidate(CvssMetric::c, "N", "advisory")},
                                        CvssMetric::c);
    CHECK(downgraded.value == "L");
    CHECK(downgraded.rationale.find("downgraded") != std::string::npos);
    auto confirmed = resolve_conflicts(
        {candidate(CvssMetric::c, "H", "blog", std::nullopt, true),
         candidate(CvssMetric::c, "L", "advisory")},
        CvssMetric::c);
    CHECK(confirmed.value == "H");
    auto outvoted = resolve_conflicts({candidate(CvssMetric::c, "H", "blog"),
                                       candidate(CvssMetric::c, "H", "advisory"),
                                       candidate(CvssMetric::c, "L", "forum")},
                                      CvssMetric::c);
    CHECK(outvoted.value == "H");  // two agreeing High candidates corroborate
  }

  TEST_CASE("a single candidate is returned unchanged") {
    auto c = candidate(CvssMetric::av, "A", "advisory");
    auto d = resolve_conflicts({c}, CvssMetric::av);
    CHECK(d.value == c.value);
    CHECK(d.rationale == c.rationale);
    CHECK(d.evidence.size() == c.evidence.size());
  }

  TEST_CASE("resolution is order-independent") {
    std::mt19937_64 rng(3);
    std::vector<std::vector<MetricDecision>> cases = {
        {candidate(CvssMetric::av, "L", "a"), candidate(CvssMetric::av, "N", "b"),
         candidate(CvssMetric::av, "P", "c")},
        {candidate(CvssMetric::ac, "L", "a"), candidate(CvssMetric::ac, "H", "b", true)},
        {candidate(CvssMetric::pr, "H", "a"), candidate(CvssMetric::pr, "L", "b")},
        {candidate(CvssMetric::ui, "R", "a", false), candidate(CvssMetric::ui, "N", "b")},
        {candidate(CvssMetric::c, "H", "a"), candidate(CvssMetric::c, "L", "b"),
         candidate(CvssMetric::c, "H", "c")},
    };
    std::vector<CvssMetric> metrics = {CvssMetric::av, CvssMetric::ac, CvssMetric::pr,
                                       CvssMetric::ui, CvssMetric::c};
    for (std::size_t i = 0; i < cases.size(); ++i) {
      auto baseline = resolve_conflicts(cases[i], metrics[i]).value;
      for (int shuffle = 0; shuffle < 10; ++shuffle) {
        auto permuted = cases[i];
        std::shuffle(permuted.begin(), permuted.end(), rng);
        CHECK(resolve_conflicts(permuted, metrics[i]).value == baseline);
      }
    }
  }
}

TEST_SUITE("metric classification") {
  TEST_CASE("empty evidence applies the declared default, flagged") {
    auto backend = std::make_shared<gateway::ScriptedBackend>();
    gateway::Gateway gw(backend);
    StaticAnalyzer analyzer(gw);
    auto t = spooler_rce_instance();
    auto d = analyzer.classify_metric({}, CvssMetric::av, t);
    CHECK(d.value == "L");  // least exposure
    CHECK(d.defaulted);
    CHECK(d.evidence.empty());
    CHECK(analyzer.classify_metric({}, CvssMetric::ac, t).value == "H");
    CHECK(analyzer.classify_metric({}, CvssMetric::pr, t).value == "H");
    CHECK(analyzer.classify_metric({}, CvssMetric::ui, t).value == "R");
    CHECK(analyzer.classify_metric({}, CvssMetric::c, t).value == "N");
  }

  TEST_CASE("a required-interaction document classifies UI as Required") {
    EnrichedThreatInstance t;
    t.instance.id = "office#1";
    t.instance.parent_incident = "office";
    t.instance.vendor = "Microsoft Office";
    t.instance.impact = "arbitrary code execution";
    t.instance.attack_patterns = {"victim must open a malicious RTF document"};
    auto evidence = build_evidence_set(t, CvssMetric::ui);
    REQUIRE(!evidence.empty());

    auto backend = std::make_shared<gateway::ScriptedBackend>();
    backend->set(classify_prompt(evidence, CvssMetric::ui, t).digest(),
                 json{{"value", "Required"},
                      {"rationale", "decisive span: \"" + evidence.front().span + "\""},
                      {"confidence", 0.9},
                      {"necessary", true}}.dump());
    gateway::Gateway gw(backend);
    StaticAnalyzer analyzer(gw);
    auto d = analyzer.classify_metric(evidence, CvssMetric::ui, t);
    CHECK(d.value == "R");
    CHECK(!d.defaulted);
    CHECK(d.necessary == true);
    CHECK(d.rationale.find(evidence.front().span) != std::string::npos);
  }

  TEST_CASE("gateway failure falls back to the default with a flag") {
    auto backend = std::make_shared<gateway::ScriptedBackend>();  // nothing scripted
    gateway::Gateway gw(backend);
    StaticAnalyzer analyzer(gw);
    auto t = spooler_rce_instance();
    auto evidence = build_evidence_set(t, CvssMetric::av);
    REQUIRE(!evidence.empty());
    auto d = analyzer.classify_metric(evidence, CvssMetric::av, t);
    CHECK(d.value == "L");
    CHECK(d.defaulted);
    CHECK(d.rationale.find("gateway failure") != std::string::npos);
  }
}

TEST_SUITE("static assessment") {
  TEST_CASE("zero evidence anywhere yields the all-default vector, flagged, scored") {
    EnrichedThreatInstance e;
    e.instance.id = "t#1";
    e.instance.parent_incident = "t";
    e.instance.impact = "unspecified problem";
    auto backend = std::make_shared<gateway::ScriptedBackend>();
    gateway::Gateway gw(backend);
    StaticAnalyzer analyzer(gw);
    auto a = analyzer.assess_static(e);
    CHECK(serialize_cvss_vector(a.vector) == "AV:L/AC:H/PR:H/UI:R/S:U/C:N/I:N/A:N");
    CHECK(a.base_score == 0.0);
    CHECK(a.rating == cvss::Rating::none);
    for (const auto& d : a.per_metric_decisions) CHECK(d.defaulted);
  }

  TEST_CASE("gateway failure falls back to flagged defaults") {
    auto t = spooler_rce_instance();
    auto backend = std::make_shared<gateway::ScriptedBackend>();  // no scripts: every call fails
    gateway::Gateway gw(backend);
    StaticAnalyzer analyzer(gw);
    auto a = analyzer.assess_static(t);
    // evidence existed, the gateway failed, defaults applied and flagged
    for (const auto& d : a.per_metric_decisions) {
      if (d.metric == CvssMetric::s) continue;  // rule-based, evidence present
      CHECK(d.defaulted);
    }
    CHECK(a.base_score == cvss::base_score(a.vector).base);
  }

  TEST_CASE("scripted classifications produce the spooler vector with provenance") {
    auto t = spooler_rce_instance();
    auto backend = std::make_shared<gateway::ScriptedBackend>();
    gateway::Gateway gw(backend);

    auto docs = default_docs(t, {});
    auto script_metric = [&](CvssMetric metric, const std::string& value) {
      auto tagged = build_tagged_evidence(metric, docs);
      REQUIRE(!tagged.empty());
      std::map<std::string, std::vector<EvidenceSpan>> groups;
      for (auto& te : tagged) groups[te.span.source].push_back(te.span);
      for (auto& [source, ev] : groups) {
        json resp{{"value", value},
                  {"rationale", "decisive span: \"" + ev.front().span + "\""},
                  {"confidence", 0.9}};
        if (metric == CvssMetric::c || metric == CvssMetric::i || metric == CvssMetric::a)
          resp["confirmed"] = true;
        backend->set(classify_prompt(ev, metric, t).digest(), resp.dump());
      }
    };
    script_metric(CvssMetric::av, "Network");
    script_metric(CvssMetric::pr, "Low");
    script_metric(CvssMetric::c, "High");
    script_metric(CvssMetric::i, "High");
    script_metric(CvssMetric::a, "High");
    // no AC / UI evidence in this instance: defaults apply (AC=H, UI=R)

    StaticAnalyzer analyzer(gw);
    auto a = analyzer.assess_static(t);
    CHECK(serialize_cvss_vector(a.vector) == "AV:N/AC:H/PR:L/UI:R/S:C/C:H/I:H/A:H");
    CHECK(a.base_score == cvss::base_score(a.vector).base);
    CHECK(a.rating == cvss::severity_rating(a.base_score));

    // flag soundness: defaulted exactly where evidence was empty or failed
    for (const auto& d : a.per_metric_decisions) {
      bool expect_default = d.metric == CvssMetric::ac || d.metric == CvssMetric::ui;
      CHECK(d.defaulted == expect_default);
      if (!d.defaulted) CHECK(!d.evidence.empty());
    }
    // scope came from the boundary-crossing lexicon, not the gateway
    auto s_decision = a.per_metric_decisions[4];
    CHECK(s_decision.metric == CvssMetric::s);
    CHECK(s_decision.value == "C");
    CHECK(!s_decision.defaulted);
    // PR carries the scope-aware note without changing its categorical value
    auto pr_decision = a.per_metric_decisions[2];
    CHECK(pr_decision.rationale.find("scope-aware check") != std::string::npos);
  }
}
