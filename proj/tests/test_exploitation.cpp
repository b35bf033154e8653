#include <doctest.h>

#include "support/temp_dir.hpp"
#include "threatrank/demo/demo.hpp"
#include "threatrank/exploitation/forecast.hpp"

using namespace threatrank;
using namespace threatrank::exploitation;

namespace {

EnrichedThreatInstance bare_instance(const std::string& cve = "") {
  EnrichedThreatInstance e;
  e.instance.id = "t#1";
  e.instance.parent_incident = "t";
  e.instance.impact = "remote code execution";
  if (!cve.empty()) {
    e.instance.indicators = {cve};
    e.metadata.cve_id = cve;
  }
  return e;
}

StaticAssessment assessment_for(const std::string& vector) {
  StaticAssessment a;
  a.vector = parse_cvss_vector(vector);
  a.breakdown = cvss::base_score(a.vector);
  a.base_score = a.breakdown.base;
  a.rating = cvss::severity_rating(a.base_score);
  return a;
}

TemporalNarrative narrative_of(std::vector<TemporalEvent> events,
                               std::pair<UtcTime, UtcTime> window) {
  return TemporalNarrative::build(std::move(events), window);
}

const std::pair<UtcTime, UtcTime> kWindow{parse_iso8601("2021-01-01"),
                                          parse_iso8601("2021-12-01")};

}  // namespace

TEST_SUITE("temporal narrative building") {
  TEST_CASE("events sorted with gaps; equal-timestamp ties by source priority") {
    testsupport::TempDir dir("narr");
    dir.write("knowledge/kev.json",
              json{{"vulnerabilities",
                    json::array({json{{"cveID", "CVE-2020-0001"},
                                      {"dateAdded", "2021-06-01"},
                                      {"notes", "listed"}}})}}.dump());
    dir.write("knowledge/exploitdb.json",
              json::array({json{{"cve_id", "CVE-2020-0001"},
                                {"date", "2021-06-01"},
                                {"title", "poc"},
                                {"source", "exploit-db"}}}).dump());
    knowledge::StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    knowledge::KnowledgeStore store(sc);

    auto n = build_narrative(store, bare_instance("CVE-2020-0001"), kWindow);
    REQUIRE(n.events.size() == 2);
    CHECK(n.events[0].kind == EventKind::kev_listed);  // KEV outranks Exploit-DB on ties
    CHECK(n.events[1].kind == EventKind::poc_released);
    REQUIRE(n.gaps_seconds.size() == 1);
    CHECK(n.gaps_seconds[0] == 0);
  }

  TEST_CASE("publication -> PoC -> KEV -> in-wild sequence keeps three gaps") {
    testsupport::TempDir dir("seq");
    demo::write_knowledge_fixtures(dir.path / "knowledge");
    knowledge::StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    sc.as_of = parse_iso8601("2021-12-01");
    knowledge::KnowledgeStore store(sc);
    auto n = build_narrative(store, bare_instance("CVE-2021-34527"),
                             {parse_iso8601("2021-07-01"), parse_iso8601("2021-12-01")});
    // published 07-02, advisory 07-06, in-wild 07-09, kev 11-03 (PoC predates window)
    REQUIRE(n.events.size() == 4);
    CHECK(n.events[0].kind == EventKind::cve_published);
    CHECK(n.events[3].kind == EventKind::kev_listed);
    CHECK(n.gaps_seconds.size() == 3);
    CHECK(validate(n).ok());
  }

  TEST_CASE("instance without a CVE yields an empty narrative") {
    testsupport::TempDir dir("nocve");
    knowledge::StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    knowledge::KnowledgeStore store(sc);
    auto n = build_narrative(store, bare_instance(), kWindow);
    CHECK(n.events.empty());
  }
}

TEST_SUITE("fallback forecaster") {
  TEST_CASE("no signals returns the configured base rate") {
    auto t = bare_instance();
    auto a = assessment_for("AV:L/AC:H/PR:H/UI:R/S:U/C:N/I:N/A:N");  // severity 0
    auto n = narrative_of({}, kWindow);
    ForecastOptions opts;
    opts.use_gateway = false;
    opts.base_rate = 0.02;
    auto f = fallback_forecast(t, a, n, opts);
    CHECK(f.probability == doctest::Approx(0.02).epsilon(1e-9));
    CHECK(f.fallback_used);
    opts.base_rate = 0.10;
    CHECK(fallback_forecast(t, a, n, opts).probability == doctest::Approx(0.10));
  }

  TEST_CASE("severity raises the floor but probability stays in range") {
    auto t = bare_instance();
    auto n = narrative_of({}, kWindow);
    ForecastOptions opts;
    opts.use_gateway = false;
    auto low = fallback_forecast(t, assessment_for("AV:L/AC:H/PR:H/UI:R/S:U/C:N/I:N/A:N"), n, opts);
    auto high = fallback_forecast(t, assessment_for("AV:N/AC:L/PR:N/UI:N/S:C/C:H/I:H/A:H"), n, opts);
    CHECK(high.probability > low.probability);
    CHECK(high.probability <= 1.0);
    CHECK(low.probability >= 0.0);
  }

  TEST_CASE("adding a kev-listed or poc-released event never decreases the forecast") {
    auto t = bare_instance("CVE-2020-0001");
    auto a = assessment_for("AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H");
    ForecastOptions opts;
    opts.use_gateway = false;

    std::vector<TemporalEvent> base_events{
        {parse_iso8601("2021-03-01"), EventKind::cve_published, "", "nvd"}};
    auto base = fallback_forecast(t, a, narrative_of(base_events, kWindow), opts);

    for (auto kind : {EventKind::kev_listed, EventKind::poc_released}) {
      auto grown = base_events;
      grown.push_back({parse_iso8601("2021-10-01"), kind, "", "feed"});
      auto f = fallback_forecast(t, a, narrative_of(grown, kWindow), opts);
      CHECK(f.probability >= base.probability);
      // and additional PoCs on top never decrease it further
      grown.push_back({parse_iso8601("2021-11-01"), EventKind::poc_released, "", "feed"});
      auto f2 = fallback_forecast(t, a, narrative_of(grown, kWindow), opts);
      CHECK(f2.probability >= f.probability);
    }
  }

  TEST_CASE("KEV with a recent PoC scores strictly higher than the bare instance") {
    auto a = assessment_for("AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H");
    ForecastOptions opts;
    opts.use_gateway = false;

    auto quiet = bare_instance("CVE-2020-0001");
    auto quiet_f = fallback_forecast(quiet, a, narrative_of({}, kWindow), opts);

    auto hot = bare_instance("CVE-2020-0001");
    hot.metadata.kev_listed = true;
    hot.metadata.kev_date_added = parse_iso8601("2021-11-01");
    hot.metadata.exploitation_status = ExploitationStatus::confirmed_in_wild;
    std::vector<TemporalEvent> events{
        {parse_iso8601("2021-11-01"), EventKind::kev_listed, "", "cisa-kev"},
        {parse_iso8601("2021-11-15"), EventKind::poc_released, "", "exploit-db"}};
    auto hot_f = fallback_forecast(hot, a, narrative_of(events, kWindow), opts);
    CHECK(hot_f.probability > quiet_f.probability);
  }

  TEST_CASE("a longer horizon never lowers the fallback forecast") {
    auto t = bare_instance("CVE-2020-0001");
    auto a = assessment_for("AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H");
    std::vector<TemporalEvent> events{
        {parse_iso8601("2021-09-01"), EventKind::poc_released, "", "exploit-db"}};
    auto n = narrative_of(events, kWindow);
    ForecastOptions opts30;
    opts30.use_gateway = false;
    opts30.horizon_days = 30;
    ForecastOptions opts90 = opts30;
    opts90.horizon_days = 90;
    CHECK(fallback_forecast(t, a, n, opts90).probability >=
          fallback_forecast(t, a, n, opts30).probability);
  }

  TEST_CASE("recency weighting: an old PoC contributes less than a fresh one") {
    auto t = bare_instance("CVE-2020-0001");
    auto a = assessment_for("AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H");
    ForecastOptions opts;
    opts.use_gateway = false;
    auto stale = fallback_forecast(
        t, a,
        narrative_of({{parse_iso8601("2021-01-15"), EventKind::poc_released, "", "x"}}, kWindow),
        opts);
    auto fresh = fallback_forecast(
        t, a,
        narrative_of({{parse_iso8601("2021-11-20"), EventKind::poc_released, "", "x"}}, kWindow),
        opts);
    CHECK(fresh.probability > stale.probability);
  }
}

TEST_SUITE("forecast operation") {
  TEST_CASE("horizon outside {30,90} is rejected") {
    auto backend = std::make_shared<gateway::ScriptedBackend>();
    gateway::Gateway gw(backend);
    ForecastOptions opts;
    opts.horizon_days = 60;
    CHECK_THROWS_AS(forecast(gw, bare_instance(), assessment_for("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"),
                             narrative_of({}, kWindow), opts),
                    DomainError);
  }

  TEST_CASE("gateway probability is clamped with the raw value logged") {
    auto t = bare_instance("CVE-2020-0001");
    auto a = assessment_for("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H");
    auto n = narrative_of({}, kWindow);
    auto backend = std::make_shared<gateway::ScriptedBackend>();
    auto prompt = forecast_prompt(t, a, n, 30);
    backend->set(prompt.digest(), R"({"probability": 1.4, "rationale": "over-eager"})");
    gateway::Gateway gw(backend);
    ForecastOptions opts;
    auto f = forecast(gw, t, a, n, opts);
    CHECK(f.probability == 1.0);
    CHECK(f.rationale.find("clamped") != std::string::npos);
    CHECK(!f.fallback_used);
  }

  TEST_CASE("gateway failure falls back, flagged") {
    auto t = bare_instance("CVE-2020-0001");
    auto a = assessment_for("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H");
    auto n = narrative_of({}, kWindow);
    auto backend = std::make_shared<gateway::ScriptedBackend>();  // no fixture
    gateway::Gateway gw(backend);
    ForecastOptions opts;
    auto f = forecast(gw, t, a, n, opts);
    CHECK(f.fallback_used);
    CHECK(f.probability >= 0.0);
    CHECK(f.probability <= 1.0);
    CHECK(f.rationale.find("(i)") != std::string::npos);
    CHECK(f.rationale.find("(iii)") != std::string::npos);
  }

  TEST_CASE("inputs digest binds instance, vector and events") {
    auto t = bare_instance("CVE-2020-0001");
    auto a = assessment_for("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H");
    auto n0 = narrative_of({}, kWindow);
    auto n1 = narrative_of({{parse_iso8601("2021-06-01"), EventKind::poc_released, "", "x"}},
                           kWindow);
    CHECK(inputs_digest(t, a, n0) != inputs_digest(t, a, n1));
    auto a2 = assessment_for("AV:L/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H");
    CHECK(inputs_digest(t, a, n0) != inputs_digest(t, a2, n0));
    CHECK(inputs_digest(t, a, n0) == inputs_digest(t, a, n0));
  }

  TEST_CASE("events outside the window never influence the forecast") {
    testsupport::TempDir dir("wind");
    dir.write("knowledge/exploitdb.json",
              json::array({json{{"cve_id", "CVE-2020-0001"},
                                {"date", "2021-06-01"},
                                {"title", "inside"},
                                {"source", "exploit-db"}},
                           json{{"cve_id", "CVE-2020-0001"},
                                {"date", "2022-03-01"},
                                {"title", "outside"},
                                {"source", "exploit-db"}}}).dump());
    knowledge::StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    knowledge::KnowledgeStore store(sc);
    auto t = bare_instance("CVE-2020-0001");
    auto a = assessment_for("AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H");
    ForecastOptions opts;
    opts.use_gateway = false;
    auto n = build_narrative(store, t, kWindow);
    REQUIRE(n.events.size() == 1);

    // identical fixtures minus the out-of-window event
    testsupport::TempDir dir2("winb");
    dir2.write("knowledge/exploitdb.json",
               json::array({json{{"cve_id", "CVE-2020-0001"},
                                 {"date", "2021-06-01"},
                                 {"title", "inside"},
                                 {"source", "exploit-db"}}}).dump());
    knowledge::StoreConfig sc2;
    sc2.fixture_dir = dir2.path / "knowledge";
    sc2.offline = true;
    knowledge::KnowledgeStore store2(sc2);
    auto n2 = build_narrative(store2, t, kWindow);
    CHECK(fallback_forecast(t, a, n, opts).probability ==
          fallback_forecast(t, a, n2, opts).probability);
  }
}
