#include <doctest.h>

#include "support/temp_dir.hpp"
#include "threatrank/demo/demo.hpp"
#include "threatrank/knowledge/store.hpp"

using namespace threatrank;
using namespace threatrank::knowledge;

namespace {

// Knowledge fixtures from the demo corpus in a scratch directory.
struct StoreFixture {
  testsupport::TempDir dir{"store"};
  StoreFixture() { demo::write_knowledge_fixtures(dir.path / "knowledge"); }

  StoreConfig config(std::optional<UtcTime> as_of = parse_iso8601("2021-12-01")) const {
    StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.cache_dir = dir.path / "cache";
    sc.offline = true;
    sc.as_of = as_of;
    return sc;
  }
};

}  // namespace

TEST_SUITE("knowledge store lookups") {
  TEST_CASE("cve lookup from fixture with provenance recorded") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto rec = store.lookup_cve("CVE-2021-34527");
    REQUIRE(rec);
    CHECK(rec->description.find("Print Spooler") != std::string::npos);
    CHECK(rec->status == CveStatus::published);
    CHECK(rec->cvss_vector.has_value());
    REQUIRE(!store.provenance_log().empty());
    CHECK(store.provenance_log()[0].origin == Origin::fixture);
  }

  TEST_CASE("unknown but well-formed id is not-found, malformed id throws") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    CHECK(!store.lookup_cve("CVE-2020-99999"));
    CHECK_THROWS_AS(store.lookup_cve("CVE-21-1"), MalformedId);
    CHECK_THROWS_AS(store.lookup_kev("garbage"), MalformedId);
  }

  TEST_CASE("repeated lookup is served from cache") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto first = store.lookup_cve("CVE-2021-34527");
    auto second = store.lookup_cve("CVE-2021-34527");
    REQUIRE(first);
    REQUIRE(second);
    CHECK(first->description == second->description);
    REQUIRE(store.provenance_log().size() == 2);
    CHECK(store.provenance_log()[0].origin == Origin::fixture);
    CHECK(store.provenance_log()[1].origin == Origin::cache);
  }

  TEST_CASE("kev lookup and absence") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto kev = store.lookup_kev("CVE-2021-34527");
    REQUIRE(kev);
    CHECK(format_iso8601_date(kev->date_added) == "2021-11-03");
    REQUIRE(kev->due_date);
    CHECK(!store.lookup_kev("CVE-2021-1675"));
  }

  TEST_CASE("kev duplicate rows: first-by-date_added wins with a warning") {
    testsupport::TempDir dir("kevdup");
    dir.write("knowledge/kev.json", json{
        {"vulnerabilities",
         json::array({json{{"cveID", "CVE-2020-0001"}, {"dateAdded", "2021-05-02"}},
                      json{{"cveID", "CVE-2020-0001"}, {"dateAdded", "2021-05-01"}},
                      json{{"cveID", "CVE-2020-0001"}, {"dateAdded", "2021-05-03"}}})}}.dump());
    StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    KnowledgeStore store(sc);
    auto kev = store.lookup_kev("CVE-2020-0001");
    REQUIRE(kev);
    CHECK(format_iso8601_date(kev->date_added) == "2021-05-01");
    CHECK(store.warnings().size() == 2);
  }
}

TEST_SUITE("epss snapshots") {
  TEST_CASE("latest snapshot at or before as_of; never ahead") {
    testsupport::TempDir dir("epss");
    dir.write("knowledge/epss/epss_scores-2021-06-01.csv",
              "cve,epss,percentile\nCVE-2020-0001,0.10,0.50\n");
    dir.write("knowledge/epss/epss_scores-2021-09-01.csv",
              "cve,epss,percentile\nCVE-2020-0001,0.40,0.80\n");
    StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    KnowledgeStore store(sc);

    // after both snapshots -> the later one
    auto s = store.lookup_epss("CVE-2020-0001", parse_iso8601("2021-10-01"));
    REQUIRE(s);
    CHECK(s->probability == doctest::Approx(0.40));
    // straddling -> the earlier one
    s = store.lookup_epss("CVE-2020-0001", parse_iso8601("2021-07-15"));
    REQUIRE(s);
    CHECK(s->probability == doctest::Approx(0.10));
    // before all snapshots -> not-found (no lookahead)
    CHECK(!store.lookup_epss("CVE-2020-0001", parse_iso8601("2021-01-01")));
  }

  TEST_CASE("no snapshots loaded is an error") {
    testsupport::TempDir dir("noepss");
    StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    KnowledgeStore store(sc);
    CHECK_THROWS_AS(store.lookup_epss("CVE-2020-0001", parse_iso8601("2021-01-01")),
                    NoSnapshotLoaded);
  }
}

TEST_SUITE("exploit events") {
  TEST_CASE("merged, deduplicated and clipped") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto events = store.query_exploit_events(
        "CVE-2021-34527", {parse_iso8601("2020-12-01"), parse_iso8601("2021-12-01")});
    // poc (deduped from two sources), cve-published, advisory, in-wild, kev
    REQUIRE(events.size() == 5);
    CHECK(events[0].kind == EventKind::poc_released);
    CHECK(events[0].source == "exploit-db");  // priority winner over github
    CHECK(events[4].kind == EventKind::kev_listed);
    // sorted ascending
    for (std::size_t i = 1; i < events.size(); ++i) CHECK(!(events[i].at < events[i - 1].at));
  }

  TEST_CASE("same PoC reported by two sources on one date dedups to one event") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto events = store.query_exploit_events(
        "CVE-2021-34527", {parse_iso8601("2021-06-28"), parse_iso8601("2021-06-30")});
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == EventKind::poc_released);
  }

  TEST_CASE("empty window yields empty list") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto events = store.query_exploit_events(
        "CVE-2021-34527", {parse_iso8601("2019-01-01"), parse_iso8601("2019-01-02")});
    CHECK(events.empty());
  }

  TEST_CASE("unrecognized feed kinds map to advisory-updated with detail preserved") {
    testsupport::TempDir dir("kinds");
    dir.write("knowledge/advisories.json",
              json::array({json{{"cve_id", "CVE-2020-0001"},
                                {"date", "2021-05-01"},
                                {"kind", "exploit-kit-integration"},
                                {"detail", "added to kit"},
                                {"source", "vendor advisory"}}}).dump());
    StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    KnowledgeStore store(sc);
    auto events = store.query_exploit_events(
        "CVE-2020-0001", {parse_iso8601("2021-01-01"), parse_iso8601("2021-12-01")});
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == EventKind::advisory_updated);
    CHECK(events[0].detail.find("exploit-kit-integration") != std::string::npos);
    CHECK(!store.warnings().empty());
  }
}

TEST_SUITE("no-lookahead and network discipline") {
  TEST_CASE("records timestamped after as_of are not served") {
    StoreFixture fx;
    KnowledgeStore store(fx.config(parse_iso8601("2021-10-01")));
    // KEV added 2021-11-03 is in the future relative to as_of
    CHECK(!store.lookup_kev("CVE-2021-34527"));
    auto events = store.query_exploit_events(
        "CVE-2021-34527", {parse_iso8601("2020-12-01"), parse_iso8601("2021-12-01")});
    for (const auto& e : events) {
      CHECK(e.at <= parse_iso8601("2021-10-01"));
      CHECK(e.kind != EventKind::kev_listed);
    }
  }

  TEST_CASE("fixture mode performs zero network operations") {
    StoreFixture fx;
    auto before = network_operations().load();
    network_forbidden().store(true);
    {
      KnowledgeStore store(fx.config());
      store.lookup_cve("CVE-2021-34527");
      store.lookup_kev("CVE-2021-34527");
      store.lookup_epss("CVE-2021-34527", parse_iso8601("2021-12-01"));
      store.query_exploit_events("CVE-2021-34527",
                                 {parse_iso8601("2020-12-01"), parse_iso8601("2021-12-01")});
      store.lookup_techniques("CVE-2021-34527");
      store.source_actions("CVE-2021-34527");
    }
    network_forbidden().store(false);
    CHECK(network_operations().load() == before);
  }

  TEST_CASE("live mode without a fetcher reports the source unavailable") {
    StoreFixture fx;
    auto sc = fx.config();
    sc.offline = false;
    KnowledgeStore store(sc);
    CHECK_THROWS_AS(store.lookup_cve("CVE-2020-99999"), SourceUnavailable);
  }

  TEST_CASE("cache replay is idempotent") {
    StoreFixture fx;
    auto run_queries = [&] {
      KnowledgeStore store(fx.config());
      store.lookup_cve("CVE-2021-34527");
      store.lookup_cve("CVE-2021-1675");
      store.lookup_cve("CVE-2021-34527");
    };
    run_queries();
    std::map<std::string, std::string> first;
    for (const auto& e : std::filesystem::directory_iterator(fx.dir.path / "cache")) {
      std::ifstream in(e.path(), std::ios::binary);
      first[e.path().filename().string()] =
          std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    run_queries();
    std::map<std::string, std::string> second;
    for (const auto& e : std::filesystem::directory_iterator(fx.dir.path / "cache")) {
      std::ifstream in(e.path(), std::ios::binary);
      second[e.path().filename().string()] =
          std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    CHECK(first == second);
    CHECK(first.size() == 2);
  }
}

TEST_SUITE("attack catalog and mitigation sources") {
  TEST_CASE("technique lookup validates against the vendored catalog") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto techniques = store.lookup_techniques("CVE-2021-34527");
    CHECK(techniques == std::vector<std::string>{"T1210", "T1068"});
    CHECK(lookup_technique("T1068"));
    CHECK(!lookup_technique("T9999"));
  }

  TEST_CASE("fabricated technique ids in fixtures are dropped with a warning") {
    testsupport::TempDir dir("atkmap");
    dir.write("knowledge/attack_map.json",
              json{{"CVE-2020-0001", json::array({"T1068", "T4242"})}}.dump());
    StoreConfig sc;
    sc.fixture_dir = dir.path / "knowledge";
    sc.offline = true;
    KnowledgeStore store(sc);
    auto techniques = store.lookup_techniques("CVE-2020-0001");
    CHECK(techniques == std::vector<std::string>{"T1068"});
    CHECK(!store.warnings().empty());
  }

  TEST_CASE("source actions include supersession references and the KEV note") {
    StoreFixture fx;
    KnowledgeStore store(fx.config());
    auto actions = store.source_actions("CVE-2021-34527");
    bool found_supersedes = false, found_kev_note = false;
    for (const auto& a : actions) {
      if (a.supersedes) found_supersedes = true;
      if (a.kind == ActionKind::mitigation_note && a.authority == SourceAuthority::kev)
        found_kev_note = true;
    }
    CHECK(found_supersedes);
    CHECK(found_kev_note);
  }

  TEST_CASE("future-released actions are not served under as_of") {
    StoreFixture fx;
    KnowledgeStore store(fx.config(parse_iso8601("2021-07-10")));
    auto actions = store.source_actions("CVE-2021-34527");
    for (const auto& a : actions)
      if (a.released) CHECK(*a.released <= parse_iso8601("2021-07-10"));
  }
}
