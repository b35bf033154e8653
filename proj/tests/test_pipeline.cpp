#include <doctest.h>

#include "support/temp_dir.hpp"
#include "threatrank/demo/demo.hpp"
#include "threatrank/pipeline/pipeline.hpp"

using namespace threatrank;
namespace tp = threatrank::pipeline;

namespace {

std::map<std::string, std::string> tree_digest(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    out[std::filesystem::relative(entry.path(), root).string()] = sha256_hex(content);
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline configuration") {
  TEST_CASE("config validation rejects bad values") {
    testsupport::TempDir dir("cfg");
    dir.write("bad_backend.json", R"({"backend": "carrier-pigeon"})");
    CHECK_THROWS_AS(tp::Config::load(dir.path / "bad_backend.json"), tp::ConfigError);
    dir.write("bad_horizon.json", R"({"horizon_days": 45})");
    CHECK_THROWS_AS(tp::Config::load(dir.path / "bad_horizon.json"), tp::ConfigError);
    dir.write("bad_alpha.json", R"({"assets": {"a": {"exposure": 0.0}}})");
    CHECK_THROWS_AS(tp::Config::load(dir.path / "bad_alpha.json"), tp::ConfigError);
    dir.write("bad_json.json", "{nope");
    CHECK_THROWS_AS(tp::Config::load(dir.path / "bad_json.json"), tp::ConfigError);
    CHECK_THROWS_AS(tp::Config::load(dir.path / "absent.json"), tp::ConfigError);
  }

  TEST_CASE("missing stage input is a stage failure naming the stage") {
    testsupport::TempDir dir("stage");
    dir.write("config.json", R"({"backend": "stub", "offline": true, "output_dir": "out"})");
    auto cfg = tp::Config::load(dir.path / "config.json");
    auto rt = tp::make_runtime(cfg);
    try {
      tp::run_assess(rt);
      FAIL("expected StageFailure");
    } catch (const tp::StageFailure& e) {
      CHECK(e.stage == "assess");
    }
  }

  TEST_CASE("tampered assessment scores are rejected on re-read") {
    json good{{"vector", "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"}, {"base_score", 9.8}};
    CHECK_NOTHROW(tp::assessment_from_json(good));
    json bad = good;
    bad["base_score"] = 9.9;  // not the engine's score for that vector
    CHECK_THROWS_AS(tp::assessment_from_json(bad), tp::ConfigError);
  }

  TEST_CASE("instance file missing required fields is a ConfigError naming the field") {
    testsupport::TempDir dir("badinst");
    dir.write("config.json", R"({"backend": "stub", "offline": true, "output_dir": "out"})");
    dir.write("out/triage/instances.json",
              json::array({json{{"instance", json{{"id", "x#1"}}},
                           {"metadata", json::object()}}}).dump());
    auto cfg = tp::Config::load(dir.path / "config.json");
    auto rt = tp::make_runtime(cfg);
    try {
      tp::run_assess(rt);
      FAIL("expected ConfigError");
    } catch (const tp::ConfigError& e) {
      CHECK(std::string(e.what()).find("parent_incident") != std::string::npos);
    }
  }
}

TEST_SUITE("demo pipeline") {
  TEST_CASE("two runs produce byte-identical output trees with 3/3/3/1 artifacts") {
    testsupport::TempDir dir("demo");
    auto config_path = demo::write_demo(dir.path / "ws");
    auto cfg = tp::Config::load(config_path);

    cfg.output_dir = dir.path / "out1";
    auto rt1 = tp::make_runtime(cfg);
    auto summaries = tp::run_pipeline(rt1);
    REQUIRE(summaries.size() == 4);
    CHECK(summaries[0].items == 3);  // instances
    CHECK(summaries[1].items == 3);  // assessments
    CHECK(summaries[2].items == 3);  // forecasts
    CHECK(summaries[3].items == 3);  // one plan with three entries

    cfg.output_dir = dir.path / "out2";
    auto rt2 = tp::make_runtime(cfg);
    tp::run_pipeline(rt2);

    CHECK(tree_digest(dir.path / "out1") == tree_digest(dir.path / "out2"));

    // the entangled advisory disentangles into exactly the two expected CVEs
    auto instances = tp::read_json_or_fail(dir.path / "out1" / "triage" / "instances.json", "t");
    std::vector<std::string> first_incident_cves;
    for (const auto& e : instances)
      if (e["instance"]["parent_incident"] == "inc-2021-0001")
        first_incident_cves.push_back(e["metadata"]["cve_id"].get<std::string>());
    CHECK(first_incident_cves ==
          std::vector<std::string>{"CVE-2021-1675", "CVE-2021-34527"});

    // the remote-code-execution instances score 9.9 Critical on the
    // scope-changed vector; the privilege-escalation instance scores 8.8
    auto assessments =
        tp::read_json_or_fail(dir.path / "out1" / "assess" / "assessments.json", "a");
    for (const auto& row : assessments) {
      const auto& a = row["assessment"];
      if (row["threat_id"] == "inc-2021-0001#1") {
        CHECK(a["vector"] == "AV:L/AC:L/PR:L/UI:N/S:C/C:H/I:H/A:H");
        CHECK(a["base_score"] == doctest::Approx(8.8));
      } else {
        CHECK(a["vector"] == "AV:N/AC:L/PR:L/UI:N/S:C/C:H/I:H/A:H");
        CHECK(a["base_score"] == doctest::Approx(9.9));
        CHECK(a["rating"] == "Critical");
      }
    }

    // plan is the external contract array
    auto plan = tp::read_json_or_fail(dir.path / "out1" / "mitigate" / "plan.json", "m");
    REQUIRE(plan.is_array());
    REQUIRE(plan.size() == 3);
    for (const auto& row : plan) {
      CHECK(row.contains("target"));
      CHECK(row.contains("recommended_action"));
      CHECK(row.contains("ETA"));
      CHECK(row.contains("justification"));
      CHECK(row.contains("dependencies"));
      CHECK(row.contains("operational_notes"));
    }
  }

  TEST_CASE("stages can be rerun in isolation from prior on-disk outputs") {
    testsupport::TempDir dir("iso");
    auto config_path = demo::write_demo(dir.path / "ws");
    auto cfg = tp::Config::load(config_path);
    cfg.output_dir = dir.path / "out";
    auto rt = tp::make_runtime(cfg);
    tp::run_pipeline(rt);
    auto before = tree_digest(dir.path / "out");

    // fresh runtime, rerun only the forecast stage; downstream inputs intact
    auto rt2 = tp::make_runtime(cfg);
    tp::run_forecast(rt2);
    auto after = tree_digest(dir.path / "out");
    CHECK(before.at("forecast/forecasts.json") == after.at("forecast/forecasts.json"));
  }
}

TEST_SUITE("eval harness command") {
  TEST_CASE("static accuracy, ranking and trend sections produce report rows") {
    testsupport::TempDir dir("eval");
    dir.write("config.json",
              R"({"backend": "stub", "offline": true, "output_dir": "out",
                  "as_of": "2021-12-01T00:00:00Z"})");
    json dataset{
        {"static", json::array({json{{"predicted_vector", "AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"},
                                     {"official_vector", "AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"}},
                                json{{"predicted_vector", "AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"},
                                     {"official_vector", "AV:N/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H"}}})},
        {"ranking", json::array({json{{"name", "batch1"},
                                      {"predicted_order", json::array({"a", "b", "c"})},
                                      {"reference_order", json::array({"a", "c", "b"})},
                                      {"relevance", json{{"a", 3}, {"b", 1}, {"c", 2}}}}})},
        {"trend_protocol", json{{"seeds", 10}}}};
    dir.write("dataset.json", dataset.dump());
    auto cfg = tp::Config::load(dir.path / "config.json");
    auto rt = tp::make_runtime(cfg);
    auto rows = tp::run_eval(rt, dir.path / "dataset.json");

    auto find_row = [&](const std::string& metric) -> const evaluation::ReportRow* {
      for (const auto& r : rows)
        if (r.metric == metric) return &r;
      return nullptr;
    };
    REQUIRE(find_row("accuracy_AV"));
    CHECK(find_row("accuracy_AV")->value == doctest::Approx(0.5));
    REQUIRE(find_row("accuracy_AC"));
    CHECK(find_row("accuracy_AC")->value == doctest::Approx(1.0));
    REQUIRE(find_row("score_rmse"));
    REQUIRE(find_row("ndcg_at_5"));
    REQUIRE(find_row("kendall_tau"));
    CHECK(find_row("kendall_tau")->value == doctest::Approx(1.0 / 3.0));
    // all three trend groups round-trip perfectly
    int trend_rows = 0;
    for (const auto& r : rows)
      if (r.metric == "trend_round_trip") {
        ++trend_rows;
        CHECK(r.value == doctest::Approx(1.0));
      }
    CHECK(trend_rows == 3);

    // CSV and JSON reports mirror the rows
    auto csv = dir.read("out/eval/report.csv");
    CHECK(csv.find("stage,metric,condition,value") != std::string::npos);
    CHECK(csv.find("accuracy_AV") != std::string::npos);
  }

  TEST_CASE("per-metric accuracy at NVD-fixture scale with known perturbations") {
    // predicted = official, except AV flipped on 10 rows, UI on 5, S on 3:
    // the expected accuracies are known by construction
    std::ifstream in(std::string(TEST_FIXTURE_DIR) + "/nvd_vectors.json");
    REQUIRE(in.good());
    auto fixture = json::parse(in);
    REQUIRE(fixture.size() >= 50);

    json cases = json::array();
    int idx = 0;
    for (const auto& row : fixture) {
      auto official = parse_cvss_vector(row.at("vector").get<std::string>());
      auto predicted = official;
      if (idx < 10) predicted.av = AttackVector::local;
      else if (idx < 15) predicted.ui = UserInteraction::required;
      else if (idx < 18) predicted.scope = Scope::changed;
      cases.push_back(json{{"predicted_vector", serialize_cvss_vector(predicted)},
                           {"official_vector", serialize_cvss_vector(official)}});
      ++idx;
    }
    const double n = static_cast<double>(fixture.size());
    // the first ten official vectors are all AV:N, so every AV flip is a miss;
    // likewise the next groups are UI:N and S:U in the fixture ordering
    testsupport::TempDir dir("evalscale");
    dir.write("config.json", R"({"backend": "stub", "offline": true, "output_dir": "out"})");
    dir.write("dataset.json", json{{"static", cases}}.dump());
    auto cfg = tp::Config::load(dir.path / "config.json");
    auto rt = tp::make_runtime(cfg);
    auto rows = tp::run_eval(rt, dir.path / "dataset.json");
    std::map<std::string, double> by_metric;
    for (const auto& r : rows) by_metric[r.metric] = r.value;
    CHECK(by_metric.at("accuracy_AV") == doctest::Approx((n - 10) / n).epsilon(1e-12));
    CHECK(by_metric.at("accuracy_UI") == doctest::Approx((n - 5) / n).epsilon(1e-12));
    CHECK(by_metric.at("accuracy_S") == doctest::Approx((n - 3) / n).epsilon(1e-12));
    CHECK(by_metric.at("accuracy_AC") == doctest::Approx(1.0));
    CHECK(by_metric.at("score_rmse") > 0.0);
  }

  TEST_CASE("the demo workspace ships a working eval dataset") {
    testsupport::TempDir dir("demoeval");
    auto config_path = demo::write_demo(dir.path / "ws");
    auto cfg = tp::Config::load(config_path);
    cfg.output_dir = dir.path / "out";
    auto rt = tp::make_runtime(cfg);
    REQUIRE(!cfg.eval_dataset.empty());
    auto rows = tp::run_eval(rt, cfg.eval_dataset);
    std::map<std::string, double> by_metric;
    int window_rows = 0;
    for (const auto& r : rows) {
      by_metric[r.metric] = r.value;
      if (r.metric == "window_rmse") ++window_rows;
    }
    // assessed vectors differ from the official NVD vectors on AV (one of
    // three) and S (all three, the paper-style scope-changed call)
    CHECK(by_metric.at("accuracy_AV") == doctest::Approx(2.0 / 3.0));
    CHECK(by_metric.at("accuracy_S") == doctest::Approx(0.0));
    CHECK(by_metric.at("accuracy_C") == doctest::Approx(1.0));
    CHECK(by_metric.at("ndcg_at_5") == doctest::Approx(1.0));
    CHECK(window_rows == 4);  // the four-window study shape
  }
}
