#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "threatrank/analysis/assess.hpp"
#include "threatrank/core/json_codec.hpp"
#include "threatrank/core/validate.hpp"
#include "threatrank/evaluation/metrics.hpp"
#include "threatrank/evaluation/report.hpp"
#include "threatrank/evaluation/sweep.hpp"
#include "threatrank/evaluation/trend.hpp"
#include "threatrank/exploitation/forecast.hpp"
#include "threatrank/gateway/gateway.hpp"
#include "threatrank/knowledge/store.hpp"
#include "threatrank/mitigation/mitigation.hpp"
#include "threatrank/triage/triage.hpp"

namespace threatrank::pipeline {

namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct StageFailure : std::runtime_error {
  std::string stage;
  std::vector<std::string> ids;
  StageFailure(std::string stage_, const std::string& what, std::vector<std::string> ids_ = {})
      : std::runtime_error(stage_ + ": " + what), stage(std::move(stage_)), ids(std::move(ids_)) {}
};

// Per-asset prioritization inputs supplied by the operator.
struct AssetEntry {
  double exposure = 1.0;
  double criticality = 1.0;
  int disruption = 1;
  bool unpatchable = false;
  std::vector<std::string> dependencies;
  int earliest_phase = 0;
};

struct Config {
  std::string backend = "stub";  // {stub, http}
  bool offline = true;
  fs::path incidents_path;
  fs::path fixture_dir;
  fs::path gateway_fixture_dir;
  fs::path cache_dir;
  fs::path output_dir = "out";
  std::optional<UtcTime> as_of;
  int horizon_days = 30;
  double window_days = 365.0;
  std::uint64_t seed = 0;
  int parallelism = 1;
  int phase_length_days = 7;
  double base_rate = 0.02;
  bool narrate_plan = true;
  std::map<std::string, AssetEntry> assets;
  fs::path eval_dataset;

  void validate() const {
    if (backend != "stub" && backend != "http")
      throw ConfigError("backend must be 'stub' or 'http', got '" + backend + "'");
    if (horizon_days != 30 && horizon_days != 90)
      throw ConfigError("horizon_days must be 30 or 90");
    if (window_days <= 0) throw ConfigError("window_days must be positive");
    if (phase_length_days <= 0) throw ConfigError("phase_length_days must be positive");
    for (const auto& [id, a] : assets) {
      if (!(a.exposure > 0.0) || a.exposure > 10.0)
        throw ConfigError("asset '" + id + "': exposure outside (0,10]");
      if (!(a.criticality > 0.0) || a.criticality > 10.0)
        throw ConfigError("asset '" + id + "': criticality outside (0,10]");
    }
  }

  static Config load(const fs::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot read config file " + path.string());
    auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
    Config c;
    auto base = path.parent_path();
    auto resolve = [&](const std::string& p) -> fs::path {
      fs::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    c.backend = doc.value("backend", c.backend);
    c.offline = doc.value("offline", c.offline);
    if (doc.contains("incidents")) c.incidents_path = resolve(doc["incidents"]);
    if (doc.contains("fixture_dir")) c.fixture_dir = resolve(doc["fixture_dir"]);
    if (doc.contains("gateway_fixture_dir"))
      c.gateway_fixture_dir = resolve(doc["gateway_fixture_dir"]);
    if (doc.contains("cache_dir")) c.cache_dir = resolve(doc["cache_dir"]);
    if (doc.contains("output_dir")) c.output_dir = resolve(doc["output_dir"]);
    if (doc.contains("as_of")) c.as_of = parse_iso8601(doc["as_of"].get<std::string>());
    c.horizon_days = doc.value("horizon_days", c.horizon_days);
    c.window_days = doc.value("window_days", c.window_days);
    c.seed = doc.value("seed", c.seed);
    c.parallelism = doc.value("parallelism", c.parallelism);
    c.phase_length_days = doc.value("phase_length_days", c.phase_length_days);
    c.base_rate = doc.value("base_rate", c.base_rate);
    c.narrate_plan = doc.value("narrate_plan", c.narrate_plan);
    if (doc.contains("eval_dataset")) c.eval_dataset = resolve(doc["eval_dataset"]);
    const json assets = doc.value("assets", json::object());
    for (auto it = assets.begin(); it != assets.end(); ++it) {
      AssetEntry a;
      const auto& v = it.value();
      a.exposure = v.value("exposure", 1.0);
      a.criticality = v.value("criticality", 1.0);
      a.disruption = v.value("disruption", 1);
      a.unpatchable = v.value("unpatchable", false);
      for (const auto& d : v.value("dependencies", json::array()))
        a.dependencies.push_back(d.get<std::string>());
      a.earliest_phase = v.value("earliest_phase", 0);
      c.assets[it.key()] = a;
    }
    c.validate();
    return c;
  }
};

// Live-mode HTTP fetcher is injected from the CLI to keep network plumbing
// out of this header; fixture mode needs none.
using Fetcher = std::function<std::optional<std::string>(const std::string&)>;

struct Runtime {
  Config cfg;
  std::unique_ptr<knowledge::KnowledgeStore> store;
  std::shared_ptr<gateway::CompletionBackend> backend;
  std::unique_ptr<gateway::Gateway> gw;
};

inline Runtime make_runtime(Config cfg, std::shared_ptr<gateway::CompletionBackend> backend = {},
                            Fetcher fetcher = {}) {
  cfg.validate();
  Runtime rt;
  rt.cfg = cfg;
  knowledge::StoreConfig sc;
  sc.fixture_dir = cfg.fixture_dir;
  sc.cache_dir = cfg.cache_dir;
  sc.offline = cfg.offline;
  sc.as_of = cfg.as_of;
  sc.fetcher = std::move(fetcher);
  rt.store = std::make_unique<knowledge::KnowledgeStore>(sc);
  if (backend) {
    rt.backend = std::move(backend);
  } else if (cfg.backend == "stub") {
    rt.backend = std::make_shared<gateway::StubBackend>(cfg.gateway_fixture_dir);
  } else {
    throw ConfigError("http backend requires the CLI to supply a backend instance");
  }
  gateway::GatewayOptions gopts;
  gopts.max_in_flight = std::max(1, cfg.parallelism);
  rt.gw = std::make_unique<gateway::Gateway>(rt.backend, gopts);
  return rt;
}

// ---------------------------------------------------------------------------
// Stage I/O helpers
// ---------------------------------------------------------------------------

inline void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw StageFailure("io", "cannot write " + path.string());
  out << content;
}

inline json read_json_or_fail(const fs::path& path, const std::string& stage) {
  std::ifstream in(path);
  if (!in.good()) throw StageFailure(stage, "missing input file " + path.string());
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw StageFailure(stage, "invalid JSON in " + path.string());
  return doc;
}

// Incident input: JSON-Lines, one RawIncident per line.
inline std::vector<RawIncident> read_incidents(const fs::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw StageFailure("triage", "cannot read incidents file " + path.string());
  std::vector<RawIncident> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded())
      throw StageFailure("triage", "incidents line " + std::to_string(lineno) + " is not JSON");
    try {
      out.push_back(raw_incident_from_json(doc));
    } catch (const std::exception& e) {
      throw StageFailure("triage", "incidents line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::map<std::string, RawIncident> incident_index(const Config& cfg) {
  std::map<std::string, RawIncident> out;
  if (cfg.incidents_path.empty() || !fs::exists(cfg.incidents_path)) return out;
  for (auto& i : read_incidents(cfg.incidents_path)) out[i.id] = std::move(i);
  return out;
}

// Context documents an instance contributes evidence from beyond its own
// fields: the parent incident body and the NVD description.
inline std::vector<analysis::EvidenceDoc> context_docs(Runtime& rt,
                                                       const EnrichedThreatInstance& t,
                                                       const std::map<std::string, RawIncident>& incidents) {
  std::vector<analysis::EvidenceDoc> docs;
  auto inc = incidents.find(t.instance.parent_incident);
  if (inc != incidents.end()) docs.push_back({inc->second.text, inc->second.source});
  if (auto cve = t.instance.primary_cve()) {
    if (auto record = rt.store->lookup_cve(*cve); record && !record->description.empty())
      docs.push_back({record->description, "nvd"});
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Stages. Each stage reads the previous stage's on-disk outputs, so any
// stage can be rerun in isolation.
// ---------------------------------------------------------------------------

struct StageSummary {
  std::string stage;
  int items = 0;
};

inline StageSummary run_triage(Runtime& rt) {
  auto incidents = read_incidents(rt.cfg.incidents_path);
  triage::Triage tri(*rt.gw, *rt.store);
  auto [enriched, report] = tri.triage_batch(incidents, rt.cfg.parallelism);

  json arr = json::array();
  for (const auto& e : enriched) arr.push_back(to_json(e));
  write_file(rt.cfg.output_dir / "triage" / "instances.json", dump_stable(arr));
  write_file(rt.cfg.output_dir / "triage" / "report.json", dump_stable(report.to_json()));
  return {"triage", static_cast<int>(enriched.size())};
}

inline StageSummary run_assess(Runtime& rt) {
  auto instances_doc =
      read_json_or_fail(rt.cfg.output_dir / "triage" / "instances.json", "assess");
  auto incidents = incident_index(rt.cfg);
  analysis::StaticAnalyzer analyzer(*rt.gw);

  json arr = json::array();
  for (const auto& ej : instances_doc) {
    EnrichedThreatInstance t;
    try {
      t = enriched_from_json(ej);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("assess: bad instance document: ") + e.what());
    }
    analysis::AssessOptions opts;
    opts.extra_docs = context_docs(rt, t, incidents);
    auto assessment = analyzer.assess_static(t, opts);
    arr.push_back(json{{"threat_id", t.instance.id}, {"assessment", to_json(assessment)}});
  }
  write_file(rt.cfg.output_dir / "assess" / "assessments.json", dump_stable(arr));
  return {"assess", static_cast<int>(arr.size())};
}

inline StaticAssessment assessment_from_json(const json& j) {
  StaticAssessment a;
  a.vector = parse_cvss_vector(j.at("vector").get<std::string>());
  a.base_score = j.at("base_score").get<double>();
  a.breakdown = cvss::base_score(a.vector);
  // score provenance: the stored number must be the engine's score for the
  // stored vector
  if (std::abs(a.base_score - a.breakdown.base) > 1e-9)
    throw ConfigError("assessment base_score " + std::to_string(a.base_score) +
                      " inconsistent with vector " + serialize_cvss_vector(a.vector));
  a.rating = cvss::severity_rating(a.base_score);
  return a;
}

inline StageSummary run_forecast(Runtime& rt) {
  auto instances_doc =
      read_json_or_fail(rt.cfg.output_dir / "triage" / "instances.json", "forecast");
  auto assess_doc =
      read_json_or_fail(rt.cfg.output_dir / "assess" / "assessments.json", "forecast");
  std::map<std::string, json> assessments;
  for (const auto& row : assess_doc)
    assessments[row.at("threat_id").get<std::string>()] = row.at("assessment");

  UtcTime as_of = rt.cfg.as_of.value_or(UtcTime{0});
  if (!rt.cfg.as_of)
    throw StageFailure("forecast", "config must set as_of for deterministic windows");

  exploitation::ForecastOptions fopts;
  fopts.horizon_days = rt.cfg.horizon_days;
  fopts.base_rate = rt.cfg.base_rate;

  json arr = json::array();
  for (const auto& ej : instances_doc) {
    auto t = enriched_from_json(ej);
    auto ait = assessments.find(t.instance.id);
    if (ait == assessments.end())
      throw StageFailure("forecast", "no assessment for " + t.instance.id, {t.instance.id});
    auto assessment = assessment_from_json(ait->second);
    auto narrative = exploitation::build_narrative(
        *rt.store, t, {as_of.plus_days(-rt.cfg.window_days), as_of});
    auto f = exploitation::forecast(*rt.gw, t, assessment, narrative, fopts);
    arr.push_back(json{{"threat_id", t.instance.id},
                       {"narrative", to_json(narrative)},
                       {"forecast", to_json(f)}});
  }
  write_file(rt.cfg.output_dir / "forecast" / "forecasts.json", dump_stable(arr));
  return {"forecast", static_cast<int>(arr.size())};
}

// Plan inputs assembled from the three prior stage outputs; shared by the
// mitigate stage and the fixture bootstrapper.
inline std::vector<mitigation::PlanInput> build_plan_inputs(Runtime& rt,
                                                            mitigation::RetrievalLog& log) {
  auto instances_doc =
      read_json_or_fail(rt.cfg.output_dir / "triage" / "instances.json", "mitigate");
  auto assess_doc =
      read_json_or_fail(rt.cfg.output_dir / "assess" / "assessments.json", "mitigate");
  auto forecast_doc =
      read_json_or_fail(rt.cfg.output_dir / "forecast" / "forecasts.json", "mitigate");
  std::map<std::string, json> assessments, forecasts;
  for (const auto& row : assess_doc)
    assessments[row.at("threat_id").get<std::string>()] = row.at("assessment");
  for (const auto& row : forecast_doc)
    forecasts[row.at("threat_id").get<std::string>()] = row.at("forecast");

  std::vector<mitigation::PlanInput> inputs;
  for (const auto& ej : instances_doc) {
    mitigation::PlanInput in;
    in.threat = enriched_from_json(ej);
    const auto& id = in.threat.instance.id;
    auto ait = assessments.find(id);
    auto fit = forecasts.find(id);
    if (ait == assessments.end() || fit == forecasts.end())
      throw StageFailure("mitigate", "missing prior stage output for " + id, {id});
    in.assessment = assessment_from_json(ait->second);
    in.forecast = forecast_from_json(fit->second);

    auto raw = mitigation::retrieve_mitigations(*rt.gw, *rt.store, in.threat, log);
    in.actions = mitigation::normalize_dedup(std::move(raw));

    AssetEntry asset;
    if (auto it = rt.cfg.assets.find(id); it != rt.cfg.assets.end()) asset = it->second;
    else if (auto def = rt.cfg.assets.find("default"); def != rt.cfg.assets.end())
      asset = def->second;
    in.risk_inputs = RiskInputs{in.assessment.base_score, in.forecast.probability,
                                asset.exposure, asset.criticality};
    in.constraints.disruption = asset.disruption;
    in.constraints.unpatchable = asset.unpatchable;
    in.constraints.dependencies = asset.dependencies;
    in.constraints.earliest_phase = asset.earliest_phase;
    inputs.push_back(std::move(in));
  }
  return inputs;
}

inline StageSummary run_mitigate(Runtime& rt) {
  mitigation::RetrievalLog log;
  auto inputs = build_plan_inputs(rt, log);
  if (inputs.empty()) {
    write_file(rt.cfg.output_dir / "mitigate" / "plan.json", dump_stable(json::array()));
    write_file(rt.cfg.output_dir / "mitigate" / "entries.json",
               dump_stable(json{{"entries", json::array()}, {"flags", json::array()}}));
    return {"mitigate", 0};
  }

  auto plan = mitigation::prioritize(inputs);
  if (rt.cfg.narrate_plan) mitigation::narrate_plan(*rt.gw, plan, log);

  UtcTime plan_date = rt.cfg.as_of.value_or(UtcTime{0});
  auto contract = mitigation::plan_contract_json(plan, plan_date, rt.cfg.phase_length_days);
  write_file(rt.cfg.output_dir / "mitigate" / "plan.json", dump_stable(contract));

  json detail = to_json(plan);
  json dropped = json::array();
  for (const auto& d : log.dropped) dropped.push_back(d);
  json warnings = json::array();
  for (const auto& w : log.warnings) warnings.push_back(w);
  detail["retrieval_dropped"] = dropped;
  detail["retrieval_warnings"] = warnings;
  write_file(rt.cfg.output_dir / "mitigate" / "entries.json", dump_stable(detail));
  return {"mitigate", static_cast<int>(plan.entries.size())};
}

inline std::vector<StageSummary> run_pipeline(Runtime& rt) {
  std::vector<StageSummary> summaries;
  summaries.push_back(run_triage(rt));
  summaries.push_back(run_assess(rt));
  summaries.push_back(run_forecast(rt));
  summaries.push_back(run_mitigate(rt));

  // Manifest: deterministic content digests; wall-clock data stays out of
  // the output tree.
  json files = json::object();
  for (const char* rel : {"triage/instances.json", "triage/report.json",
                          "assess/assessments.json", "forecast/forecasts.json",
                          "mitigate/plan.json", "mitigate/entries.json"}) {
    std::ifstream in(rt.cfg.output_dir / rel, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    files[rel] = sha256_hex(content);
  }
  json stages = json::object();
  for (const auto& s : summaries) stages[s.stage] = s.items;
  write_file(rt.cfg.output_dir / "manifest.json",
             dump_stable(json{{"stages", stages}, {"files", files}}));
  return summaries;
}

// ---------------------------------------------------------------------------
// Evaluation command
// ---------------------------------------------------------------------------

inline std::vector<evaluation::ReportRow> run_eval(Runtime& rt, const fs::path& dataset_path) {
  auto doc = read_json_or_fail(dataset_path, "eval");
  std::vector<evaluation::ReportRow> rows;

  if (doc.contains("static")) {
    const char* metric_names[] = {"AV", "AC", "PR", "UI", "S", "C", "I", "A"};
    std::map<std::string, int> hits, totals;
    std::vector<double> pred_scores, official_scores;
    for (const auto& cse : doc["static"]) {
      auto pred = parse_cvss_vector(cse.at("predicted_vector").get<std::string>());
      auto official = parse_cvss_vector(cse.at("official_vector").get<std::string>());
      auto fields = [&](const CvssVector& v) {
        using namespace cvss_abbrev;
        return std::vector<char>{av(v.av), ac(v.ac),  pr(v.pr),     ui(v.ui),
                                 scope(v.scope), impact(v.c), impact(v.i), impact(v.a)};
      };
      auto p = fields(pred), o = fields(official);
      for (int i = 0; i < 8; ++i) {
        ++totals[metric_names[i]];
        if (p[i] == o[i]) ++hits[metric_names[i]];
      }
      pred_scores.push_back(cvss::base_score(pred).base);
      official_scores.push_back(cvss::base_score(official).base);
    }
    for (const char* m : metric_names)
      if (totals[m] > 0)
        rows.push_back({"static", std::string("accuracy_") + m, "all",
                        static_cast<double>(hits[m]) / totals[m]});
    if (!pred_scores.empty())
      rows.push_back({"static", "score_rmse", "all",
                      evaluation::rmse(pred_scores, official_scores)});
  }

  if (doc.contains("forecast")) {
    std::map<std::string, std::vector<double>> pred_by_group, ref_by_group;
    std::map<std::string, std::vector<evaluation::Direction>> pdir, rdir;
    for (const auto& cse : doc["forecast"]) {
      auto group = cse.value("group", "all");
      double p = cse.at("predicted").get<double>();
      double r = cse.at("reference").get<double>();
      pred_by_group[group].push_back(p);
      ref_by_group[group].push_back(r);
      if (cse.contains("predicted_prev") && cse.contains("reference_prev")) {
        pdir[group].push_back(
            evaluation::direction_of(cse["predicted_prev"].get<double>(), p));
        rdir[group].push_back(
            evaluation::direction_of(cse["reference_prev"].get<double>(), r));
      }
    }
    for (const auto& [group, preds] : pred_by_group) {
      rows.push_back({"forecast", "rmse", group, evaluation::rmse(preds, ref_by_group[group])});
      if (!pdir[group].empty())
        rows.push_back({"forecast", "dir_acc", group,
                        evaluation::dir_acc(pdir[group], rdir[group])});
    }
  }

  if (doc.contains("ranking")) {
    for (const auto& cse : doc["ranking"]) {
      auto name = cse.value("name", "ranking");
      std::vector<std::string> pred, ref;
      for (const auto& x : cse.at("predicted_order")) pred.push_back(x.get<std::string>());
      for (const auto& x : cse.at("reference_order")) ref.push_back(x.get<std::string>());
      std::map<std::string, double> rel;
      for (auto it = cse.at("relevance").begin(); it != cse.at("relevance").end(); ++it)
        rel[it.key()] = it.value().get<double>();
      rows.push_back({"mitigation", "ndcg_at_5", name, evaluation::ndcg_at_k(pred, rel, 5)});
      rows.push_back({"mitigation", "kendall_tau", name, evaluation::kendall_tau(pred, ref)});
    }
  }

  if (doc.contains("trend_protocol")) {
    int seeds = doc["trend_protocol"].value("seeds", 100);
    for (auto trend : {evaluation::Trend::monotonic, evaluation::Trend::stable,
                       evaluation::Trend::abrupt}) {
      int ok = 0;
      for (int s = 0; s < seeds; ++s) {
        evaluation::SeriesParams params;
        params.noise = 0.01;
        params.decreasing = s % 2 == 1;
        auto series = evaluation::generate_series(trend, params,
                                                  rt.cfg.seed + static_cast<std::uint64_t>(s));
        if (evaluation::classify_trend(series) == trend) ++ok;
      }
      rows.push_back({"forecast", "trend_round_trip", evaluation::to_string(trend),
                      static_cast<double>(ok) / seeds});
    }
  }

  if (doc.contains("window_sweep")) {
    const auto& ws = doc["window_sweep"];
    std::vector<double> windows;
    for (const auto& w : ws.at("windows_days")) windows.push_back(w.get<double>());
    std::vector<evaluation::SweepCase> cases;
    for (const auto& cse : ws.at("cases")) {
      evaluation::SweepCase sc;
      sc.threat = enriched_from_json(cse.at("threat"));
      sc.assessment = assessment_from_json(cse.at("assessment"));
      sc.reference = cse.at("reference").get<double>();
      cases.push_back(std::move(sc));
    }
    if (!rt.cfg.as_of) throw StageFailure("eval", "window_sweep requires as_of");
    exploitation::ForecastOptions fopts;
    fopts.horizon_days = rt.cfg.horizon_days;
    fopts.base_rate = rt.cfg.base_rate;
    for (const auto& row :
         evaluation::window_sweep(*rt.store, cases, windows, *rt.cfg.as_of, fopts)) {
      rows.push_back({"forecast", "window_rmse", std::to_string(row.window_days) + "d",
                      row.rmse});
    }
  }

  write_file(rt.cfg.output_dir / "eval" / "report.csv", evaluation::to_csv(rows));
  write_file(rt.cfg.output_dir / "eval" / "report.json",
             dump_stable(evaluation::to_json(rows)));
  return rows;
}

}  // namespace threatrank::pipeline
