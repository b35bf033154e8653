// threatrank: batch operator surface for the threat prioritization pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "threatrank/demo/demo.hpp"
#include "threatrank/gateway/http_backend.hpp"
#include "threatrank/pipeline/pipeline.hpp"

#include <httplib.h>

namespace tp = threatrank::pipeline;
using threatrank::json;

namespace {

// Minimal GET fetcher for live knowledge sources.
std::optional<std::string> http_get(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return std::nullopt;
  auto path_start = url.find('/', scheme_end + 3);
  std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_read_timeout(60, 0);
  auto res = client.Get(path);
  if (!res || res->status != 200) return std::nullopt;
  return res->body;
}

struct CommonFlags {
  std::string config_path;
  std::optional<int> horizon;
  std::optional<double> window;
  bool offline = false;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool record_pending = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("-c,--config", flags.config_path, "config file (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--horizon", flags.horizon, "forecast horizon in days (30 or 90)")
      ->check(CLI::IsMember({30, 90}));
  cmd->add_option("--window", flags.window, "history window in days");
  cmd->add_flag("--offline", flags.offline, "force fixture mode (no network)");
  cmd->add_option("--seed", flags.seed, "seed for synthetic series");
  cmd->add_option("--out", flags.out_dir, "output directory override");
  cmd->add_flag("--record-pending", flags.record_pending,
                "record pending prompts when a stub fixture is missing");
}

tp::Runtime make_runtime(const CommonFlags& flags) {
  auto cfg = tp::Config::load(flags.config_path);
  if (flags.horizon) cfg.horizon_days = *flags.horizon;
  if (flags.window) cfg.window_days = *flags.window;
  if (flags.offline) cfg.offline = true;
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
  cfg.validate();

  std::shared_ptr<threatrank::gateway::CompletionBackend> backend;
  if (cfg.backend == "stub") {
    backend = std::make_shared<threatrank::gateway::StubBackend>(cfg.gateway_fixture_dir,
                                                                 flags.record_pending);
  } else {
    backend = std::make_shared<threatrank::gateway::HttpBackend>();
  }
  tp::Fetcher fetcher;
  if (!cfg.offline) {
    fetcher = [](const std::string& url) {
      threatrank::knowledge::count_network_operation(url);
      return http_get(url);
    };
  }
  return tp::make_runtime(cfg, backend, fetcher);
}

int fail_with(const std::string& type, const std::string& message,
              const std::string& stage = "", const std::vector<std::string>& ids = {},
              int code = 1) {
  json err{{"error", json{{"type", type}, {"message", message}}}};
  if (!stage.empty()) err["error"]["stage"] = stage;
  if (!ids.empty()) err["error"]["ids"] = ids;
  std::cerr << err.dump() << "\n";
  return code;
}

void print_summaries(const std::vector<tp::StageSummary>& summaries) {
  for (const auto& s : summaries)
    std::cerr << s.stage << ": " << s.items << " item(s)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threat prioritization pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* cmd_triage = app.add_subcommand("triage", "separate and enrich raw incidents");
  add_common(cmd_triage, flags);
  auto* cmd_assess = app.add_subcommand("assess", "score triaged instances");
  add_common(cmd_assess, flags);
  auto* cmd_forecast = app.add_subcommand("forecast", "forecast exploitation likelihood");
  add_common(cmd_forecast, flags);
  auto* cmd_mitigate = app.add_subcommand("mitigate", "retrieve and prioritize mitigations");
  add_common(cmd_mitigate, flags);
  auto* cmd_pipeline = app.add_subcommand("pipeline", "run all four stages");
  add_common(cmd_pipeline, flags);

  auto* cmd_eval = app.add_subcommand("eval", "run the evaluation harness");
  add_common(cmd_eval, flags);
  std::string dataset;
  cmd_eval->add_option("--dataset", dataset, "labeled dataset (JSON)");

  auto* cmd_fixtures = app.add_subcommand("fixtures", "record or refresh fixtures");
  std::string demo_dir;
  bool from_cache = false;
  std::string fixtures_config;
  cmd_fixtures->add_option("--demo", demo_dir,
                           "write the self-contained demo workspace to this directory");
  cmd_fixtures->add_flag("--from-cache", from_cache,
                         "promote cached knowledge lookups into the fixture directory");
  cmd_fixtures->add_option("-c,--config", fixtures_config, "config file (for --from-cache)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_fixtures->parsed()) {
      if (!demo_dir.empty()) {
        auto config_path = threatrank::demo::write_demo(demo_dir);
        std::cerr << "demo workspace written; config: " << config_path.string() << "\n";
        return 0;
      }
      if (from_cache) {
        if (fixtures_config.empty())
          return fail_with("ConfigError", "--from-cache requires --config", "", {}, 2);
        auto cfg = tp::Config::load(fixtures_config);
        if (cfg.cache_dir.empty() || cfg.fixture_dir.empty())
          return fail_with("ConfigError", "config must set cache_dir and fixture_dir", "", {}, 2);
        // Cache entries are {source, key, payload}; replaying them into the
        // fixture layout makes previously live lookups available offline.
        int promoted = 0;
        for (const auto& entry : std::filesystem::directory_iterator(cfg.cache_dir)) {
          if (entry.path().extension() != ".json") continue;
          std::ifstream in(entry.path());
          auto doc = json::parse(in, nullptr, false);
          if (doc.is_discarded() || !doc.contains("source") || !doc.contains("key") ||
              !doc.contains("payload"))
            continue;
          auto target = cfg.fixture_dir / doc["source"].get<std::string>() /
                        (doc["key"].get<std::string>() + ".json");
          std::filesystem::create_directories(target.parent_path());
          std::ofstream out(target);
          out << doc["payload"].dump(2) << "\n";
          ++promoted;
        }
        std::cerr << "promoted " << promoted << " cached record(s) into "
                  << cfg.fixture_dir.string() << "\n";
        return 0;
      }
      return fail_with("ConfigError", "fixtures requires --demo <dir> or --from-cache", "", {},
                       2);
    }

    auto rt = make_runtime(flags);
    std::vector<tp::StageSummary> summaries;
    if (cmd_triage->parsed()) summaries.push_back(tp::run_triage(rt));
    else if (cmd_assess->parsed()) summaries.push_back(tp::run_assess(rt));
    else if (cmd_forecast->parsed()) summaries.push_back(tp::run_forecast(rt));
    else if (cmd_mitigate->parsed()) summaries.push_back(tp::run_mitigate(rt));
    else if (cmd_pipeline->parsed()) summaries = tp::run_pipeline(rt);
    else if (cmd_eval->parsed()) {
      std::filesystem::path ds = dataset.empty() ? rt.cfg.eval_dataset
                                                 : std::filesystem::path(dataset);
      if (ds.empty())
        return fail_with("ConfigError", "eval requires --dataset or config eval_dataset", "",
                         {}, 2);
      auto rows = tp::run_eval(rt, ds);
      std::cerr << "eval: " << rows.size() << " row(s) -> "
                << (rt.cfg.output_dir / "eval" / "report.csv").string() << "\n";
      return 0;
    }
    print_summaries(summaries);
    return 0;
  } catch (const tp::ConfigError& e) {
    return fail_with("ConfigError", e.what(), "", {}, 2);
  } catch (const tp::StageFailure& e) {
    return fail_with("StageFailure", e.what(), e.stage, e.ids, 1);
  } catch (const std::exception& e) {
    return fail_with("Error", e.what(), "", {}, 1);
  }
}
