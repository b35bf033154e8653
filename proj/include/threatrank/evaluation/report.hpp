#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

namespace threatrank::evaluation {

// Evaluation results keyed by (stage, metric, condition), mirrored as CSV
// and JSON tables.
struct ReportRow {
  std::string stage;
  std::string metric;
  std::string condition;
  double value = 0.0;
};

inline std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out = "stage,metric,condition,value\n";
  for (const auto& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", r.value);
    out += r.stage + "," + r.metric + "," + r.condition + "," + buf + "\n";
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<ReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back(nlohmann::json{{"stage", r.stage},
                                 {"metric", r.metric},
                                 {"condition", r.condition},
                                 {"value", r.value}});
  return arr;
}

}  // namespace threatrank::evaluation
