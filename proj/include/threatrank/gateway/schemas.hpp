#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace threatrank::gateway {

using json = nlohmann::json;

enum class SchemaId {
  disentangle,
  metric_classification,
  forecast,
  mitigation_retrieve,
  mitigation_prioritize
};

inline std::string to_string(SchemaId s) {
  switch (s) {
    case SchemaId::disentangle: return "disentangle";
    case SchemaId::metric_classification: return "metric-classification";
    case SchemaId::forecast: return "forecast";
    case SchemaId::mitigation_retrieve: return "mitigation-retrieve";
    case SchemaId::mitigation_prioritize: return "mitigation-prioritize";
  }
  return "?";
}

namespace schema_detail {

inline void require_string(const json& j, const char* key, std::vector<std::string>& errs,
                           bool allow_empty = true) {
  if (!j.contains(key) || !j[key].is_string())
    errs.push_back(std::string("'") + key + "' must be a string");
  else if (!allow_empty && j[key].get<std::string>().empty())
    errs.push_back(std::string("'") + key + "' must be non-empty");
}

inline void require_string_array(const json& j, const char* key, std::vector<std::string>& errs) {
  if (!j.contains(key) || !j[key].is_array()) {
    errs.push_back(std::string("'") + key + "' must be an array of strings");
    return;
  }
  for (const auto& e : j[key])
    if (!e.is_string()) {
      errs.push_back(std::string("'") + key + "' must contain only strings");
      return;
    }
}

}  // namespace schema_detail

// Validates a parsed response document against the declared schema.
// params carries per-request constraints (e.g. the metric's value domain).
// Returns the list of violations; empty means valid.
inline std::vector<std::string> validate_schema(SchemaId id, const json& doc, const json& params) {
  using namespace schema_detail;
  std::vector<std::string> errs;
  if (!doc.is_object()) {
    errs.push_back("response must be a JSON object");
    return errs;
  }
  switch (id) {
    case SchemaId::disentangle: {
      if (!doc.contains("instances") || !doc["instances"].is_array()) {
        errs.push_back("'instances' must be an array");
        break;
      }
      int idx = 0;
      for (const auto& inst : doc["instances"]) {
        std::string where = "instances[" + std::to_string(idx++) + "]: ";
        std::vector<std::string> sub;
        if (!inst.is_object()) {
          errs.push_back(where + "must be an object");
          continue;
        }
        require_string(inst, "vendor", sub);
        require_string(inst, "impact", sub);
        require_string_array(inst, "affected_components", sub);
        require_string_array(inst, "attack_patterns", sub);
        require_string_array(inst, "indicators", sub);
        if (inst.contains("campaign") && !inst["campaign"].is_string() &&
            !inst["campaign"].is_null())
          sub.push_back("'campaign' must be a string or null");
        for (auto& e : sub) errs.push_back(where + e);
      }
      break;
    }
    case SchemaId::metric_classification: {
      require_string(doc, "value", errs, /*allow_empty=*/false);
      require_string(doc, "rationale", errs);
      if (!doc.contains("confidence") || !doc["confidence"].is_number())
        errs.push_back("'confidence' must be a number");
      else {
        double c = doc["confidence"].get<double>();
        if (c < 0.0 || c > 1.0) errs.push_back("'confidence' must be in [0,1]");
      }
      if (doc.contains("necessary") && !doc["necessary"].is_boolean())
        errs.push_back("'necessary' must be a boolean");
      if (doc.contains("confirmed") && !doc["confirmed"].is_boolean())
        errs.push_back("'confirmed' must be a boolean");
      if (errs.empty() && params.contains("domain")) {
        bool found = false;
        for (const auto& d : params["domain"])
          if (d.get<std::string>() == doc["value"].get<std::string>()) found = true;
        if (!found)
          errs.push_back("'value' must be one of " + params["domain"].dump());
      }
      break;
    }
    case SchemaId::forecast: {
      if (!doc.contains("probability") || !doc["probability"].is_number())
        errs.push_back("'probability' must be a number");
      require_string(doc, "rationale", errs);
      break;
    }
    case SchemaId::mitigation_retrieve: {
      if (!doc.contains("actions") || !doc["actions"].is_array()) {
        errs.push_back("'actions' must be an array");
        break;
      }
      int idx = 0;
      for (const auto& a : doc["actions"]) {
        std::string where = "actions[" + std::to_string(idx++) + "]: ";
        if (!a.is_object()) {
          errs.push_back(where + "must be an object");
          continue;
        }
        std::vector<std::string> sub;
        require_string(a, "kind", sub, /*allow_empty=*/false);
        require_string(a, "title", sub, /*allow_empty=*/false);
        if (sub.empty()) {
          static const char* kinds[] = {"patch", "workaround", "mitigation-note",
                                        "vendor-advisory", "detection"};
          bool ok = false;
          for (auto* k : kinds)
            if (a["kind"].get<std::string>() == k) ok = true;
          if (!ok) sub.push_back("'kind' not in the action-kind enum");
        }
        for (auto& e : sub) errs.push_back(where + e);
      }
      break;
    }
    case SchemaId::mitigation_prioritize: {
      if (!doc.contains("justifications") || !doc["justifications"].is_array()) {
        errs.push_back("'justifications' must be an array");
        break;
      }
      int idx = 0;
      for (const auto& jentry : doc["justifications"]) {
        std::string where = "justifications[" + std::to_string(idx++) + "]: ";
        std::vector<std::string> sub;
        if (!jentry.is_object()) {
          errs.push_back(where + "must be an object");
          continue;
        }
        require_string(jentry, "target", sub, /*allow_empty=*/false);
        require_string(jentry, "justification", sub, /*allow_empty=*/false);
        for (auto& e : sub) errs.push_back(where + e);
      }
      break;
    }
  }
  return errs;
}

}  // namespace threatrank::gateway
