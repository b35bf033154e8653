#pragma once

#include <vector>

#include "threatrank/evaluation/metrics.hpp"
#include "threatrank/exploitation/forecast.hpp"
#include "threatrank/knowledge/store.hpp"

namespace threatrank::evaluation {

struct SweepCase {
  EnrichedThreatInstance threat;
  StaticAssessment assessment;
  double reference = 0.0;  // reference probability at horizon end
};

struct SweepRow {
  double window_days = 0.0;
  double rmse = 0.0;
};

// Per-window forecast error: builds the narrative for each history window
// ending at as_of, forecasts with the fallback scorer, and reports RMSE
// against the references.
inline std::vector<SweepRow> window_sweep(knowledge::KnowledgeStore& store,
                                          const std::vector<SweepCase>& cases,
                                          const std::vector<double>& window_days, UtcTime as_of,
                                          const exploitation::ForecastOptions& opts = {}) {
  if (window_days.empty()) throw std::invalid_argument("window_sweep: no windows");
  std::vector<SweepRow> out;
  for (double days : window_days) {
    std::vector<double> pred, ref;
    for (const auto& c : cases) {
      auto narrative = exploitation::build_narrative(
          store, c.threat, {as_of.plus_days(-days), as_of});
      auto f = exploitation::fallback_forecast(c.threat, c.assessment, narrative, opts);
      pred.push_back(f.probability);
      ref.push_back(c.reference);
    }
    out.push_back({days, rmse(pred, ref)});
  }
  return out;
}

}  // namespace threatrank::evaluation
