#pragma once

#include <vector>

#include "threatrank/core/cvss_vector.hpp"
#include "threatrank/core/types.hpp"
#include "threatrank/cvss/engine.hpp"

namespace threatrank {

struct StaticAssessment {
  CvssVector vector;
  double base_score = 0.0;  // one decimal, always from the scoring engine
  cvss::Rating rating = cvss::Rating::none;
  std::vector<MetricDecision> per_metric_decisions;
  cvss::ScoreBreakdown breakdown;  // diagnostics trace
};

}  // namespace threatrank
