#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "threatrank/common/time.hpp"

namespace threatrank::evaluation {

struct TooShort : std::runtime_error {
  explicit TooShort(const std::string& what) : std::runtime_error(what) {}
};
struct InvalidParams : std::runtime_error {
  explicit InvalidParams(const std::string& what) : std::runtime_error(what) {}
};

enum class Trend { monotonic, stable, abrupt };

inline std::string to_string(Trend t) {
  switch (t) {
    case Trend::monotonic: return "monotonic";
    case Trend::stable: return "stable";
    case Trend::abrupt: return "abrupt";
  }
  return "stable";
}

struct SeriesPoint {
  UtcTime at{};
  double probability = 0.0;
};

struct TrendThresholds {
  // A single step whose relative change exceeds this is an abrupt change.
  double abrupt_step = 3.0;
  // Fitted relative change over the series span within this band is stable.
  double stable_band = 0.10;
};

// abrupt if any single-step relative change exceeds the abrupt threshold;
// otherwise monotonic when the fitted slope's total relative change exceeds
// the stable band; otherwise stable.
inline Trend classify_trend(const std::vector<SeriesPoint>& series,
                            TrendThresholds th = {}) {
  if (series.size() < 3)
    throw TooShort("classify_trend needs >= 3 points, got " + std::to_string(series.size()));

  for (std::size_t i = 1; i < series.size(); ++i) {
    double prev = std::max(std::abs(series[i - 1].probability), 1e-6);
    double rel = std::abs(series[i].probability - series[i - 1].probability) / prev;
    if (rel > th.abrupt_step) return Trend::abrupt;
  }

  // Least-squares slope over (t, p).
  const double n = static_cast<double>(series.size());
  double t0 = static_cast<double>(series.front().at.secs);
  double sum_t = 0, sum_p = 0, sum_tt = 0, sum_tp = 0;
  for (const auto& pt : series) {
    double t = (static_cast<double>(pt.at.secs) - t0) / 86400.0;
    sum_t += t;
    sum_p += pt.probability;
    sum_tt += t * t;
    sum_tp += t * pt.probability;
  }
  double denom = n * sum_tt - sum_t * sum_t;
  double slope = denom == 0.0 ? 0.0 : (n * sum_tp - sum_t * sum_p) / denom;
  double span_days = (static_cast<double>(series.back().at.secs) -
                      static_cast<double>(series.front().at.secs)) /
                     86400.0;
  double mean = sum_p / n;
  double total_change = slope * span_days;
  double rel_change = std::abs(total_change) / std::max(std::abs(mean), 1e-6);
  return rel_change > th.stable_band ? Trend::monotonic : Trend::stable;
}

struct SeriesParams {
  std::size_t points = 12;
  UtcTime start{};
  double step_days = 7.0;
  double base = 0.05;          // starting probability
  double noise = 0.0;          // relative noise amplitude per point
  double drift = 0.5;          // monotonic: total relative change over the span
  bool decreasing = false;     // monotonic direction
  double jump_factor = 10.0;   // abrupt: multiplicative step size
};

// Reproducible synthetic series for the trend protocol; equal seeds yield
// identical series, and classify_trend(generate_series(t)) == t for in-range
// parameters.
inline std::vector<SeriesPoint> generate_series(Trend trend, const SeriesParams& params,
                                                std::uint64_t seed) {
  if (params.points < 3) throw InvalidParams("series needs >= 3 points");
  if (params.base <= 0.0 || params.base >= 1.0) throw InvalidParams("base must be in (0,1)");
  if (params.noise < 0.0 || params.noise > 0.02) throw InvalidParams("noise must be in [0,0.02]");
  if (params.step_days <= 0.0) throw InvalidParams("step_days must be positive");
  if (trend == Trend::monotonic) {
    if (params.drift < 0.2 || params.drift > 0.95)
      throw InvalidParams("monotonic drift must be in [0.2,0.95]");
    // Keep the largest per-step relative change well below the abrupt
    // threshold; for a decreasing ramp the last steps are the largest.
    double floor = params.decreasing ? 1.0 - params.drift : 1.0;
    double worst_step = params.drift / (static_cast<double>(params.points - 1) * floor);
    if (worst_step > 2.0)
      throw InvalidParams("monotonic ramp too steep for its point count");
  }
  if (trend == Trend::abrupt && params.jump_factor < 5.0)
    throw InvalidParams("abrupt jump factor must be >= 5");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<SeriesPoint> out;
  out.reserve(params.points);
  const std::size_t n = params.points;
  const std::size_t jump_at = n / 2;
  for (std::size_t idx = 0; idx < n; ++idx) {
    double frac = static_cast<double>(idx) / static_cast<double>(n - 1);
    double value = params.base;
    switch (trend) {
      case Trend::stable:
        break;
      case Trend::monotonic: {
        double dir = params.decreasing ? -1.0 : 1.0;
        value = params.base * (1.0 + dir * params.drift * frac);
        break;
      }
      case Trend::abrupt:
        value = idx >= jump_at ? params.base * params.jump_factor : params.base;
        break;
    }
    value *= 1.0 + params.noise * unit(rng);
    value = std::clamp(value, 1e-6, 1.0);
    out.push_back({UtcTime{params.start.secs + static_cast<std::int64_t>(
                                                   static_cast<double>(idx) *
                                                   params.step_days * 86400.0)},
                   value});
  }
  return out;
}

}  // namespace threatrank::evaluation
