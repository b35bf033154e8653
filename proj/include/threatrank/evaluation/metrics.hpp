#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace threatrank::evaluation {

struct LengthMismatch : std::runtime_error {
  explicit LengthMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct IdMismatch : std::runtime_error {
  explicit IdMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Canonical form used before set comparison: lowercased and trimmed.
// CVE / technique ids survive this unchanged apart from case.
inline std::string canonical_item(std::string s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  s = s.substr(b, e - b);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// F1 over canonicalized sets. Both empty -> 1.0 by convention (triage can
// legitimately output empty sets); exactly one empty -> 0.0.
inline double f1_set(const std::set<std::string>& predicted, const std::set<std::string>& reference) {
  if (predicted.empty() && reference.empty()) return 1.0;
  if (predicted.empty() || reference.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& p : predicted)
    if (reference.count(p)) ++inter;
  if (inter == 0) return 0.0;
  double precision = static_cast<double>(inter) / predicted.size();
  double recall = static_cast<double>(inter) / reference.size();
  return 2.0 * precision * recall / (precision + recall);
}

inline double f1_set_raw(const std::vector<std::string>& predicted,
                         const std::vector<std::string>& reference) {
  std::set<std::string> p, r;
  for (const auto& s : predicted) p.insert(canonical_item(s));
  for (const auto& s : reference) r.insert(canonical_item(s));
  return f1_set(p, r);
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& ref) {
  if (pred.size() != ref.size())
    throw LengthMismatch("rmse: " + std::to_string(pred.size()) + " vs " + std::to_string(ref.size()));
  if (pred.empty()) throw LengthMismatch("rmse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - ref[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

enum class Direction { inc, dec, stable };

inline std::string to_string(Direction d) {
  switch (d) {
    case Direction::inc: return "inc";
    case Direction::dec: return "dec";
    case Direction::stable: return "stable";
  }
  return "stable";
}

// Relative stable band; defaults match the shipped configuration.
inline constexpr double kDirStableBand = 0.05;

inline Direction direction_of(double p_now, double p_later, double stable_band = kDirStableBand) {
  double base = std::max(std::abs(p_now), 1e-9);
  double rel = (p_later - p_now) / base;
  if (std::abs(rel) <= stable_band) return Direction::stable;
  return rel > 0 ? Direction::inc : Direction::dec;
}

inline double dir_acc(const std::vector<Direction>& pred, const std::vector<Direction>& ref) {
  if (pred.size() != ref.size())
    throw LengthMismatch("dir_acc: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(ref.size()));
  if (pred.empty()) throw LengthMismatch("dir_acc: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == ref[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// NDCG@k with linear gain and log2(i+1) discount (1-based ranks).
// All-zero relevance yields 1.0 by convention.
inline double ndcg_at_k(const std::vector<std::string>& ranking,
                        const std::map<std::string, double>& relevance, std::size_t k) {
  if (k == 0) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  auto grade = [&](const std::string& id) {
    auto it = relevance.find(id);
    return it == relevance.end() ? 0.0 : it->second;
  };
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i)
    dcg += grade(ranking[i]) / std::log2(static_cast<double>(i) + 2.0);

  std::vector<double> grades;
  grades.reserve(relevance.size());
  for (const auto& [id, g] : relevance) grades.push_back(g);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i)
    idcg += grades[i] / std::log2(static_cast<double>(i) + 2.0);

  if (idcg <= 0.0) return 1.0;
  return dcg / idcg;
}

// Kendall's tau-a over two strict rankings of the same id set:
// (concordant - discordant) / (n(n-1)/2).
inline double kendall_tau(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw IdMismatch("kendall_tau: size mismatch");
  std::map<std::string, std::size_t> pos_a, pos_b;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!pos_a.emplace(a[i], i).second) throw IdMismatch("kendall_tau: duplicate id '" + a[i] + "'");
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!pos_b.emplace(b[i], i).second) throw IdMismatch("kendall_tau: duplicate id '" + b[i] + "'");
  for (const auto& [id, _] : pos_a)
    if (!pos_b.count(id)) throw IdMismatch("kendall_tau: id '" + id + "' missing from second ranking");

  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::int64_t concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto bi = pos_b.at(a[i]);
      auto bj = pos_b.at(a[j]);
      if (bi < bj)
        ++concordant;
      else
        ++discordant;
    }
  }
  return static_cast<double>(concordant - discordant) /
         (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace threatrank::evaluation
