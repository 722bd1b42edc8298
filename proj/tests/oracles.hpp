#pragma once

// Direct transcriptions of the protocol formulas, written against the formula
// text rather than the library code. Long double throughout; different
// algebraic forms where one exists (pairwise variance, exp/log power).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

struct Vote {
  double score;
  double rep;
};

inline double cs(double own, const std::vector<Vote>& others, double r_max) {
  if (others.empty()) return 0.0;
  std::vector<long double> all{own};
  for (const auto& o : others) all.push_back(o.score);
  const long double hi = *std::max_element(all.begin(), all.end());
  const long double lo = *std::min_element(all.begin(), all.end());
  if (hi == lo) return 0.0;
  long double num = 0;
  for (const auto& o : others) num += std::fabs(static_cast<long double>(own) - o.score) * o.rep;
  const long double n = static_cast<long double>(others.size()) + 1;
  const long double v = num / ((n - 1) * (hi - lo) * r_max);
  return static_cast<double>(std::clamp<long double>(v, 0, 1));
}

// sqrt( (1 / 2n^2) * sum_i sum_j (x_i - x_j)^2 ), equal to the population SD.
inline double cf(const std::vector<double>& xs) {
  const long double n = static_cast<long double>(xs.size());
  long double acc = 0;
  for (double a : xs) {
    for (double b : xs) acc += (static_cast<long double>(a) - b) * (static_cast<long double>(a) - b);
  }
  return static_cast<double>(std::sqrt(acc / (2 * n * n)));
}

struct Feedback {
  double acc;
  double rep;
};

inline double prompt_rep(double r_k, const std::vector<Vote>& vs, const std::vector<Feedback>& fs) {
  const long double n = static_cast<long double>(vs.size());
  const long double m = static_cast<long double>(fs.size());
  long double mean_v = 0;
  for (const auto& v : vs) mean_v += static_cast<long double>(v.score) * v.rep;
  if (n > 0) mean_v /= n;
  long double mean_f = 0;
  for (const auto& f : fs) mean_f += static_cast<long double>(f.acc) * f.rep;
  if (m > 0) mean_f /= m;
  std::vector<double> scores;
  for (const auto& v : vs) scores.push_back(v.score);
  const long double risk = scores.size() < 2 ? 0 : cf(scores);
  const long double r = (r_k + n * mean_v + m * mean_f) / (n + m + 1) - risk;
  return static_cast<double>(std::clamp<long double>(r, 0, 1));
}

inline double ema(double prev, double target, double alpha) {
  const long double r = static_cast<long double>(alpha) * target + (1 - static_cast<long double>(alpha)) * prev;
  return static_cast<double>(std::clamp<long double>(r, 0, 1));
}

inline double impact(double r, double beta, std::uint64_t a_p, std::uint64_t a_v) {
  return static_cast<double>(static_cast<long double>(r) *
                             (static_cast<long double>(beta) * a_p + (1 - static_cast<long double>(beta)) * a_v));
}

inline std::map<std::string, double> resale(double pool, const std::map<std::string, double>& reps) {
  long double total = 0;
  for (const auto& [id, r] : reps) total += r;
  std::map<std::string, double> out;
  for (const auto& [id, r] : reps) out[id] = static_cast<double>(pool * (r / total));
  return out;
}

inline double priority(std::uint64_t f, double cost, double size, double r, double r_b) {
  long double base = static_cast<long double>(f) * cost / size;
  if (base < 1) base = 1;
  return static_cast<double>(std::exp((static_cast<long double>(r) - r_b) * std::log(base)));
}

inline double uniform(std::mt19937_64& g, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t count(std::mt19937_64& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

}  // namespace oracle
