#include "binpick/fbeta.hpp"

#include "binpick/error.hpp"

#include <algorithm>
#include <iterator>
#include <vector>

namespace binpick {

PointKey make_point_key(std::size_t instance, int i, int j) {
  constexpr int kBias = 1 << 15;
  return (static_cast<PointKey>(instance & 0xffffffffu) << 32) |
         (static_cast<PointKey>(static_cast<std::uint16_t>(i + kBias)) << 16) |
         static_cast<PointKey>(static_cast<std::uint16_t>(j + kBias));
}

double f_beta(double precision, double recall, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("f_beta: beta must be > 0");
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

double f_beta(std::span<const PointKey> predicted, std::span<const PointKey> truth, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("f_beta: beta must be > 0");
  std::vector<PointKey> p(predicted.begin(), predicted.end());
  std::vector<PointKey> t(truth.begin(), truth.end());
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (p.empty() && t.empty()) return 1.0;
  if (p.empty() || t.empty()) return 0.0;

  std::size_t tp = 0;
  auto a = p.begin();
  auto b = t.begin();
  while (a != p.end() && b != t.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++tp;
      ++a;
      ++b;
    }
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(p.size());
  const double recall = static_cast<double>(tp) / static_cast<double>(t.size());
  return f_beta(precision, recall, beta);
}

}  // namespace binpick
