#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "c2p/error.hpp"

namespace c2p::eval {

/// Ranks starting at 1; ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "correlation series differ in length");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman rank correlation; nullopt when either series is constant.
inline std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::ShapeMismatch, "correlation series differ in length");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

struct TrendReport {
  std::size_t samples = 0;
  std::optional<double> visible_ratio_vs_mde;
  std::optional<double> initial_error_vs_mde;
  std::vector<double> visible_ratio, initial_error, mde;
};

inline TrendReport trend_analysis(std::vector<double> visible_ratio, std::vector<double> initial_error,
                                  std::vector<double> mde, std::size_t min_samples = 20) {
  if (visible_ratio.size() != mde.size() || initial_error.size() != mde.size())
    throw Error(ErrorCode::ShapeMismatch, "trend series differ in length");
  if (mde.size() < min_samples)
    throw Error(ErrorCode::InvalidConfig, "trend analysis needs >= " + std::to_string(min_samples) + " samples");
  TrendReport t;
  t.samples = mde.size();
  t.visible_ratio_vs_mde = spearman(visible_ratio, mde);
  t.initial_error_vs_mde = spearman(initial_error, mde);
  t.visible_ratio = std::move(visible_ratio);
  t.initial_error = std::move(initial_error);
  t.mde = std::move(mde);
  return t;
}

}  // namespace c2p::eval
