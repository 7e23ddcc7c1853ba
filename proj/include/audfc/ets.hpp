#pragma once

// Additive Holt-Winters smoothing with a daily (24 h) season, fitted by grid
// search on in-sample one-step-ahead squared error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "audfc/dataset.hpp"
#include "audfc/error.hpp"

namespace audfc {

inline constexpr std::size_t kSeasonLength = 24;

enum class EtsKind {
  holt_winters,    // full grid-searched fit
  seasonal_naive,  // 24..47 points: repeat the last observed day
  mean,            // fewer than 24 points: flat mean
  zero,            // all-zero input
};

/// Final smoothing state plus the weights that produced it. `seasonal[i]`
/// applies to forecast step i + 1 (mod 24); components sum to zero.
struct EtsParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::size_t season_length = kSeasonLength;
  double level = 0.0;
  double trend = 0.0;
  std::array<double, kSeasonLength> seasonal{};
  double resid_sigma = 0.0;
  EtsKind kind = EtsKind::holt_winters;

  friend bool operator==(const EtsParams&, const EtsParams&) = default;
};

struct ForecastResult {
  std::size_t horizon = 0;
  std::vector<double> point;  // clamped at zero
  std::vector<double> raw;    // before clamping
  std::vector<double> sigma;
};

namespace detail {

struct HwState {
  double level;
  double trend;
  std::array<double, kSeasonLength> seasonal;  // indexed by t mod 24
};

// One pass of the recursion from `init`; returns SSE, stopping early once
// it reaches `bound`.
inline double hw_pass(std::span<const double> y, const HwState& init, double alpha, double beta,
                      double gamma, double bound, HwState* final_state = nullptr) {
  double level = init.level;
  double trend = init.trend;
  auto seasonal = init.seasonal;
  double sse = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double& s = seasonal[t % kSeasonLength];
    const double base = level + trend;
    const double e = y[t] - (base + s);
    sse += e * e;
    if (sse >= bound) return sse;
    const double new_level = alpha * (y[t] - s) + (1.0 - alpha) * base;
    trend = beta * (new_level - level) + (1.0 - beta) * trend;
    s = gamma * (y[t] - base) + (1.0 - gamma) * s;
    level = new_level;
  }
  if (final_state) *final_state = HwState{level, trend, seasonal};
  return sse;
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// State at t = -1: the line through the first two season means, with
// seasonal offsets averaged around that line and centered.
inline HwState initial_state(std::span<const double> y) {
  const double m1 = mean_of(y.subspan(0, kSeasonLength));
  const double m2 = mean_of(y.subspan(kSeasonLength, kSeasonLength));
  const double slope = (m2 - m1) / static_cast<double>(kSeasonLength);
  const double center = (static_cast<double>(kSeasonLength) - 1.0) / 2.0;
  auto line = [&](std::size_t t) { return m1 + slope * (static_cast<double>(t) - center); };

  HwState st{};
  std::array<double, kSeasonLength> sum{};
  std::array<std::size_t, kSeasonLength> cnt{};
  for (std::size_t t = 0; t < y.size(); ++t) {
    sum[t % kSeasonLength] += y[t] - line(t);
    ++cnt[t % kSeasonLength];
  }
  double avg = 0.0;
  for (std::size_t j = 0; j < kSeasonLength; ++j) {
    st.seasonal[j] = sum[j] / static_cast<double>(cnt[j]);
    avg += st.seasonal[j];
  }
  avg /= static_cast<double>(kSeasonLength);
  for (auto& s : st.seasonal) s -= avg;
  st.level = line(0) - slope + avg;
  st.trend = slope;
  return st;
}

inline void normalize_seasonal(EtsParams& p) {
  double m = 0.0;
  for (double s : p.seasonal) m += s;
  m /= static_cast<double>(kSeasonLength);
  for (auto& s : p.seasonal) s -= m;
  p.level += m;
}

}  // namespace detail

/// Grid step for alpha, beta and gamma.
inline constexpr double kEtsGridStep = 0.05;

/// Fits additive Holt-Winters by exhaustive search over
/// alpha, beta, gamma ∈ {0, 0.05, ..., 1}; the first minimum in
/// (alpha, beta, gamma) order wins. Shorter series fall back as described
/// by EtsKind.
inline EtsParams fit_ets(std::span<const double> y) {
  if (y.empty()) throw ContractViolation("fit_ets needs at least one observation");
  EtsParams p;
  bool all_zero = true;
  for (double v : y) all_zero = all_zero && v == 0.0;
  if (all_zero) {
    p.kind = EtsKind::zero;
    return p;
  }

  if (y.size() < kSeasonLength) {
    p.kind = EtsKind::mean;
    p.level = detail::mean_of(y);
    double ss = 0.0;
    for (double v : y) ss += (v - p.level) * (v - p.level);
    p.resid_sigma = std::sqrt(ss / static_cast<double>(y.size()));
    return p;
  }

  if (y.size() < 2 * kSeasonLength) {
    p.kind = EtsKind::seasonal_naive;
    const std::size_t n = y.size();
    const auto last = y.subspan(n - kSeasonLength);
    p.level = detail::mean_of(last);
    for (std::size_t i = 0; i < kSeasonLength; ++i) {
      // Step i + 1 lands on position n + i, whose previous-day value is y[n + i - 24].
      p.seasonal[i] = last[i] - p.level;
    }
    double ss = 0.0;
    for (std::size_t t = kSeasonLength; t < n; ++t) {
      const double e = y[t] - y[t - kSeasonLength];
      ss += e * e;
    }
    if (n > kSeasonLength) p.resid_sigma = std::sqrt(ss / static_cast<double>(n - kSeasonLength));
    return p;
  }

  const detail::HwState init = detail::initial_state(y);
  constexpr int kSteps = 20;
  double best = std::numeric_limits<double>::infinity();
  int ba = 0, bb = 0, bg = 0;
  for (int a = 0; a <= kSteps; ++a) {
    for (int b = 0; b <= kSteps; ++b) {
      for (int g = 0; g <= kSteps; ++g) {
        const double sse = detail::hw_pass(y, init, a * kEtsGridStep, b * kEtsGridStep,
                                           g * kEtsGridStep, best);
        if (sse < best) {
          best = sse;
          ba = a;
          bb = b;
          bg = g;
        }
      }
    }
  }
  p.alpha = ba * kEtsGridStep;
  p.beta = bb * kEtsGridStep;
  p.gamma = bg * kEtsGridStep;
  detail::HwState fin{};
  const double sse = detail::hw_pass(y, init, p.alpha, p.beta, p.gamma,
                                     std::numeric_limits<double>::infinity(), &fin);
  p.level = fin.level;
  p.trend = fin.trend;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < kSeasonLength; ++i) p.seasonal[i] = fin.seasonal[(n + i) % kSeasonLength];
  detail::normalize_seasonal(p);
  p.resid_sigma = std::sqrt(sse / static_cast<double>(n));
  return p;
}

inline EtsParams fit_ets(const HourlySeries& series) { return fit_ets(std::span<const double>(series.values)); }

/// h-step forecasts; sigma grows as resid_sigma·√step.
inline ForecastResult forecast(const EtsParams& p, std::size_t h) {
  if (h == 0) throw ContractViolation("forecast horizon must be at least 1");
  ForecastResult r;
  r.horizon = h;
  r.point.resize(h);
  r.raw.resize(h);
  r.sigma.resize(h);
  for (std::size_t i = 0; i < h; ++i) {
    const double step = static_cast<double>(i + 1);
    r.raw[i] = p.level + step * p.trend + p.seasonal[i % kSeasonLength];
    r.point[i] = std::max(0.0, r.raw[i]);
    r.sigma[i] = p.resid_sigma * std::sqrt(step);
  }
  return r;
}

/// 100 · mean(|a − p| / a) over hours with nonzero actuals.
inline double mape(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw ContractViolation("mape needs equal lengths");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) continue;
    sum += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
    ++used;
  }
  if (used == 0) throw UndefinedMape("every actual value is zero");
  return 100.0 * sum / static_cast<double>(used);
}

/// `hour_index,count` lines under a header.
inline void write_series(std::ostream& out, const HourlySeries& s) {
  out << "hour_index,count\n";
  char buf[64];
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", s.values[i]);
    out << s.start_hour + static_cast<std::int64_t>(i) << ',' << buf << '\n';
  }
}

inline HourlySeries read_series(std::istream& in) {
  HourlySeries s;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "hour_index,count") throw ParseError("expected header 'hour_index,count'", lineno);
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'hour_index,count'", lineno);
    std::int64_t hour = 0;
    double count = 0.0;
    try {
      std::size_t used = 0;
      hour = std::stoll(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("hour");
      const auto rest = line.substr(comma + 1);
      count = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("count");
    } catch (const std::logic_error&) {
      throw ParseError("malformed series line", lineno);
    }
    if (s.values.empty()) {
      s.start_hour = hour;
    } else if (hour != s.start_hour + static_cast<std::int64_t>(s.size())) {
      throw ParseError("hour indices must be contiguous", lineno);
    }
    s.values.push_back(count);
  }
  if (!header) throw ParseError("empty series file");
  return s;
}

}  // namespace audfc
