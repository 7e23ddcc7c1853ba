#pragma once

// Gaussian-copula generator for synthetic categorical event logs.
//
// A row is produced by drawing z ~ N(0, I), correlating it as x = L z with
// L Lᵀ = R, mapping each coordinate to a uniform through the standard normal
// CDF, and finally through the inverse CDF of that attribute's multinomial
// marginal.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "audfc/dataset.hpp"
#include "audfc/error.hpp"

namespace audfc {

using Matrix = Eigen::MatrixXd;

enum class MarginalShape { steep, flat, custom };
enum class CorrelationLevel { high, low };

inline constexpr double kSteepRatio = 0.5;

/// Probability vector over one attribute's values.
class MarginalSpec {
 public:
  MarginalSpec(std::vector<double> probabilities, MarginalShape shape = MarginalShape::custom)
      : probabilities_(std::move(probabilities)), shape_(shape) {
    if (probabilities_.empty()) throw ConfigError("marginal needs at least one value");
    double sum = 0.0;
    for (double p : probabilities_) {
      if (!(p >= 0.0)) throw ConfigError("marginal probabilities must be non-negative");
      sum += p;
      cumulative_.push_back(sum);
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("marginal probabilities must sum to 1");
    last_positive_ = 0;
    for (std::size_t j = 0; j < probabilities_.size(); ++j) {
      if (probabilities_[j] > 0.0) last_positive_ = j;
    }
  }

  /// p_j ∝ ratio^j, normalized: a few dominant values and a long tail.
  static MarginalSpec steep(std::size_t values, double ratio = kSteepRatio) {
    if (values == 0) throw ConfigError("marginal needs at least one value");
    std::vector<double> p(values);
    double w = 1.0;
    double total = 0.0;
    for (auto& x : p) {
      x = w;
      total += w;
      w *= ratio;
    }
    for (auto& x : p) x /= total;
    return MarginalSpec(std::move(p), MarginalShape::steep);
  }

  static MarginalSpec flat(std::size_t values) {
    if (values == 0) throw ConfigError("marginal needs at least one value");
    return MarginalSpec(std::vector<double>(values, 1.0 / static_cast<double>(values)),
                        MarginalShape::flat);
  }

  const std::vector<double>& probabilities() const noexcept { return probabilities_; }
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }
  std::size_t size() const noexcept { return probabilities_.size(); }
  MarginalShape shape() const noexcept { return shape_; }
  std::size_t last_positive() const noexcept { return last_positive_; }

  friend bool operator==(const MarginalSpec& a, const MarginalSpec& b) {
    return a.probabilities_ == b.probabilities_ && a.shape_ == b.shape_;
  }

 private:
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  MarginalShape shape_;
  std::size_t last_positive_ = 0;
};

/// Lower-triangular L with L Lᵀ = R. Positive semi-definite input is retried
/// with diagonal jitter 1e-10, 1e-9, ... up to 1e-6 (L then factors R + jitter·I).
inline Matrix cholesky(const Matrix& r) {
  if (r.rows() != r.cols()) throw InvalidCorrelation("correlation matrix must be square");
  const Eigen::Index k = r.rows();
  auto attempt = [&](double jitter, Matrix& l) {
    l = Matrix::Zero(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      double d = r(j, j) + jitter;
      for (Eigen::Index p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
      if (!(d > 0.0)) return false;
      l(j, j) = std::sqrt(d);
      for (Eigen::Index i = j + 1; i < k; ++i) {
        double s = r(i, j);
        for (Eigen::Index p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
        l(i, j) = s / l(j, j);
      }
    }
    return true;
  };
  Matrix l;
  if (attempt(0.0, l)) return l;
  for (double jitter = 1e-10; jitter <= 1e-6 * (1 + 1e-9); jitter *= 10) {
    if (attempt(jitter, l)) return l;
  }
  throw InvalidCorrelation("Cholesky factorization failed even with 1e-6 diagonal jitter");
}

/// Φ(x), accurate to double precision through erfc.
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Smallest index j with cumulative probability >= u. u = 0 gives 0; u = 1
/// gives the last value with positive mass.
inline std::size_t inverse_multinomial_cdf(double u, const MarginalSpec& m) {
  u = std::clamp(u, 0.0, 1.0);
  const auto& cum = m.cumulative();
  auto it = std::lower_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) return m.last_positive();
  return std::min(static_cast<std::size_t>(it - cum.begin()), m.last_positive());
}

/// Nearest-correlation repair: eigenvalues clipped at `floor`, then the
/// diagonal rescaled to one. Matrices already above the floor come back
/// unchanged.
inline Matrix nearest_correlation(const Matrix& r, double floor = 1e-6) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(r);
  if (eig.info() != Eigen::Success) throw InvalidCorrelation("eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() >= floor) return r;
  Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(floor);
  Matrix a = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::VectorXd inv_sqrt = a.diagonal().cwiseSqrt().cwiseInverse();
  Matrix c = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    c(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) c(j, i) = c(i, j);
  }
  return c;
}

/// Correlation matrix, marginals and the cached Cholesky factor.
class CopulaSpec {
 public:
  CopulaSpec(Matrix correlation, std::vector<MarginalSpec> marginals)
      : correlation_(std::move(correlation)), marginals_(std::move(marginals)) {
    const auto k = static_cast<Eigen::Index>(marginals_.size());
    if (k == 0) throw ConfigError("copula needs at least one attribute");
    if (correlation_.rows() != k || correlation_.cols() != k) {
      throw InvalidCorrelation("correlation matrix size does not match marginal count");
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      if (correlation_(i, i) != 1.0) throw InvalidCorrelation("correlation diagonal must be 1");
      for (Eigen::Index j = 0; j < k; ++j) {
        if (std::abs(correlation_(i, j) - correlation_(j, i)) > 1e-12) {
          throw InvalidCorrelation("correlation matrix must be symmetric");
        }
        if (std::abs(correlation_(i, j)) > 1.0) {
          throw InvalidCorrelation("correlation entries must lie in [-1, 1]");
        }
      }
    }
    cholesky_ = cholesky(correlation_);
  }

  std::size_t k() const noexcept { return marginals_.size(); }
  const Matrix& correlation() const noexcept { return correlation_; }
  const Matrix& cholesky_factor() const noexcept { return cholesky_; }
  const std::vector<MarginalSpec>& marginals() const noexcept { return marginals_; }

  /// Schema `attr1..attrk`, values `v1..vV`.
  AttributeSchema schema() const {
    std::vector<Attribute> attrs;
    for (std::size_t l = 0; l < k(); ++l) {
      Attribute a{"attr" + std::to_string(l + 1), {}};
      for (std::size_t v = 0; v < marginals_[l].size(); ++v) a.values.push_back("v" + std::to_string(v + 1));
      attrs.push_back(std::move(a));
    }
    return AttributeSchema(std::move(attrs));
  }

  friend bool operator==(const CopulaSpec& a, const CopulaSpec& b) {
    return a.correlation_ == b.correlation_ && a.marginals_ == b.marginals_;
  }

 private:
  Matrix correlation_;
  std::vector<MarginalSpec> marginals_;
  Matrix cholesky_;
};

/// Timestamps uniform over [start, end).
struct UniformTimestamps {
  Timestamp start = 0;
  Timestamp end = 0;
};

/// Arrival intensity ∝ 1 + amplitude·sin(2π·(t − start)/24h) over `days` days.
struct DailySineTimestamps {
  Timestamp start = 0;
  std::size_t days = 7;
  double amplitude = 0.5;
};

using TimestampPlan = std::variant<UniformTimestamps, DailySineTimestamps>;

namespace detail {

inline std::vector<Timestamp> draw_timestamps(const TimestampPlan& plan, std::size_t n,
                                              std::mt19937_64& rng) {
  std::vector<Timestamp> ts(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (const auto* u = std::get_if<UniformTimestamps>(&plan)) {
    if (u->end <= u->start) throw ConfigError("uniform timestamp plan needs start < end");
    const double span = static_cast<double>(u->end - u->start);
    for (auto& t : ts) {
      t = u->start + std::min(static_cast<Timestamp>(unit(rng) * span), u->end - u->start - 1);
    }
  } else {
    const auto& s = std::get<DailySineTimestamps>(plan);
    if (s.days == 0) throw ConfigError("daily-sine plan needs at least one day");
    if (!(s.amplitude >= 0.0 && s.amplitude < 1.0)) {
      throw ConfigError("daily-sine amplitude must lie in [0, 1)");
    }
    const Timestamp span = static_cast<Timestamp>(s.days) * kSecondsPerDay;
    for (auto& t : ts) {
      while (true) {
        const auto offset =
            std::min(static_cast<Timestamp>(unit(rng) * static_cast<double>(span)), span - 1);
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(offset % kSecondsPerDay) /
                             static_cast<double>(kSecondsPerDay);
        const double accept = (1.0 + s.amplitude * std::sin(phase)) / (1.0 + s.amplitude);
        if (unit(rng) < accept) {
          t = s.start + offset;
          break;
        }
      }
    }
  }
  std::sort(ts.begin(), ts.end());
  return ts;
}

}  // namespace detail

/// Draws `n` rows. Attribute values and timestamps use separate streams
/// derived from `seed`, so the rows do not depend on the timestamp plan.
inline TransactionLog generate(const CopulaSpec& spec, std::size_t n, std::uint64_t seed,
                               const TimestampPlan& plan) {
  if (n == 0) throw ConfigError("generate needs n >= 1");
  const std::size_t k = spec.k();
  std::seed_seq value_seq{seed, std::uint64_t{0x5eed0001}};
  std::seed_seq time_seq{seed, std::uint64_t{0x5eed0002}};
  std::mt19937_64 value_rng(value_seq);
  std::mt19937_64 time_rng(time_seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Matrix& l = spec.cholesky_factor();
  std::vector<std::uint32_t> values(n * k);
  std::vector<double> z(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& zi : z) zi = normal(value_rng);
    for (std::size_t i = 0; i < k; ++i) {
      double x = 0.0;
      for (std::size_t p = 0; p <= i; ++p) {
        x += l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) * z[p];
      }
      values[r * k + i] =
          static_cast<std::uint32_t>(inverse_multinomial_cdf(std_normal_cdf(x), spec.marginals()[i]));
    }
  }
  return TransactionLog(spec.schema(), detail::draw_timestamps(plan, n, time_rng), std::move(values));
}

/// Pairwise bias-uncorrected Cramér's V, sqrt(χ² / (n · min(r−1, c−1))),
/// over observed categories. Pairs involving a single-valued attribute get 0.
inline Matrix cramers_v_matrix(const TransactionLog& log) {
  if (log.size() < 2) throw ContractViolation("Cramér's V needs at least two rows");
  const std::size_t k = log.k();
  const double n = static_cast<double>(log.size());
  Matrix v = Matrix::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));

  std::vector<std::vector<double>> marg(k);
  for (std::size_t a = 0; a < k; ++a) {
    marg[a].assign(log.schema().value_count(a), 0.0);
    for (std::size_t r = 0; r < log.size(); ++r) marg[a][log.value(r, a)] += 1.0;
  }
  auto observed = [](const std::vector<double>& m) {
    return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](double c) { return c > 0; }));
  };

  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const std::size_t ri = observed(marg[i]);
      const std::size_t cj = observed(marg[j]);
      double cv = 0.0;
      if (ri > 1 && cj > 1) {
        const std::size_t ci = marg[j].size();
        std::vector<double> table(marg[i].size() * ci, 0.0);
        for (std::size_t r = 0; r < log.size(); ++r) {
          table[log.value(r, i) * ci + log.value(r, j)] += 1.0;
        }
        double chi2 = 0.0;
        for (std::size_t a = 0; a < marg[i].size(); ++a) {
          if (marg[i][a] == 0) continue;
          for (std::size_t b = 0; b < ci; ++b) {
            if (marg[j][b] == 0) continue;
            const double expected = marg[i][a] * marg[j][b] / n;
            const double d = table[a * ci + b] - expected;
            chi2 += d * d / expected;
          }
        }
        cv = std::min(1.0, std::sqrt(chi2 / (n * static_cast<double>(std::min(ri, cj) - 1))));
      }
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cv;
      v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = cv;
    }
  }
  return v;
}

inline constexpr std::size_t kDefaultValuesPerAttribute = 8;

struct ScenarioConfig {
  std::size_t k = 8;
  CorrelationLevel correlation = CorrelationLevel::high;
  MarginalShape marginal_shape = MarginalShape::steep;
  /// One entry per attribute; empty means kDefaultValuesPerAttribute each,
  /// a single entry applies to every attribute.
  std::vector<std::size_t> values_per_attribute;
  std::size_t rows = 10'000;
  std::uint64_t seed = 1;
  /// Lifts the k ∈ {8, 16, 32} restriction.
  bool any_k = false;
};

/// Builds the scenario's copula. Off-diagonals of the high-correlation
/// matrix are drawn from [0.2, 0.6] with the scenario seed and repaired to a
/// valid correlation matrix; the low-correlation matrix halves them.
inline CopulaSpec make_scenario(const ScenarioConfig& cfg) {
  if (!cfg.any_k && cfg.k != 8 && cfg.k != 16 && cfg.k != 32) {
    throw ConfigError("scenario attribute count must be 8, 16 or 32");
  }
  if (cfg.k == 0) throw ConfigError("scenario needs at least one attribute");
  if (cfg.marginal_shape == MarginalShape::custom) {
    throw ConfigError("scenario marginals must be steep or flat");
  }
  std::vector<std::size_t> sizes = cfg.values_per_attribute;
  if (sizes.empty()) sizes.assign(cfg.k, kDefaultValuesPerAttribute);
  if (sizes.size() == 1) sizes.assign(cfg.k, sizes.front());
  if (sizes.size() != cfg.k) throw ConfigError("values_per_attribute must have k entries");

  std::vector<MarginalSpec> marginals;
  for (auto v : sizes) {
    marginals.push_back(cfg.marginal_shape == MarginalShape::steep ? MarginalSpec::steep(v)
                                                                   : MarginalSpec::flat(v));
  }

  const auto k = static_cast<Eigen::Index>(cfg.k);
  std::seed_seq seq{cfg.seed, std::uint64_t{0xC0441A}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> rho(0.2, 0.6);
  Matrix r = Matrix::Identity(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) r(i, j) = r(j, i) = rho(rng);
  }
  r = nearest_correlation(r);
  if (cfg.correlation == CorrelationLevel::low) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        if (i != j) r(i, j) *= 0.5;
      }
    }
  }
  return CopulaSpec(std::move(r), std::move(marginals));
}

inline std::string_view to_string(MarginalShape s) {
  switch (s) {
    case MarginalShape::steep: return "steep";
    case MarginalShape::flat: return "flat";
    case MarginalShape::custom: return "custom";
  }
  return "?";
}

inline std::string_view to_string(CorrelationLevel c) {
  return c == CorrelationLevel::high ? "high" : "low";
}

}  // namespace audfc
