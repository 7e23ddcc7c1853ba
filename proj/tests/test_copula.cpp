#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "audfc/copula.hpp"
#include "audfc/csv.hpp"
#include "test_util.hpp"

using namespace audfc;

namespace {

Matrix two_by_two(double rho) {
  Matrix r(2, 2);
  r << 1.0, rho, rho, 1.0;
  return r;
}

const TimestampPlan kPlan = UniformTimestamps{0, 7 * kSecondsPerDay};

// χ² = n(Σ O²/(rᵢcⱼ) − 1), an algebraically separate route from Σ(O−E)²/E.
double chi2_alt(const TransactionLog& log, std::size_t i, std::size_t j) {
  const std::size_t vi = log.schema().value_count(i);
  const std::size_t vj = log.schema().value_count(j);
  std::vector<double> o(vi * vj, 0), ri(vi, 0), cj(vj, 0);
  for (std::size_t r = 0; r < log.size(); ++r) {
    o[log.value(r, i) * vj + log.value(r, j)] += 1;
    ri[log.value(r, i)] += 1;
    cj[log.value(r, j)] += 1;
  }
  double s = 0;
  for (std::size_t a = 0; a < vi; ++a) {
    for (std::size_t b = 0; b < vj; ++b) {
      if (ri[a] > 0 && cj[b] > 0) s += o[a * vj + b] * o[a * vj + b] / (ri[a] * cj[b]);
    }
  }
  return static_cast<double>(log.size()) * (s - 1.0);
}

std::vector<double> frequencies(const TransactionLog& log, std::size_t a) {
  std::vector<double> f(log.schema().value_count(a), 0.0);
  for (std::size_t r = 0; r < log.size(); ++r) f[log.value(r, a)] += 1.0;
  for (auto& x : f) x /= static_cast<double>(log.size());
  return f;
}

}  // namespace

TEST(Cholesky, ClosedForms) {
  EXPECT_TRUE(cholesky(Matrix::Identity(5, 5)).isApprox(Matrix::Identity(5, 5), 0.0));
  Matrix l = cholesky(two_by_two(0.5));
  EXPECT_DOUBLE_EQ(l(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(l(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(l(1, 0), 0.5);
  EXPECT_NEAR(l(1, 1), std::sqrt(0.75), 1e-15);
}

TEST(Cholesky, RandomSpdReconstructs) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(8, 8);
    for (Eigen::Index i = 0; i < 8; ++i) {
      for (Eigen::Index j = 0; j < 8; ++j) a(i, j) = z(rng);
    }
    Matrix s = a * a.transpose() + Matrix::Identity(8, 8);
    Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    Matrix r = d.asDiagonal() * s * d.asDiagonal();
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    Matrix l = cholesky(r);
    EXPECT_TRUE(l.isLowerTriangular());
    EXPECT_LE((l * l.transpose() - r).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Cholesky, SemiDefiniteUsesJitterAndIndefiniteFails) {
  Matrix l = cholesky(two_by_two(1.0));
  EXPECT_LE((l * l.transpose() - two_by_two(1.0)).cwiseAbs().maxCoeff(), 1e-6);
  Matrix bad(3, 3);
  bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  EXPECT_THROW(cholesky(bad), InvalidCorrelation);
}

TEST(StdNormalCdf, AgainstReferenceDistribution) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(1.959964), 0.975, 1e-6);
  const boost::math::normal_distribution<double> ref;
  for (double x = -8.0; x <= 8.0; x += 0.01) {
    EXPECT_NEAR(std_normal_cdf(x), boost::math::cdf(ref, x), 1e-7);
    EXPECT_NEAR(std_normal_cdf(-x), 1.0 - std_normal_cdf(x), 1e-15);
  }
}

TEST(StdNormalCdf, MatchesNumericalIntegration) {
  // Composite Simpson on the density from 0 to x.
  auto simpson = [](double x) {
    const int m = 2000;
    const double h = x / m;
    auto f = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * std::numbers::pi); };
    double s = f(0) + f(x);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4 : 2) * f(i * h);
    return 0.5 + s * h / 3;
  };
  for (double x : {0.3, 1.0, 1.959964, 2.5, 4.0}) EXPECT_NEAR(std_normal_cdf(x), simpson(x), 1e-9);
}

TEST(InverseMultinomialCdf, Examples) {
  const auto flat = MarginalSpec::flat(4);
  EXPECT_EQ(inverse_multinomial_cdf(0.6, flat), 2u);
  const MarginalSpec steep({0.7, 0.2, 0.1}, MarginalShape::steep);
  EXPECT_EQ(inverse_multinomial_cdf(0.85, steep), 1u);
  EXPECT_EQ(inverse_multinomial_cdf(0.7, steep), 0u);
  EXPECT_EQ(inverse_multinomial_cdf(0.0, steep), 0u);
  EXPECT_EQ(inverse_multinomial_cdf(1.0, steep), 2u);
  const MarginalSpec tail({0.5, 0.5, 0.0, 0.0});
  EXPECT_EQ(inverse_multinomial_cdf(1.0, tail), 1u);
  const MarginalSpec head({0.0, 1.0});
  EXPECT_EQ(inverse_multinomial_cdf(0.3, head), 1u);
}

TEST(InverseMultinomialCdf, SmallestIndexReachingU) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + trial % 7);
    double total = 0;
    for (auto& x : p) total += (x = u01(rng));
    for (auto& x : p) x /= total;
    const MarginalSpec m(p);
    for (int s = 0; s < 50; ++s) {
      const double u = u01(rng);
      const auto j = inverse_multinomial_cdf(u, m);
      double below = 0;
      for (std::size_t i = 0; i < j; ++i) below += p[i];
      EXPECT_LT(below, u + 1e-12);
      EXPECT_GE(below + p[j], u - 1e-12);
    }
  }
}

TEST(MarginalSpec, ShapesAndValidation) {
  const auto s = MarginalSpec::steep(3);
  EXPECT_NEAR(s.probabilities()[0], 4.0 / 7, 1e-15);
  EXPECT_NEAR(s.probabilities()[1], 2.0 / 7, 1e-15);
  EXPECT_NEAR(s.probabilities()[2], 1.0 / 7, 1e-15);
  EXPECT_EQ(MarginalSpec::flat(5).probabilities(), std::vector<double>(5, 0.2));
  EXPECT_THROW(MarginalSpec({0.5, 0.6}), ConfigError);
  EXPECT_THROW(MarginalSpec({1.2, -0.2}), ConfigError);
  EXPECT_THROW(MarginalSpec(std::vector<double>{}), ConfigError);
}

TEST(CopulaSpec, Validation) {
  std::vector<MarginalSpec> two{MarginalSpec::flat(2), MarginalSpec::flat(2)};
  EXPECT_NO_THROW(CopulaSpec(two_by_two(0.3), two));
  Matrix asym = two_by_two(0.3);
  asym(0, 1) = 0.4;
  EXPECT_THROW(CopulaSpec(asym, two), InvalidCorrelation);
  Matrix diag = two_by_two(0.3);
  diag(1, 1) = 0.9;
  EXPECT_THROW(CopulaSpec(diag, two), InvalidCorrelation);
  EXPECT_THROW(CopulaSpec(two_by_two(1.5), two), InvalidCorrelation);
  EXPECT_THROW(CopulaSpec(Matrix::Identity(3, 3), two), InvalidCorrelation);
}

TEST(NearestCorrelation, RepairsIndefiniteMatrix) {
  Matrix bad(3, 3);
  bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  Matrix c = nearest_correlation(bad);
  EXPECT_EQ(c, c.transpose());
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(c(i, i), 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  EXPECT_NO_THROW(cholesky(c));
  EXPECT_EQ(nearest_correlation(two_by_two(0.4)), two_by_two(0.4));
}

TEST(MakeScenario, LowHalvesHighExactly) {
  for (std::size_t k : {8u, 16u, 32u}) {
    for (auto shape : {MarginalShape::flat, MarginalShape::steep}) {
      ScenarioConfig cfg;
      cfg.k = k;
      cfg.marginal_shape = shape;
      cfg.seed = 17 + k;
      const auto high = make_scenario(cfg);
      cfg.correlation = CorrelationLevel::low;
      const auto low = make_scenario(cfg);
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(k); ++i) {
        EXPECT_EQ(low.correlation()(i, i), 1.0);
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(k); ++j) {
          if (i != j) {
            ASSERT_EQ(low.correlation()(i, j), high.correlation()(i, j) * 0.5);
          }
        }
      }
      Eigen::SelfAdjointEigenSolver<Matrix> eig(high.correlation());
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(MakeScenario, DeterministicAndValidated) {
  ScenarioConfig cfg;
  cfg.k = 16;
  cfg.values_per_attribute = {3};
  EXPECT_EQ(make_scenario(cfg), make_scenario(cfg));
  const auto spec = make_scenario(cfg);
  EXPECT_NEAR(spec.marginals()[5].probabilities()[0], 4.0 / 7, 1e-15);
  cfg.seed = 2;
  EXPECT_FALSE(make_scenario(cfg) == spec);
  cfg.k = 5;
  EXPECT_THROW(make_scenario(cfg), ConfigError);
  cfg.any_k = true;
  EXPECT_EQ(make_scenario(cfg).k(), 5u);
  cfg.values_per_attribute = {3, 4};
  EXPECT_THROW(make_scenario(cfg), ConfigError);
}

TEST(Generate, IdentityFlatIsUniformAndIndependent) {
  std::vector<MarginalSpec> m(4, MarginalSpec::flat(4));
  const CopulaSpec spec(Matrix::Identity(4, 4), m);
  const auto log = generate(spec, 100'000, 42, kPlan);
  ASSERT_EQ(log.size(), 100'000u);
  for (std::size_t a = 0; a < 4; ++a) {
    for (double f : frequencies(log, a)) EXPECT_NEAR(f, 0.25, 0.01);
  }
  const auto v = cramers_v_matrix(log);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (i != j) {
        EXPECT_LT(v(i, j), 0.02);
      }
    }
  }
}

TEST(Generate, StrongerCorrelationGivesLargerCramersV) {
  std::vector<MarginalSpec> m(2, MarginalSpec::flat(2));
  const auto strong = generate(CopulaSpec(two_by_two(0.9), m), 50'000, 9, kPlan);
  const auto weak = generate(CopulaSpec(two_by_two(0.45), m), 50'000, 9, kPlan);
  EXPECT_GT(cramers_v_matrix(strong)(0, 1), cramers_v_matrix(weak)(0, 1));
}

TEST(Generate, MonotoneOverRhoGrid) {
  std::vector<MarginalSpec> m{MarginalSpec::flat(3), MarginalSpec::steep(4)};
  double prev = -1.0;
  for (double rho : {0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 0.99}) {
    const auto log = generate(CopulaSpec(two_by_two(rho), m), 40'000, 21, kPlan);
    const double v = cramers_v_matrix(log)(0, 1);
    EXPECT_GE(v, prev) << "rho=" << rho;
    prev = v;
  }
}

TEST(Generate, SingleRowAndZeroRows) {
  const auto spec = make_scenario(ScenarioConfig{});
  const auto log = generate(spec, 1, 1, kPlan);
  ASSERT_EQ(log.size(), 1u);
  for (std::size_t a = 0; a < log.k(); ++a) EXPECT_LT(log.value(0, a), log.schema().value_count(a));
  EXPECT_THROW(generate(spec, 0, 1, kPlan), ConfigError);
}

TEST(Generate, DeterministicBytes) {
  ScenarioConfig cfg;
  const auto spec = make_scenario(cfg);
  const TimestampPlan sine = DailySineTimestamps{1'699'920'000, 2, 0.5};
  std::ostringstream a, b, c;
  write_csv(a, generate(spec, 5000, 7, sine));
  write_csv(b, generate(spec, 5000, 7, sine));
  write_csv(c, generate(spec, 5000, 8, sine));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Generate, TimestampPlans) {
  const auto spec = make_scenario(ScenarioConfig{});
  const auto uni = generate(spec, 20'000, 3, UniformTimestamps{100, 100 + 3600});
  EXPECT_GE(uni.timestamps().front(), 100);
  EXPECT_LT(uni.timestamps().back(), 3700);

  const Timestamp start = 1'699'920'000;
  const auto sine = generate(spec, 200'000, 3, DailySineTimestamps{start, 3, 0.8});
  EXPECT_GE(sine.timestamps().front(), start);
  EXPECT_LT(sine.timestamps().back(), start + 3 * kSecondsPerDay);
  // Intensity 1 + 0.8 sin: the first half of each day carries
  // (1 + 0.8·2/π) / 2 of the mass.
  std::size_t first_half = 0;
  for (auto t : sine.timestamps()) first_half += ((t - start) % kSecondsPerDay) < kSecondsPerDay / 2;
  const double share = static_cast<double>(first_half) / static_cast<double>(sine.size());
  EXPECT_NEAR(share, (1 + 0.8 * 2 / std::numbers::pi) / 2, 0.01);
  // Attribute values do not depend on the plan.
  const auto other = generate(spec, 200'000, 3, UniformTimestamps{0, 10});
  for (std::size_t r = 0; r < 100; ++r) EXPECT_EQ(other.value(r, 0), sine.value(r, 0));

  EXPECT_THROW(generate(spec, 5, 3, UniformTimestamps{10, 10}), ConfigError);
  EXPECT_THROW(generate(spec, 5, 3, DailySineTimestamps{0, 1, 1.0}), ConfigError);
}

TEST(CramersV, Examples) {
  auto schema = audfc::testing::numbered_schema({3, 3, 3, 1});
  std::vector<std::vector<std::uint32_t>> rows;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 300; ++i) {
    const auto x = static_cast<std::uint32_t>(rng() % 3);
    rows.push_back({x, (x + 1) % 3, static_cast<std::uint32_t>(rng() % 3), 0});
  }
  auto log = audfc::testing::make_log(schema, rows);
  const auto v = cramers_v_matrix(log);
  EXPECT_NEAR(v(0, 1), 1.0, 1e-12);
  EXPECT_EQ(v(0, 3), 0.0);
  EXPECT_EQ(v(3, 2), 0.0);
  EXPECT_EQ(v, v.transpose());
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(v(i, i), 1.0);
  EXPECT_NEAR(v(0, 2), std::sqrt(chi2_alt(log, 0, 2) / (300.0 * 2)), 1e-12);
  EXPECT_THROW(cramers_v_matrix(audfc::testing::make_log(schema, {{0, 0, 0, 0}})), ContractViolation);
}

TEST(CopulaProperties, IdentityIndependencePassesChiSquare) {
  std::vector<MarginalSpec> m{MarginalSpec::flat(3), MarginalSpec::steep(4), MarginalSpec::flat(2),
                              MarginalSpec::steep(3)};
  const CopulaSpec spec(Matrix::Identity(4, 4), m);
  std::size_t pass = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto log = generate(spec, 100'000, seed, kPlan);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto fi = frequencies(log, i);
      EXPECT_LT(std::abs(fi[0] - m[i].probabilities()[0]), 0.01);
      for (std::size_t j = i + 1; j < 4; ++j) {
        const double df = static_cast<double>((m[i].size() - 1) * (m[j].size() - 1));
        const boost::math::chi_squared_distribution<double> chi(df);
        const double p = boost::math::cdf(boost::math::complement(chi, chi2_alt(log, i, j)));
        pass += p >= 0.01;
        ++total;
      }
    }
  }
  EXPECT_GE(static_cast<double>(pass), 0.95 * static_cast<double>(total));
}
