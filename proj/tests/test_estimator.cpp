#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "audfc/brute_force.hpp"
#include "audfc/copula.hpp"
#include "audfc/estimator.hpp"
#include "test_util.hpp"

using namespace audfc;
using audfc::testing::make_log;
using audfc::testing::numbered_schema;

namespace {

constexpr Timestamp kDay = kSecondsPerDay;
const TimeWindow kTrain(0, 6 * kDay);
const TimeWindow kTest(6 * kDay, 7 * kDay);

UnivariateMember flat_member(std::optional<ItemCode> item, std::uint64_t support, double level,
                             double sigma = 0.0) {
  UnivariateMember m;
  m.item = item;
  m.support = support;
  m.params.level = level;
  m.params.resid_sigma = sigma;
  return m;
}

TransactionLog synthetic(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed) {
  return generate(make_scenario(cfg), n, seed, DailySineTimestamps{0, 7, 0.5});
}

std::filesystem::path temp_prefix(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "audfc_estimator_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(ConditionalMultiplier, Examples) {
  auto schema = numbered_schema({2, 2});
  FISStore store(schema, {{Itemset{{0, 0}}, 2000}, {Itemset{{0, 0}, {1, 1}}, 500}, {Itemset{{1, 1}}, 900}},
                 100, kTrain, 5000);
  EXPECT_EQ(conditional_multiplier(store, Itemset{{0, 0}}, ItemCode{0, 0}), 1.0);
  EXPECT_EQ(conditional_multiplier(store, Itemset{{0, 0}, {1, 1}}, ItemCode{0, 0}), 0.25);
  EXPECT_EQ(conditional_multiplier(store, Itemset{{0, 0}, {1, 0}}, ItemCode{0, 0}), std::nullopt);
  EXPECT_EQ(conditional_multiplier(store, Itemset{{1, 1}}, std::nullopt), 900.0 / 5000.0);
  EXPECT_THROW(conditional_multiplier(store, Itemset{{0, 1}, {1, 1}}, ItemCode{0, 1}), ContractViolation);
  EXPECT_THROW(conditional_multiplier(store, Itemset{{1, 1}}, ItemCode{0, 0}), ContractViolation);
}

TEST(ConditionalMultiplier, HalfOfUMatchesT) {
  auto schema = numbered_schema({2, 2});
  std::vector<std::vector<std::uint32_t>> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({0, static_cast<std::uint32_t>(i % 2)});
  for (int i = 0; i < 10; ++i) rows.push_back({1, 0});
  auto log = make_log(schema, rows, 0, 600);
  const TimeWindow w(0, 24 * 3600);
  auto [store, uset] = build_store(log, w, SupportThreshold::absolute(1));
  const auto t = TargetDefinition::parse("a0=v0,a1=v1", schema);
  const auto u = TargetDefinition::parse("a0=v0", schema);
  const double oracle = static_cast<double>(count_in_window(log, t, w)) /
                        static_cast<double>(count_in_window(log, u, w));
  EXPECT_EQ(oracle, 0.5);
  EXPECT_EQ(conditional_multiplier(store, Itemset(t.items()), ItemCode{0, 0}), oracle);
}

TEST(EstimateSigma, Examples) {
  const std::vector<double> steps{3.0, 4.0};
  EXPECT_DOUBLE_EQ(estimate_sigma(1.0, 100, 50.0, steps), 5.0);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_DOUBLE_EQ(estimate_sigma(0.5, 10000, 800.0, zero), 800.0 * std::sqrt(0.25 / 10000));
  // p=0.5, s(U)=10000, σ_s² = 9 + 16: 0.25·25 + 800²·0.25/10000 = 6.25 + 16.
  EXPECT_DOUBLE_EQ(estimate_sigma(0.5, 10000, 800.0, steps), std::sqrt(22.25));
}

TEST(BuildStore, UnivariatesFollowSingletonSupport) {
  auto schema = numbered_schema({3, 2});
  auto log = make_log(schema, {{0, 0}, {1, 1}, {0, 1}, {2, 0}}, 0, 1000);
  const TimeWindow w(0, 2 * 3600);
  auto [store, uset] = build_store(log, w, SupportThreshold::absolute(1));
  EXPECT_EQ(uset.members().size(), 5u);
  EXPECT_EQ(uset.global().support, 4u);
  EXPECT_EQ(store.n_train(), 4u);
  EXPECT_EQ(uset.global().series.total(), 4.0);

  auto only_g = build_store(log, w, SupportThreshold::absolute(3));
  EXPECT_TRUE(only_g.second.members().empty());
  const auto e = choose_best_univariate(only_g.first, only_g.second,
                                        TargetDefinition::parse("a0=v0", schema), TimeWindow(w.end(), w.end() + 3600));
  EXPECT_FALSE(e.chosen_univariate.has_value());

  EXPECT_THROW(build_store(log, TimeWindow(10 * 3600, 11 * 3600), SupportThreshold::absolute(1)), ConfigError);
  EXPECT_THROW(build_store(log, TimeWindow(0, 100), SupportThreshold::absolute(1)), AlignmentError);
}

TEST(BuildStore, SyntheticUnivariatesMatchBruteForceSingletons) {
  ScenarioConfig cfg;
  cfg.k = 4;
  cfg.any_k = true;
  cfg.values_per_attribute = {6};
  const auto log = synthetic(cfg, 20'000, 3);
  auto [store, uset] = build_store(log, kTrain, SupportThreshold::fraction(0.02));
  const auto oracle = brute_force_mine(LogView(log, kTrain), store.kappa());
  std::size_t singletons = 0;
  for (const auto& r : oracle) {
    if (r.itemset.size() == 1) {
      ++singletons;
      const auto* m = uset.find(r.itemset[0]);
      ASSERT_NE(m, nullptr);
      EXPECT_EQ(m->support, r.support);
      EXPECT_EQ(m->series.total(), static_cast<double>(r.support));
    }
  }
  EXPECT_EQ(uset.members().size(), singletons);
  EXPECT_EQ(store.records(), oracle);
}

TEST(EstimateFrequent, MultiplierTimesForecast) {
  auto schema = numbered_schema({2, 2});
  FISStore store(schema, {{Itemset{{0, 0}}, 2000}, {Itemset{{0, 0}, {1, 1}}, 500}, {Itemset{{1, 1}}, 900}},
                 100, kTrain, 5000);
  UnivariateSet uset({flat_member(ItemCode{0, 0}, 2000, 100.0), flat_member(ItemCode{1, 1}, 900, 30.0)},
                     flat_member(std::nullopt, 5000, 250.0));
  const TimeWindow h(kTrain.end(), kTrain.end() + 10 * 3600);
  const auto t = TargetDefinition::parse("a0=v0,a1=v1", schema);
  const auto e = estimate_frequent(store, uset, t, h, ItemCode{0, 0});
  EXPECT_EQ(e.univariate_forecast, 1000.0);
  EXPECT_EQ(e.point, 250.0);
  EXPECT_EQ(e.method, EstimateMethod::frequent_multiplier);
  // Identity collapse.
  const auto self = estimate_frequent(store, uset, TargetDefinition::parse("a0=v0", schema), h, ItemCode{0, 0});
  EXPECT_EQ(self.multiplier, 1.0);
  EXPECT_EQ(self.point, 1000.0);
  // Offset horizons use later steps.
  const auto later = estimate_frequent(store, uset, t, TimeWindow(h.end(), h.end() + 3600), ItemCode{0, 0});
  EXPECT_EQ(later.point, 25.0);
  EXPECT_THROW(estimate_frequent(store, uset, t, TimeWindow(h.start() + 1, h.end()), ItemCode{0, 0}),
               AlignmentError);
  EXPECT_THROW(estimate_frequent(store, uset, t, TimeWindow(0, 3600), ItemCode{0, 0}), ContractViolation);
  EXPECT_THROW(estimate_frequent(store, uset, TargetDefinition::parse("a0=v1,a1=v1", schema), h, ItemCode{1, 1}),
               ContractViolation);
}

TEST(EstimateInfrequent, FactorsAndBounds) {
  auto schema = numbered_schema({2, 2, 2, 2});
  const std::uint64_t kappa = 100;
  FISStore store(schema,
                 {{Itemset{{0, 0}}, 4000}, {Itemset{{1, 0}}, 3000}, {Itemset{{0, 0}, {1, 0}}, 1000},
                  {Itemset{{2, 1}}, 700}},
                 kappa, kTrain, 10000);
  UnivariateSet uset({flat_member(ItemCode{0, 0}, 4000, 100.0), flat_member(ItemCode{1, 0}, 3000, 80.0),
                      flat_member(ItemCode{2, 1}, 700, 20.0)},
                     flat_member(std::nullopt, 10000, 400.0));
  const TimeWindow h(kTrain.end(), kTrain.end() + 24 * 3600);

  // {a0=v0, a1=v0, a3=v1}: pair (a1,a0) frequent, (a3,a0) not.
  const auto t = TargetDefinition::parse("a0=v0,a1=v0,a3=v1", schema);
  const auto e = estimate_infrequent(store, uset, t, h, ItemCode{0, 0});
  EXPECT_EQ(e.multiplier, (1000.0 / 4000.0) * (100.0 / 4000.0));
  EXPECT_EQ(e.method, EstimateMethod::threshold_bound_mix);
  EXPECT_EQ(e.point, e.multiplier * 2400.0);

  // Every factor infrequent.
  const auto all_bound = TargetDefinition::parse("a0=v0,a2=v0,a3=v1", schema);
  const auto b = estimate_infrequent(store, uset, all_bound, h, ItemCode{0, 0});
  EXPECT_DOUBLE_EQ(b.point, std::pow(100.0 / 4000.0, 2) * 2400.0);

  // Single constraint equal to U.
  const auto single = estimate_infrequent(store, uset, TargetDefinition::parse("a0=v0", schema), h, ItemCode{0, 0});
  EXPECT_EQ(single.multiplier, 1.0);
  EXPECT_EQ(single.point, 2400.0);
  EXPECT_EQ(single.method, EstimateMethod::independence_product);

  // G as U uses singleton shares.
  const auto g = estimate_infrequent(store, uset, TargetDefinition::parse("a2=v1,a3=v0", schema), h, std::nullopt);
  EXPECT_EQ(g.multiplier, (700.0 / 10000.0) * (100.0 / 10000.0));

  EXPECT_THROW(estimate_infrequent(store, uset, TargetDefinition::all_wildcard(4), h, std::nullopt),
               ContractViolation);
}

TEST(EstimateInfrequent, AddingConstraintsNeverIncreases) {
  ScenarioConfig cfg;
  cfg.any_k = true;
  cfg.k = 5;
  cfg.values_per_attribute = {5};
  const auto log = synthetic(cfg, 30'000, 5);
  auto [store, uset] = build_store(log, kTrain, SupportThreshold::fraction(0.005));
  const TimeWindow h = kTest;
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::optional<std::uint32_t>> c(5);
    const std::uint32_t anchor_attr = static_cast<std::uint32_t>(rng() % 5);
    c[anchor_attr] = static_cast<std::uint32_t>(rng() % 3);
    const ItemCode u{anchor_attr, *c[anchor_attr]};
    if (!uset.find(u)) continue;
    double prev = estimate_infrequent(store, uset, TargetDefinition(c), h, u).point;
    for (std::uint32_t a = 0; a < 5; ++a) {
      if (c[a]) continue;
      c[a] = static_cast<std::uint32_t>(rng() % 5);
      const auto e = estimate_infrequent(store, uset, TargetDefinition(c), h, u);
      EXPECT_GT(e.multiplier, 0.0);
      EXPECT_LE(e.multiplier, 1.0);
      EXPECT_LE(e.point, prev);
      prev = e.point;
    }
  }
}

TEST(ChooseBestUnivariate, SingleItemAndSigmaDominance) {
  auto schema = numbered_schema({2, 2});
  FISStore store(schema, {{Itemset{{0, 0}}, 2000}, {Itemset{{1, 1}}, 1500}, {Itemset{{0, 0}, {1, 1}}, 600}},
                 100, kTrain, 5000);
  UnivariateSet uset({flat_member(ItemCode{0, 0}, 2000, 100.0, 5.0), flat_member(ItemCode{1, 1}, 1500, 80.0, 0.0)},
                     flat_member(std::nullopt, 5000, 250.0, 1.0));
  const TimeWindow h(kTrain.end(), kTrain.end() + 24 * 3600);
  const auto single = choose_best_univariate(store, uset, TargetDefinition::parse("a0=v0", schema), h);
  EXPECT_EQ(single.chosen_univariate, (ItemCode{0, 0}));
  EXPECT_EQ(single.multiplier, 1.0);
  const auto pair = choose_best_univariate(store, uset, TargetDefinition::parse("a0=v0,a1=v1", schema), h);
  EXPECT_EQ(pair.chosen_univariate, (ItemCode{1, 1}));
  const auto g = choose_best_univariate(store, uset, TargetDefinition::all_wildcard(2), h);
  EXPECT_FALSE(g.chosen_univariate.has_value());
  EXPECT_EQ(g.point, 250.0 * 24);
}

TEST(ChooseBestUnivariate, ArgminOverExhaustiveCandidates) {
  ScenarioConfig cfg;
  cfg.k = 8;
  cfg.values_per_attribute = {4};
  const auto log = synthetic(cfg, 40'000, 11);
  auto [store, uset] = build_store(log, kTrain, SupportThreshold::fraction(0.01));
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::optional<std::uint32_t>> c(8);
    for (auto& x : c) {
      if (rng() % 3 == 0) x = static_cast<std::uint32_t>(rng() % 4);
    }
    const TargetDefinition t(c);
    if (t.is_all_wildcard()) continue;
    const auto best = choose_best_univariate(store, uset, t, kTest);
    const bool frequent = store.support(Itemset(t.items())).has_value();
    std::vector<Estimate> all;
    for (const auto& item : t.items()) {
      if (!uset.find(item)) continue;
      all.push_back(frequent ? estimate_frequent(store, uset, t, kTest, item)
                             : estimate_infrequent(store, uset, t, kTest, item));
    }
    if (all.empty()) {
      EXPECT_FALSE(best.chosen_univariate.has_value());
      continue;
    }
    double min_sigma = all.front().sigma;
    for (const auto& e : all) min_sigma = std::min(min_sigma, e.sigma);
    EXPECT_EQ(best.sigma, min_sigma);
    for (const auto& e : all) {
      if (e.sigma == min_sigma) {
        EXPECT_GE(best.univariate_support, e.univariate_support);
      }
    }
    if (frequent) {
      // Point estimate is multiplier times the U forecast sum.
      const double s_t = static_cast<double>(*store.support(Itemset(t.items())));
      const double s_u = static_cast<double>(*store.support(Itemset{*best.chosen_univariate}));
      EXPECT_EQ(best.point, (s_t / s_u) * best.univariate_forecast);
    }
  }
}

TEST(EstimatorProperties, FrequentTargetsWithinTwoSigmaOfHeldOutCounts) {
  ScenarioConfig cfg;
  cfg.k = 8;
  cfg.values_per_attribute = {4};
  const auto log = synthetic(cfg, 300'000, 21);
  auto [store, uset] = build_store(log, kTrain, SupportThreshold::fraction(0.01));
  std::size_t inside = 0, total = 0;
  for (std::size_t i = 0; i < store.records().size(); i += 7) {
    const auto& r = store.records()[i];
    const auto t = TargetDefinition::from_items(8, r.itemset.items());
    const auto e = choose_best_univariate(store, uset, t, kTest);
    const double truth = static_cast<double>(count_in_window(log, t, kTest));
    // sigma is the standard error of the expected count; a realized count
    // adds its own binomial thinning noise on top.
    const double sampling = e.univariate_forecast * e.multiplier * (1.0 - e.multiplier);
    inside += std::abs(e.point - truth) <= 2 * std::sqrt(e.sigma * e.sigma + sampling);
    ++total;
  }
  ASSERT_GT(total, 50u);
  EXPECT_GE(static_cast<double>(inside) / static_cast<double>(total), 0.9);
}

TEST(EstimatorProperties, IndependenceProductUnderIdentityCorrelation) {
  std::vector<MarginalSpec> m(5, MarginalSpec::steep(4));
  const CopulaSpec spec(Matrix::Identity(5, 5), m);
  const auto log = generate(spec, 400'000, 4, DailySineTimestamps{0, 7, 0.5});
  // High threshold keeps most 3-item targets out of the store.
  auto [store, uset] = build_store(log, kTrain, SupportThreshold::fraction(0.05));
  std::size_t checked = 0, within = 0;
  for (std::uint32_t a = 0; a < 4; ++a) {
    for (std::uint32_t b = 0; b < 4; ++b) {
      for (std::uint32_t c = 0; c < 2; ++c) {
        std::vector<std::optional<std::uint32_t>> cons{std::nullopt, a, b, c, std::nullopt};
        const TargetDefinition t(cons);
        if (store.support(Itemset(t.items()))) continue;
        const auto e = choose_best_univariate(store, uset, t, kTest);
        if (e.method != EstimateMethod::independence_product) continue;
        const double truth = static_cast<double>(count_in_window(log, t, kTest));
        if (truth / 24.0 < 20.0) continue;
        ++checked;
        within += std::abs(e.point - truth) <= 0.25 * truth;
      }
    }
  }
  ASSERT_GT(checked, 5u);
  EXPECT_EQ(within, checked);
}

TEST(StorePersistence, RoundTripGivesIdenticalEstimates) {
  ScenarioConfig cfg;
  cfg.k = 8;
  cfg.values_per_attribute = {4};
  const auto log = synthetic(cfg, 20'000, 8);
  auto [store, uset] = build_store(log, kTrain, SupportThreshold::fraction(0.02));
  const auto prefix = temp_prefix("roundtrip");
  save_store(prefix, store, uset);
  auto [store2, uset2] = load_store(prefix);
  EXPECT_EQ(store2.records(), store.records());
  EXPECT_EQ(store2.kappa(), store.kappa());
  EXPECT_EQ(store2.n_train(), store.n_train());
  EXPECT_EQ(store2.train_window(), store.train_window());
  EXPECT_EQ(store2.schema(), store.schema());
  ASSERT_EQ(uset2.members().size(), uset.members().size());
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::optional<std::uint32_t>> c(8);
    for (auto& x : c) {
      if (rng() % 3 == 0) x = static_cast<std::uint32_t>(rng() % 4);
    }
    const TargetDefinition t(c);
    const auto a = choose_best_univariate(store, uset, t, kTest);
    const auto b = choose_best_univariate(store2, uset2, t, kTest);
    EXPECT_EQ(a.point, b.point);
    EXPECT_EQ(a.sigma, b.sigma);
    EXPECT_EQ(a.chosen_univariate, b.chosen_univariate);
  }
  std::filesystem::remove(prefix.string() + ".uni");
  EXPECT_THROW(load_store(prefix), Error);
}
