#pragma once

// Benchmark protocol: sample frequent and infrequent targets from the
// training window, forecast the test window with the estimator and two
// baselines, and score each target by MAPE.
//
// TS fits ETS to every target's own hourly series (it keeps a full series
// per target, so it is not deployable). FB multiplies the global forecast by
// forecast per-attribute shares.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "audfc/dataset.hpp"
#include "audfc/eclat.hpp"
#include "audfc/error.hpp"
#include "audfc/estimator.hpp"
#include "audfc/ets.hpp"
#include "audfc/itemset.hpp"
#include "audfc/mining.hpp"

namespace audfc {

enum class TargetClass { fis, ifis };
enum class EvalMethod { estimator, ts, fb };

inline std::string_view to_string(TargetClass c) { return c == TargetClass::fis ? "FIS" : "IFIS"; }

inline std::string_view to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::estimator: return "estimator";
    case EvalMethod::ts: return "TS";
    case EvalMethod::fb: return "FB";
  }
  return "?";
}

struct BenchmarkSet {
  std::vector<TargetDefinition> fis_sample;
  std::vector<TargetDefinition> ifis_sample;
  std::uint64_t fis_seed = 0;
  std::uint64_t ifis_seed = 0;
};

struct EvalTarget {
  TargetDefinition target;
  TargetClass cls = TargetClass::fis;
};

inline std::vector<EvalTarget> labeled(const BenchmarkSet& set) {
  std::vector<EvalTarget> out;
  for (const auto& t : set.fis_sample) out.push_back({t, TargetClass::fis});
  for (const auto& t : set.ifis_sample) out.push_back({t, TargetClass::ifis});
  return out;
}

namespace detail {

// Uniform double in (0, 1) from the top 53 bits.
inline double open_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

}  // namespace detail

/// Weighted sample without replacement, weight = support, in draw order
/// (Efraimidis-Spirakis keys log(u)/w).
inline std::vector<TargetDefinition> sample_fis(const FISStore& store, std::size_t count,
                                                std::uint64_t seed) {
  const auto& records = store.records();
  if (records.empty()) throw ConfigError("cannot sample from an empty store");
  std::seed_seq seq{seed, std::uint64_t{0xF15}};
  std::mt19937_64 rng(seq);
  std::vector<std::pair<double, std::size_t>> keys(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    keys[i] = {std::log(detail::open_unit(rng)) / static_cast<double>(records[i].support), i};
  }
  const std::size_t m = std::min(count, records.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(m), keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<TargetDefinition> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& items = records[keys[i].second].itemset.items();
    out.push_back(TargetDefinition::from_items(store.schema().k(), items));
  }
  return out;
}

/// Default lowered threshold for infrequent-itemset discovery: ceil(κ/10).
inline std::uint64_t default_ifis_kappa(std::uint64_t kappa) { return (kappa + 9) / 10; }

/// Itemsets of the training window with kappa_prime ≤ support < κ, mined
/// with Eclat-CC, in ItemCode order.
inline std::vector<FISRecord> infrequent_pool(const TransactionLog& log, const FISStore& store,
                                              std::uint64_t kappa_prime) {
  if (kappa_prime == 0) throw ConfigError("lowered threshold must be at least 1");
  if (kappa_prime >= store.kappa()) throw ConfigError("lowered threshold must be below the store threshold");
  MiningConfig cfg;
  cfg.algorithm = Algorithm::eclat_cc;
  cfg.threshold = SupportThreshold::absolute(kappa_prime);
  std::vector<FISRecord> pool;
  const std::uint64_t kappa = store.kappa();
  mine_eclat_cc(LogView(log, store.train_window()), cfg,
                [&](std::span<const ItemCode> items, std::uint64_t support) {
                  if (support < kappa) pool.push_back(FISRecord{Itemset(items), support});
                });
  sort_records(pool);
  return pool;
}

/// Uniform sample of CC itemsets with support in [kappa_prime, κ).
inline std::vector<TargetDefinition> sample_ifis(const TransactionLog& log, const FISStore& store,
                                                 std::size_t count, std::uint64_t seed,
                                                 std::optional<std::uint64_t> kappa_prime = std::nullopt) {
  const std::uint64_t kp = kappa_prime.value_or(default_ifis_kappa(store.kappa()));
  const auto pool = infrequent_pool(log, store, kp);
  if (pool.empty()) {
    throw ConfigError("no infrequent itemsets with support >= " + std::to_string(kp) +
                      "; lower the discovery threshold");
  }
  std::seed_seq seq{seed, std::uint64_t{0x1F15}};
  std::mt19937_64 rng(seq);
  std::vector<FISRecord> picked;
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), count, rng);
  std::vector<TargetDefinition> out;
  out.reserve(picked.size());
  for (const auto& r : picked) out.push_back(TargetDefinition::from_items(store.schema().k(), r.itemset.items()));
  return out;
}

/// Hourly counts of arbitrary targets over a fixed row span, via one bitset
/// per item.
class TargetCounter {
 public:
  TargetCounter(const TransactionLog& log, const TimeWindow& span)
      : log_(&log), span_(span), rows_(log.rows_in(span)), index_(log.schema()) {
    const std::size_t words = (rows_.size() + 63) / 64;
    bits_.assign(index_.size(), std::vector<std::uint64_t>(words, 0));
    for (std::size_t r = rows_.begin; r < rows_.end; ++r) {
      const auto row = log.row(r);
      const std::size_t local = r - rows_.begin;
      for (std::size_t a = 0; a < row.size(); ++a) {
        bits_[index_.offset[a] + row[a]][local / 64] |= std::uint64_t{1} << (local % 64);
      }
    }
  }

  HourlySeries hourly(const TargetDefinition& t, const TimeWindow& w) const {
    if (!w.hour_aligned()) throw AlignmentError("window must align to whole hours");
    if (t.k() != log_->k()) throw ContractViolation("target arity does not match log");
    if (w.start() < span_.start() || w.end() > span_.end()) throw ContractViolation("window outside the counter span");
    const RowRange r = log_->rows_in(w);
    HourlySeries s{hour_index(w.start()), std::vector<double>(w.hours(), 0.0)};
    auto bump = [&](std::size_t row) {
      s.values[static_cast<std::size_t>(hour_index(log_->timestamp(row)) - s.start_hour)] += 1.0;
    };
    const auto items = t.items();
    if (items.empty()) {
      for (std::size_t i = r.begin; i < r.end; ++i) bump(i);
      return s;
    }
    if (r.size() == 0) return s;
    const std::size_t lo = r.begin - rows_.begin;
    const std::size_t hi = r.end - rows_.begin;
    for (std::size_t wd = lo / 64; wd <= (hi - 1) / 64; ++wd) {
      std::uint64_t acc = ~std::uint64_t{0};
      for (const auto& c : items) acc &= bits_[index_.id(c)][wd];
      if (wd == lo / 64) acc &= ~std::uint64_t{0} << (lo % 64);
      if (wd == (hi - 1) / 64 && hi % 64 != 0) acc &= ~(~std::uint64_t{0} << (hi % 64));
      while (acc) {
        bump(rows_.begin + wd * 64 + static_cast<std::size_t>(std::countr_zero(acc)));
        acc &= acc - 1;
      }
    }
    return s;
  }

  const TransactionLog& log() const noexcept { return *log_; }

 private:
  const TransactionLog* log_;
  TimeWindow span_;
  RowRange rows_;
  detail::ItemIndex index_;
  std::vector<std::vector<std::uint64_t>> bits_;
};

struct TargetResult {
  TargetDefinition target;
  TargetClass cls = TargetClass::fis;
  EvalMethod method = EvalMethod::estimator;
  std::optional<double> mape;  // empty when every actual is zero
  std::vector<double> actual;
  std::vector<double> predicted;
  /// Estimator only: the estimate and the chosen univariate's hourly forecast.
  std::optional<Estimate> estimate;
  std::vector<double> univariate_hourly;
};

struct ReportCell {
  std::size_t targets = 0;
  std::size_t undefined = 0;
  double mean = std::nan("");
  double median = std::nan("");
};

struct EvalReport {
  std::int64_t test_start_hour = 0;
  std::vector<TargetResult> results;
  /// Wall-time metadata; kept out of the deterministic report files.
  std::vector<std::pair<std::string, double>> timings;

  void append(EvalReport other) {
    for (auto& r : other.results) results.push_back(std::move(r));
    for (auto& t : other.timings) timings.push_back(std::move(t));
  }

  ReportCell cell(EvalMethod m, TargetClass c) const {
    ReportCell out;
    std::vector<double> v;
    for (const auto& r : results) {
      if (r.method != m || r.cls != c) continue;
      ++out.targets;
      if (r.mape) {
        v.push_back(*r.mape);
      } else {
        ++out.undefined;
      }
    }
    if (v.empty()) return out;
    double sum = 0.0;
    for (double x : v) sum += x;
    out.mean = sum / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    out.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return out;
  }
};

namespace detail {

inline void check_windows(const TimeWindow& train, const TimeWindow& test) {
  if (!train.hour_aligned() || !test.hour_aligned()) throw AlignmentError("windows must align to whole hours");
  if (test.start() < train.end()) throw ContractViolation("test window must follow the training window");
}

inline std::optional<double> mape_or_undefined(const std::vector<double>& a, const std::vector<double>& p) {
  try {
    return mape(a, p);
  } catch (const UndefinedMape&) {
    return std::nullopt;
  }
}

// Steps of a forecast fitted on `train` that fall inside `test`.
inline std::vector<double> test_slice(const EtsParams& p, const TimeWindow& train, const TimeWindow& test) {
  const auto offset = static_cast<std::size_t>((test.start() - train.end()) / kSecondsPerHour);
  auto f = forecast(p, offset + test.hours());
  return std::vector<double>(f.point.begin() + static_cast<std::ptrdiff_t>(offset), f.point.end());
}

// Runs fn(i) for i in [0, n) on `threads` workers with a static stride.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += threads) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Per-target ETS on the target's own training series.
inline EvalReport baseline_ts(const TargetCounter& counter, std::span<const EvalTarget> targets,
                              const TimeWindow& train, const TimeWindow& test, unsigned threads = 1) {
  detail::check_windows(train, test);
  EvalReport rep;
  rep.test_start_hour = hour_index(test.start());
  rep.results.resize(targets.size());
  detail::parallel_for(targets.size(), threads, [&](std::size_t i) {
    auto& r = rep.results[i];
    r.target = targets[i].target;
    r.cls = targets[i].cls;
    r.method = EvalMethod::ts;
    r.actual = counter.hourly(r.target, test).values;
    r.predicted = detail::test_slice(fit_ets(counter.hourly(r.target, train)), train, test);
    r.mape = detail::mape_or_undefined(r.actual, r.predicted);
  });
  return rep;
}

inline EvalReport baseline_ts(const TransactionLog& log, std::span<const EvalTarget> targets,
                              const TimeWindow& train, const TimeWindow& test, unsigned threads = 1) {
  detail::check_windows(train, test);
  const TargetCounter counter(log, TimeWindow(train.start(), test.end()));
  return baseline_ts(counter, targets, train, test, threads);
}

/// Midpoint of [0, fb_threshold], used for univariates below the threshold.
inline double fb_unknown_share(double fb_threshold) { return fb_threshold / 2.0; }

/// Global forecast times per-attribute share forecasts. Shares of values
/// with training share ≥ fb_threshold are ETS forecasts of their hourly
/// share series; other values get the fixed midpoint share.
inline EvalReport baseline_fb(const TargetCounter& counter, std::span<const EvalTarget> targets,
                              const TimeWindow& train, const TimeWindow& test, double fb_threshold = 0.005,
                              unsigned threads = 1) {
  detail::check_windows(train, test);
  if (!(fb_threshold > 0.0 && fb_threshold <= 1.0)) throw ConfigError("FB threshold must lie in (0, 1]");
  const std::size_t k = counter.log().k();
  const auto all_train = counter.hourly(TargetDefinition::all_wildcard(k), train);
  const auto global = detail::test_slice(fit_ets(all_train), train, test);
  const double n_train = all_train.total();

  std::vector<ItemCode> needed;
  for (const auto& t : targets) {
    for (const auto& c : t.target.items()) needed.push_back(c);
  }
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  std::vector<std::vector<double>> shares(needed.size());
  detail::parallel_for(needed.size(), threads, [&](std::size_t i) {
    const auto s = counter.hourly(TargetDefinition::from_items(k, std::span<const ItemCode>(&needed[i], 1)), train);
    if (n_train > 0 && s.total() / n_train >= fb_threshold) {
      std::vector<double> frac(s.size(), 0.0);
      for (std::size_t h = 0; h < s.size(); ++h) {
        if (all_train.values[h] > 0) frac[h] = s.values[h] / all_train.values[h];
      }
      shares[i] = detail::test_slice(fit_ets(frac), train, test);
    } else {
      shares[i].assign(test.hours(), fb_unknown_share(fb_threshold));
    }
  });

  EvalReport rep;
  rep.test_start_hour = hour_index(test.start());
  rep.results.resize(targets.size());
  detail::parallel_for(targets.size(), threads, [&](std::size_t i) {
    auto& r = rep.results[i];
    r.target = targets[i].target;
    r.cls = targets[i].cls;
    r.method = EvalMethod::fb;
    r.actual = counter.hourly(r.target, test).values;
    r.predicted = global;
    for (const auto& c : r.target.items()) {
      const auto& f = shares[static_cast<std::size_t>(std::lower_bound(needed.begin(), needed.end(), c) - needed.begin())];
      for (std::size_t h = 0; h < r.predicted.size(); ++h) r.predicted[h] *= f[h];
    }
    r.mape = detail::mape_or_undefined(r.actual, r.predicted);
  });
  return rep;
}

inline EvalReport baseline_fb(const TransactionLog& log, std::span<const EvalTarget> targets,
                              const TimeWindow& train, const TimeWindow& test, double fb_threshold = 0.005,
                              unsigned threads = 1) {
  detail::check_windows(train, test);
  const TargetCounter counter(log, TimeWindow(train.start(), test.end()));
  return baseline_fb(counter, targets, train, test, fb_threshold, threads);
}

/// The estimator's hourly predictions: multiplier × the chosen univariate's
/// hourly forecast.
inline EvalReport evaluate_estimator(const FISStore& store, const UnivariateSet& uset,
                                     const TargetCounter& counter, std::span<const EvalTarget> targets,
                                     const TimeWindow& test, unsigned threads = 1) {
  const TimeWindow& train = store.train_window();
  detail::check_windows(train, test);
  EvalReport rep;
  rep.test_start_hour = hour_index(test.start());
  rep.results.resize(targets.size());
  detail::parallel_for(targets.size(), threads, [&](std::size_t i) {
    auto& r = rep.results[i];
    r.target = targets[i].target;
    r.cls = targets[i].cls;
    r.method = EvalMethod::estimator;
    r.actual = counter.hourly(r.target, test).values;
    const Estimate e = choose_best_univariate(store, uset, r.target, test);
    const auto& m = e.chosen_univariate ? *uset.find(*e.chosen_univariate) : uset.global();
    r.univariate_hourly = detail::test_slice(m.params, train, test);
    r.predicted.resize(r.univariate_hourly.size());
    for (std::size_t h = 0; h < r.predicted.size(); ++h) r.predicted[h] = e.multiplier * r.univariate_hourly[h];
    r.estimate = e;
    r.mape = detail::mape_or_undefined(r.actual, r.predicted);
  });
  return rep;
}

struct BenchmarkConfig {
  SupportThreshold threshold = SupportThreshold::fraction(1, 10000);
  std::size_t fis_count = 500;
  std::size_t ifis_count = 500;
  std::uint64_t seed = 1;
  /// Lowered discovery threshold for IFIS; default ceil(κ/10).
  std::optional<std::uint64_t> ifis_kappa;
  double fb_threshold = 0.005;
  std::size_t train_days = 6;
  unsigned threads = 1;
};

struct BenchmarkWindows {
  TimeWindow train;
  TimeWindow test;
};

/// Training on `train_days` days from the first hour of the log, testing on
/// the following day. The log must reach the last hour of the test day.
inline BenchmarkWindows benchmark_windows(const TransactionLog& log, std::size_t train_days = 6) {
  if (log.empty()) throw ConfigError("benchmark needs a non-empty log");
  if (train_days == 0) throw ConfigError("benchmark needs at least one training day");
  const Timestamp start = hour_index(log.timestamps().front()) * kSecondsPerHour;
  const Timestamp split = start + static_cast<Timestamp>(train_days) * kSecondsPerDay;
  BenchmarkWindows w{TimeWindow(start, split), TimeWindow(split, split + kSecondsPerDay)};
  if (log.timestamps().back() < w.test.end() - kSecondsPerHour) {
    throw ConfigError("log spans less than " + std::to_string(train_days + 1) + " days");
  }
  return w;
}

struct BenchmarkOutcome {
  BenchmarkWindows windows;
  std::uint64_t kappa = 0;
  std::size_t store_size = 0;
  BenchmarkSet set;
  EvalReport report;
};

/// Full protocol: store on the training days, FIS/IFIS samples, then
/// estimator, TS and FB on the test day.
inline BenchmarkOutcome run_benchmark(const TransactionLog& log, const BenchmarkConfig& cfg) {
  const auto windows = benchmark_windows(log, cfg.train_days);
  detail::Stopwatch total;
  detail::Stopwatch sw;
  auto [store, uset] = build_store(log, windows.train, cfg.threshold, cfg.threads);
  const double t_store = sw.seconds();

  BenchmarkSet set;
  set.fis_seed = cfg.seed;
  set.ifis_seed = cfg.seed + 1;
  sw = {};
  set.fis_sample = sample_fis(store, cfg.fis_count, set.fis_seed);
  set.ifis_sample = sample_ifis(log, store, cfg.ifis_count, set.ifis_seed, cfg.ifis_kappa);
  const double t_sample = sw.seconds();

  const auto targets = labeled(set);
  sw = {};
  const TargetCounter counter(log, TimeWindow(windows.train.start(), windows.test.end()));
  EvalReport rep = evaluate_estimator(store, uset, counter, targets, windows.test, cfg.threads);
  const double t_est = sw.seconds();
  sw = {};
  rep.append(baseline_ts(counter, targets, windows.train, windows.test, cfg.threads));
  const double t_ts = sw.seconds();
  sw = {};
  rep.append(baseline_fb(counter, targets, windows.train, windows.test, cfg.fb_threshold, cfg.threads));
  const double t_fb = sw.seconds();
  rep.timings = {{"build_store", t_store}, {"sampling", t_sample},   {"estimator", t_est},
                 {"ts", t_ts},             {"fb", t_fb},             {"total", total.seconds()}};

  return {windows, store.kappa(), store.records().size(), std::move(set), std::move(rep)};
}

// Report files. Targets are quoted because they contain commas.

namespace detail {

inline std::string quoted(const std::string& s) { return '"' + s + '"'; }

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

/// `target,class,method,mape` for every target with a defined MAPE.
inline void write_report_csv(std::ostream& out, const EvalReport& rep, const AttributeSchema& schema) {
  out << "target,class,method,mape\n";
  for (const auto& r : rep.results) {
    if (!r.mape) continue;
    out << detail::quoted(r.target.render(schema)) << ',' << to_string(r.cls) << ',' << to_string(r.method)
        << ',' << detail::fmt17(*r.mape) << '\n';
  }
}

/// Mean and median MAPE per (class, method), then the undefined targets.
inline void write_summary(std::ostream& out, const EvalReport& rep, const AttributeSchema& schema) {
  char line[160];
  std::snprintf(line, sizeof line, "%-5s %-10s %8s %10s %12s %12s\n", "class", "method", "targets", "undefined",
                "mean_mape", "median_mape");
  out << line;
  for (auto c : {TargetClass::fis, TargetClass::ifis}) {
    for (auto m : {EvalMethod::estimator, EvalMethod::ts, EvalMethod::fb}) {
      const auto cell = rep.cell(m, c);
      if (cell.targets == 0) continue;
      std::snprintf(line, sizeof line, "%-5s %-10s %8zu %10zu %12s %12s\n", std::string(to_string(c)).c_str(),
                    std::string(to_string(m)).c_str(), cell.targets, cell.undefined,
                    detail::fmt6(cell.mean).c_str(), detail::fmt6(cell.median).c_str());
      out << line;
    }
  }
  bool header = false;
  for (const auto& r : rep.results) {
    if (r.mape) continue;
    if (!header) out << "\nundefined MAPE (all test actuals zero):\n";
    header = true;
    out << to_string(r.cls) << ' ' << to_string(r.method) << ' ' << r.target.render(schema) << '\n';
  }
}

/// One line per (target, method, hour). Estimator lines also carry the
/// univariate's hourly forecast, the multiplier and the horizon totals.
inline void write_detail_csv(std::ostream& out, const EvalReport& rep, const AttributeSchema& schema) {
  out << "target,class,method,hour_index,actual,prediction,univariate,multiplier,univariate_forecast,point,"
         "estimate_method,chosen_univariate\n";
  for (const auto& r : rep.results) {
    const std::string head = detail::quoted(r.target.render(schema)) + ',' + std::string(to_string(r.cls)) + ',' +
                             std::string(to_string(r.method)) + ',';
    std::string tail = ",,,,,";
    if (r.estimate) {
      const auto& e = *r.estimate;
      tail = ',' + detail::fmt17(e.multiplier) + ',' + detail::fmt17(e.univariate_forecast) + ',' +
             detail::fmt17(e.point) + ',' + std::string(to_string(e.method)) + ',' +
             (e.chosen_univariate ? schema.render(*e.chosen_univariate) : std::string("*"));
    }
    for (std::size_t h = 0; h < r.actual.size(); ++h) {
      out << head << rep.test_start_hour + static_cast<std::int64_t>(h) << ',' << detail::fmt17(r.actual[h]) << ','
          << detail::fmt17(r.predicted[h]) << ',';
      if (r.estimate) out << detail::fmt17(r.univariate_hourly[h]);
      out << tail << '\n';
    }
  }
}

/// Writes report.csv, summary.txt and detail.csv under `dir`, plus
/// runtime.txt holding the wall times.
inline void write_report_files(const std::filesystem::path& dir, const EvalReport& rep,
                               const AttributeSchema& schema) {
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_out(dir / "report.csv");
    write_report_csv(out, rep, schema);
  }
  {
    auto out = detail::open_out(dir / "summary.txt");
    write_summary(out, rep, schema);
  }
  {
    auto out = detail::open_out(dir / "detail.csv");
    write_detail_csv(out, rep, schema);
  }
  auto out = detail::open_out(dir / "runtime.txt");
  for (const auto& [name, secs] : rep.timings) out << name << ' ' << detail::fmt6(secs) << '\n';
}

}  // namespace audfc
