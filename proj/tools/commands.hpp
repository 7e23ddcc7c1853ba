#pragma once

// The `audfc` command line: simulate, mine, build-store, forecast and
// evaluate. Exit codes are 0 on success, 2 for usage errors and 1 for
// runtime failures. Machine-readable lines start with "STAT ".

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "audfc/audfc.hpp"

namespace audfc::cli {

inline constexpr Timestamp kDefaultStart = 1699920000;  // 2023-11-14 00:00 UTC

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string full(double v) { return audfc::detail::fmt17(v); }

// Converts library config errors raised while interpreting flags into usage
// errors.
template <class Fn>
auto interpret(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

inline SupportThreshold parse_support(const std::string& s) {
  return interpret([&] { return SupportThreshold::parse(s); });
}

}  // namespace detail

struct SimulateOptions {
  std::size_t attrs = 8;
  bool attrs_any = false;
  std::string corr = "high";
  std::string marginals = "steep";
  std::size_t values = kDefaultValuesPerAttribute;
  std::size_t rows = 10'000;
  std::uint64_t seed = 1;
  std::string timestamps = "uniform";
  Timestamp start = kDefaultStart;
  std::size_t days = 7;
  double amplitude = 0.5;
  std::string out;
};

inline void cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  ScenarioConfig cfg;
  cfg.k = o.attrs;
  cfg.any_k = o.attrs_any;
  cfg.correlation = o.corr == "low" ? CorrelationLevel::low : CorrelationLevel::high;
  cfg.marginal_shape = o.marginals == "flat" ? MarginalShape::flat : MarginalShape::steep;
  cfg.values_per_attribute = {o.values};
  cfg.rows = o.rows;
  cfg.seed = o.seed;
  if (o.days == 0) throw UsageError("--days must be at least 1");
  if (o.rows == 0) throw UsageError("--rows must be at least 1");
  const auto spec = detail::interpret([&] { return make_scenario(cfg); });
  TimestampPlan plan = UniformTimestamps{o.start, o.start + static_cast<Timestamp>(o.days) * kSecondsPerDay};
  if (o.timestamps == "daily-sine") plan = DailySineTimestamps{o.start, o.days, o.amplitude};
  if (!(o.amplitude >= 0.0 && o.amplitude < 1.0)) throw UsageError("--amplitude must lie in [0, 1)");

  const auto log = generate(spec, o.rows, o.seed, plan);
  save_csv(o.out, log);

  const auto& r = spec.correlation();
  double sum = 0.0, lo = 1.0, hi = -1.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < r.cols(); ++j) {
      sum += r(i, j);
      lo = std::min(lo, r(i, j));
      hi = std::max(hi, r(i, j));
      ++pairs;
    }
  }
  out << "wrote " << log.size() << " rows to " << o.out << '\n';
  out << "STAT copula attrs=" << spec.k() << " values=" << o.values << " corr=" << to_string(cfg.correlation)
      << " marginals=" << to_string(cfg.marginal_shape) << " seed=" << o.seed
      << " mean_offdiag=" << detail::num(pairs ? sum / static_cast<double>(pairs) : 0.0)
      << " min_offdiag=" << detail::num(pairs ? lo : 0.0) << " max_offdiag=" << detail::num(pairs ? hi : 0.0)
      << '\n';
  out << "STAT rows=" << log.size() << " first_ts=" << log.timestamps().front()
      << " last_ts=" << log.timestamps().back() << '\n';
}

struct MineOptions {
  std::vector<std::string> algos;
  std::string support;
  std::string in;
  std::string out;
  std::optional<std::size_t> max_size;
  unsigned threads = 1;
  bool bench = false;
  std::size_t runs = 3;
  bool warmup = false;
};

/// With one algorithm the FIS file goes to --out; with several, to
/// <out>.<algorithm>.
inline void cmd_mine(const MineOptions& o, std::ostream& out) {
  std::vector<Algorithm> algos;
  for (const auto& a : o.algos) {
    const auto parsed = parse_algorithm(a);
    if (!parsed) throw UsageError("unknown algorithm '" + a + "'");
    algos.push_back(*parsed);
  }
  const auto threshold = detail::parse_support(o.support);
  if (o.runs == 0) throw UsageError("--runs must be at least 1");

  const auto log = load_csv(o.in);
  const LogView view(log, RowRange{0, log.size()});
  const std::uint64_t kappa = threshold.resolve(log.size());
  for (const auto algo : algos) {
    MiningConfig cfg;
    cfg.algorithm = algo;
    cfg.threshold = threshold;
    cfg.max_size = o.max_size;
    cfg.threads = o.threads;
    const std::size_t runs = o.bench ? o.runs : 1;
    if (o.bench && o.warmup) mine(view, cfg);
    MiningResult res;
    double total = 0.0;
    for (std::size_t i = 0; i < runs; ++i) {
      res = mine(view, cfg);
      total += res.stats.wall_time;
      if (o.bench) {
        out << "STAT run algo=" << to_string(algo) << " index=" << i + 1
            << " wall_time=" << detail::num(res.stats.wall_time) << '\n';
      }
    }
    if (!o.out.empty()) {
      const std::string path = algos.size() == 1 ? o.out : o.out + "." + std::string(to_string(algo));
      std::ofstream f(path);
      if (!f) throw Error("cannot write '" + path + "'");
      write_fis(f, res.records, log.schema());
    }
    const auto& s = res.stats;
    out << "STAT mine algo=" << to_string(algo) << " rows=" << log.size() << " kappa=" << kappa
        << " itemsets=" << res.records.size() << " candidates=" << s.candidates_generated
        << " rejected_cc=" << s.candidates_rejected_by_cc << " intersections=" << s.tidlist_intersections
        << " runs=" << runs << " mean_wall_time=" << detail::num(total / static_cast<double>(runs)) << '\n';
  }
}

struct StoreOptions {
  std::string in;
  std::string support = "0.01%";
  std::size_t train_days = 6;
  std::optional<Timestamp> train_start;
  std::optional<Timestamp> train_end;
  std::string out;
  unsigned threads = 1;
};

inline void cmd_build_store(const StoreOptions& o, std::ostream& out) {
  const auto threshold = detail::parse_support(o.support);
  if (o.train_days == 0) throw UsageError("--train-days must be at least 1");
  const auto log = load_csv(o.in);
  if (log.empty()) throw Error("input holds no transactions");
  const Timestamp start = o.train_start.value_or(hour_index(log.timestamps().front()) * kSecondsPerHour);
  const Timestamp end = o.train_end.value_or(start + static_cast<Timestamp>(o.train_days) * kSecondsPerDay);
  const TimeWindow window = detail::interpret([&] { return TimeWindow(start, end); });
  auto [store, uset] = build_store(log, window, threshold, o.threads);
  if (const auto parent = std::filesystem::path(o.out).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  save_store(o.out, store, uset);
  out << "STAT store kappa=" << store.kappa() << " n_train=" << store.n_train()
      << " itemsets=" << store.records().size() << " univariates=" << uset.members().size()
      << " train_start=" << window.start() << " train_end=" << window.end() << '\n';
}

struct ForecastOptions {
  std::string store;
  std::string target = "*";
  std::size_t hours = 24;
  std::optional<Timestamp> start;
};

inline void cmd_forecast(const ForecastOptions& o, std::ostream& out) {
  if (o.hours == 0) throw UsageError("--hours must be at least 1");
  const auto [store, uset] = load_store(o.store);
  const auto target = TargetDefinition::parse(o.target, store.schema());
  const Timestamp start = o.start.value_or(store.train_window().end());
  const TimeWindow horizon(start, start + static_cast<Timestamp>(o.hours) * kSecondsPerHour);
  const auto e = choose_best_univariate(store, uset, target, horizon);
  const std::string u = e.chosen_univariate ? store.schema().render(*e.chosen_univariate) : "*";
  out << "target      " << target.render(store.schema()) << '\n'
      << "horizon     [" << horizon.start() << ", " << horizon.end() << ")\n"
      << "point       " << detail::num(e.point) << '\n'
      << "sigma       " << detail::num(e.sigma) << '\n'
      << "univariate  " << u << '\n'
      << "method      " << to_string(e.method) << '\n'
      << "multiplier  " << detail::num(e.multiplier) << '\n';
  out << "STAT forecast point=" << detail::full(e.point) << " sigma=" << detail::full(e.sigma)
      << " univariate=" << u << " method=" << to_string(e.method)
      << " multiplier=" << detail::full(e.multiplier)
      << " univariate_forecast=" << detail::full(e.univariate_forecast) << '\n';
}

struct EvaluateOptions {
  std::string in;
  std::string support = "0.01%";
  std::size_t fis = 500;
  std::size_t ifis = 500;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> ifis_support;
  double fb_threshold = 0.005;
  std::size_t train_days = 6;
  unsigned threads = 1;
  std::string out;
};

inline void cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  BenchmarkConfig cfg;
  cfg.threshold = detail::parse_support(o.support);
  cfg.fis_count = o.fis;
  cfg.ifis_count = o.ifis;
  cfg.seed = o.seed;
  cfg.ifis_kappa = o.ifis_support;
  cfg.fb_threshold = o.fb_threshold;
  cfg.train_days = o.train_days;
  cfg.threads = o.threads;
  if (!(o.fb_threshold > 0.0 && o.fb_threshold <= 1.0)) throw UsageError("--fb-threshold must lie in (0, 1]");
  const auto log = load_csv(o.in);
  const auto res = run_benchmark(log, cfg);
  write_report_files(o.out, res.report, log.schema());
  write_summary(out, res.report, log.schema());
  out << "STAT benchmark kappa=" << res.kappa << " store=" << res.store_size
      << " fis=" << res.set.fis_sample.size() << " ifis=" << res.set.ifis_sample.size() << '\n';
  for (auto c : {TargetClass::fis, TargetClass::ifis}) {
    for (auto m : {EvalMethod::estimator, EvalMethod::ts, EvalMethod::fb}) {
      const auto cell = res.report.cell(m, c);
      out << "STAT cell class=" << to_string(c) << " method=" << to_string(m) << " targets=" << cell.targets
          << " undefined=" << cell.undefined << " mean_mape=" << detail::num(cell.mean)
          << " median_mape=" << detail::num(cell.median) << '\n';
    }
  }
  for (const auto& [name, secs] : res.report.timings) out << "STAT time " << name << '=' << detail::num(secs) << '\n';
}

/// Parses `argv` and runs the selected subcommand.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audience forecasting from frequent itemsets"};
  app.name("audfc");
  app.set_config("--config", "", "Read flags from a key=value file (flags on the command line win)");
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic scenario dataset");
  c_sim->add_option("--attrs", sim.attrs, "Attribute count (8, 16 or 32)")->capture_default_str();
  c_sim->add_flag("--attrs-any", sim.attrs_any, "Allow any attribute count");
  c_sim->add_option("--corr", sim.corr, "Correlation level")->check(CLI::IsMember({"high", "low"}))->capture_default_str();
  c_sim->add_option("--marginals", sim.marginals, "Marginal shape")
      ->check(CLI::IsMember({"steep", "flat"}))
      ->capture_default_str();
  c_sim->add_option("--values", sim.values, "Values per attribute")->check(CLI::PositiveNumber)->capture_default_str();
  c_sim->add_option("--rows", sim.rows, "Number of rows")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  c_sim->add_option("--timestamps", sim.timestamps, "Timestamp plan")
      ->check(CLI::IsMember({"uniform", "daily-sine"}))
      ->capture_default_str();
  c_sim->add_option("--start", sim.start, "First second of the stream (epoch)")->capture_default_str();
  c_sim->add_option("--days", sim.days, "Days covered")->capture_default_str();
  c_sim->add_option("--amplitude", sim.amplitude, "Daily-sine amplitude in [0, 1)")->capture_default_str();
  c_sim->add_option("--out", sim.out, "Output CSV")->required();

  MineOptions mine_o;
  auto* c_mine = app.add_subcommand("mine", "Mine frequent itemsets");
  c_mine->add_option("--algo", mine_o.algos, "apriori, apriori-cc, eclat, eclat-cc or fp-growth (repeatable)")
      ->required()
      ->delimiter(',');
  c_mine->add_option("--support", mine_o.support, "N% of rows or an absolute count")->required();
  c_mine->add_option("--in", mine_o.in, "Input CSV")->required()->check(CLI::ExistingFile);
  c_mine->add_option("--out", mine_o.out, "Output FIS file");
  c_mine->add_option("--max-size", mine_o.max_size, "Largest itemset size");
  c_mine->add_option("--threads", mine_o.threads, "Worker threads")->capture_default_str();
  c_mine->add_flag("--bench", mine_o.bench, "Repeat each algorithm and report the mean wall time");
  c_mine->add_option("--runs", mine_o.runs, "Runs per algorithm with --bench")->capture_default_str();
  c_mine->add_flag("--warmup", mine_o.warmup, "One untimed run before the timed runs");

  StoreOptions store_o;
  auto* c_store = app.add_subcommand("build-store", "Build the itemset store and univariate models");
  c_store->add_option("--in", store_o.in, "Input CSV")->required()->check(CLI::ExistingFile);
  c_store->add_option("--support", store_o.support, "N% of training rows or an absolute count")->capture_default_str();
  c_store->add_option("--train-days", store_o.train_days, "Training days from the first hour")->capture_default_str();
  c_store->add_option("--train-start", store_o.train_start, "Training window start (epoch seconds)");
  c_store->add_option("--train-end", store_o.train_end, "Training window end (epoch seconds)");
  c_store->add_option("--out", store_o.out, "Store path prefix")->required();
  c_store->add_option("--threads", store_o.threads, "Worker threads")->capture_default_str();

  ForecastOptions fc;
  auto* c_fc = app.add_subcommand("forecast", "Forecast one target from a store");
  c_fc->add_option("--store", fc.store, "Store path prefix")->required();
  c_fc->add_option("--target", fc.target, "attr=value,... ('*' for everything)")->capture_default_str();
  c_fc->add_option("--hours", fc.hours, "Horizon length in hours")->capture_default_str();
  c_fc->add_option("--start", fc.start, "Horizon start (epoch seconds; default end of training)");

  EvaluateOptions ev;
  auto* c_ev = app.add_subcommand("evaluate", "Run the estimator vs TS vs FB benchmark");
  c_ev->add_option("--in", ev.in, "Input CSV spanning at least seven days")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--support", ev.support, "Store threshold")->capture_default_str();
  c_ev->add_option("--fis", ev.fis, "Frequent targets to sample")->capture_default_str();
  c_ev->add_option("--ifis", ev.ifis, "Infrequent targets to sample")->capture_default_str();
  c_ev->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
  c_ev->add_option("--ifis-support", ev.ifis_support, "Absolute discovery threshold for infrequent targets");
  c_ev->add_option("--fb-threshold", ev.fb_threshold, "FB univariate share threshold")->capture_default_str();
  c_ev->add_option("--train-days", ev.train_days, "Training days")->capture_default_str();
  c_ev->add_option("--threads", ev.threads, "Worker threads")->capture_default_str();
  c_ev->add_option("--out", ev.out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_sim) cmd_simulate(sim, out);
    if (*c_mine) cmd_mine(mine_o, out);
    if (*c_store) cmd_build_store(store_o, out);
    if (*c_fc) cmd_forecast(fc, out);
    if (*c_ev) cmd_evaluate(ev, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace audfc::cli
