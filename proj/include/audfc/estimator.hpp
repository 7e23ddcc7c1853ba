#pragma once

// Audience estimation from a frequent-itemset store plus a small set of
// univariate forecasts.
//
// For a target T and a univariate U whose item appears in T, the forecast is
// P̂(T|U) · ŝ(U), with P̂(T|U) = s_train(T) / s_train(U) when T is frequent.
// Otherwise P̂(T|U) is a product of per-attribute factors, each either a
// stored pairwise ratio or the threshold bound κ / s_train(U).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "audfc/dataset.hpp"
#include "audfc/eclat.hpp"
#include "audfc/error.hpp"
#include "audfc/ets.hpp"
#include "audfc/itemset.hpp"
#include "audfc/mining.hpp"

namespace audfc {

/// Frequent itemsets of the training window with their supports.
class FISStore {
 public:
  FISStore(AttributeSchema schema, std::vector<FISRecord> records, std::uint64_t kappa,
           TimeWindow train, std::uint64_t n_train)
      : schema_(std::move(schema)), records_(std::move(records)), kappa_(kappa), train_(train),
        n_train_(n_train) {
    if (kappa_ == 0) throw ConfigError("store threshold must be at least 1");
    sort_records(records_);
    for (const auto& r : records_) {
      if (r.support < kappa_) throw ContractViolation("store record below the threshold");
    }
  }

  /// Support of `itemset`, or nullopt when it is infrequent.
  std::optional<std::uint64_t> support(const Itemset& itemset) const {
    if (itemset.empty()) return n_train_;
    auto it = std::lower_bound(records_.begin(), records_.end(), itemset,
                               [](const FISRecord& r, const Itemset& s) { return r.itemset < s; });
    if (it == records_.end() || it->itemset != itemset) return std::nullopt;
    return it->support;
  }

  const AttributeSchema& schema() const noexcept { return schema_; }
  const std::vector<FISRecord>& records() const noexcept { return records_; }
  std::uint64_t kappa() const noexcept { return kappa_; }
  const TimeWindow& train_window() const noexcept { return train_; }
  std::uint64_t n_train() const noexcept { return n_train_; }

 private:
  AttributeSchema schema_;
  std::vector<FISRecord> records_;
  std::uint64_t kappa_;
  TimeWindow train_;
  std::uint64_t n_train_;
};

/// A univariate target; `item` is empty for the global target G.
struct UnivariateMember {
  std::optional<ItemCode> item;
  std::uint64_t support = 0;
  HourlySeries series;  // empty when loaded from disk
  EtsParams params;
};

class UnivariateSet {
 public:
  UnivariateSet(std::vector<UnivariateMember> members, UnivariateMember global)
      : members_(std::move(members)), global_(std::move(global)) {
    if (global_.item) throw ContractViolation("the global member carries no item");
    std::sort(members_.begin(), members_.end(),
              [](const UnivariateMember& a, const UnivariateMember& b) { return *a.item < *b.item; });
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (!members_[i].item) throw ContractViolation("univariate member without an item");
      if (i > 0 && *members_[i].item == *members_[i - 1].item) {
        throw ContractViolation("duplicate univariate member");
      }
    }
  }

  const UnivariateMember* find(ItemCode item) const {
    auto it = std::lower_bound(members_.begin(), members_.end(), item,
                               [](const UnivariateMember& m, ItemCode c) { return *m.item < c; });
    return it != members_.end() && *it->item == item ? &*it : nullptr;
  }

  const std::vector<UnivariateMember>& members() const noexcept { return members_; }
  const UnivariateMember& global() const noexcept { return global_; }

 private:
  std::vector<UnivariateMember> members_;
  UnivariateMember global_;
};

enum class EstimateMethod { frequent_multiplier, independence_product, threshold_bound_mix };

inline std::string_view to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::frequent_multiplier: return "frequent-multiplier";
    case EstimateMethod::independence_product: return "independence-product";
    case EstimateMethod::threshold_bound_mix: return "threshold-bound-mix";
  }
  return "?";
}

struct Estimate {
  TargetDefinition target;
  TimeWindow horizon;
  double point = 0.0;
  double sigma = 0.0;
  /// Empty when the global target was used.
  std::optional<ItemCode> chosen_univariate;
  EstimateMethod method = EstimateMethod::frequent_multiplier;
  double multiplier = 0.0;
  /// Sum of the chosen univariate's hourly point forecasts over the horizon.
  double univariate_forecast = 0.0;
  std::uint64_t univariate_support = 0;
};

namespace detail {

// Per-hour counts of every singleton and of all rows over `w`.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> singleton_hourly(
    const TransactionLog& log, const TimeWindow& w, const ItemIndex& index) {
  const std::size_t hours = w.hours();
  std::vector<std::vector<double>> per_item(index.size(), std::vector<double>(hours, 0.0));
  std::vector<double> all(hours, 0.0);
  const auto rows = log.rows_in(w);
  const std::int64_t h0 = hour_index(w.start());
  for (std::size_t r = rows.begin; r < rows.end; ++r) {
    const auto h = static_cast<std::size_t>(hour_index(log.timestamp(r)) - h0);
    all[h] += 1.0;
    const auto row = log.row(r);
    for (std::size_t a = 0; a < row.size(); ++a) per_item[index.offset[a] + row[a]][h] += 1.0;
  }
  return {std::move(per_item), std::move(all)};
}

}  // namespace detail

/// Mines the training window with Eclat-CC and fits ETS to every frequent
/// singleton and to G. Without frequent singletons only G is available.
inline std::pair<FISStore, UnivariateSet> build_store(const TransactionLog& log,
                                                      const TimeWindow& window,
                                                      const SupportThreshold& threshold,
                                                      unsigned threads = 1) {
  if (!window.hour_aligned()) throw AlignmentError("training window must align to whole hours");
  const LogView view(log, window);
  if (view.size() == 0) throw ConfigError("training window holds no transactions");

  MiningConfig cfg;
  cfg.algorithm = Algorithm::eclat_cc;
  cfg.threshold = threshold;
  cfg.threads = threads;
  auto mined = mine_eclat_cc(view, cfg);
  const std::uint64_t kappa = threshold.resolve(view.size());

  const detail::ItemIndex index(log.schema());
  auto [per_item, all] = detail::singleton_hourly(log, window, index);
  const std::int64_t h0 = hour_index(window.start());

  std::vector<UnivariateMember> members;
  for (const auto& r : mined.records) {
    if (r.itemset.size() != 1) continue;
    const ItemCode c = r.itemset[0];
    UnivariateMember m;
    m.item = c;
    m.support = r.support;
    m.series = HourlySeries{h0, std::move(per_item[index.offset[c.attr] + c.value])};
    m.params = fit_ets(m.series);
    members.push_back(std::move(m));
  }
  UnivariateMember g;
  g.support = view.size();
  g.series = HourlySeries{h0, std::move(all)};
  g.params = fit_ets(g.series);

  return {FISStore(log.schema(), std::move(mined.records), kappa, window, view.size()),
          UnivariateSet(std::move(members), std::move(g))};
}

/// s_train(T) / s_train(U) for a frequent T containing U's item. Returns
/// nullopt when T is infrequent.
inline std::optional<double> conditional_multiplier(const FISStore& store, const Itemset& t,
                                                    const std::optional<ItemCode>& u) {
  std::uint64_t su = store.n_train();
  if (u) {
    if (!t.contains(*u)) throw ContractViolation("U's item must belong to T");
    const auto s = store.support(Itemset{*u});
    if (!s) throw ContractViolation("U is not in the store");
    su = *s;
  }
  const auto st = store.support(t);
  if (!st) return std::nullopt;
  return static_cast<double>(*st) / static_cast<double>(su);
}

/// sigma² = p̂²·Σσ_step² + ŝ(U)²·p̂(1 − p̂)/s_train(U).
inline double estimate_sigma(double multiplier, std::uint64_t s_train_u, double forecast_sum,
                             std::span<const double> step_sigmas) {
  double var_s = 0.0;
  for (double s : step_sigmas) var_s += s * s;
  const double var_p =
      multiplier * (1.0 - multiplier) / static_cast<double>(std::max<std::uint64_t>(s_train_u, 1));
  return std::sqrt(multiplier * multiplier * var_s + forecast_sum * forecast_sum * std::max(0.0, var_p));
}

namespace detail {

// Forecast of `m` over `horizon`: point sum and per-step sigmas.
inline std::pair<double, std::vector<double>> horizon_forecast(const FISStore& store,
                                                               const UnivariateMember& m,
                                                               const TimeWindow& horizon) {
  if (!horizon.hour_aligned()) throw AlignmentError("horizon must align to whole hours");
  if (horizon.start() < store.train_window().end()) {
    throw ContractViolation("horizon must start at or after the end of training");
  }
  const auto offset = static_cast<std::size_t>((horizon.start() - store.train_window().end()) / kSecondsPerHour);
  const std::size_t hours = horizon.hours();
  const auto f = forecast(m.params, offset + hours);
  double sum = 0.0;
  for (std::size_t i = offset; i < offset + hours; ++i) sum += f.point[i];
  return {sum, std::vector<double>(f.sigma.begin() + static_cast<std::ptrdiff_t>(offset), f.sigma.end())};
}

inline Estimate finish(const TargetDefinition& t, const TimeWindow& horizon, const UnivariateMember& m,
                       double multiplier, EstimateMethod method, const FISStore& store) {
  const auto [sum, sigmas] = horizon_forecast(store, m, horizon);
  Estimate e{t, horizon, 0.0, 0.0, m.item};
  e.method = method;
  e.multiplier = multiplier;
  e.univariate_forecast = sum;
  e.univariate_support = m.support;
  e.point = multiplier * sum;
  e.sigma = estimate_sigma(multiplier, m.support, sum, sigmas);
  return e;
}

inline const UnivariateMember& member_for(const UnivariateSet& uset, const std::optional<ItemCode>& u) {
  if (!u) return uset.global();
  const auto* m = uset.find(*u);
  if (!m) throw ContractViolation("U is not a univariate member");
  return *m;
}

}  // namespace detail

/// Multiplier estimate conditioned on a given U (empty = G). Requires T frequent.
inline Estimate estimate_frequent(const FISStore& store, const UnivariateSet& uset,
                                  const TargetDefinition& t, const TimeWindow& horizon,
                                  const std::optional<ItemCode>& u) {
  const auto& m = detail::member_for(uset, u);
  const auto p = conditional_multiplier(store, Itemset(t.items()), u);
  if (!p) throw ContractViolation("estimate_frequent needs a frequent target");
  return detail::finish(t, horizon, m, *p, EstimateMethod::frequent_multiplier, store);
}

/// Conditional-independence product with a given U (empty = G).
inline Estimate estimate_infrequent(const FISStore& store, const UnivariateSet& uset,
                                    const TargetDefinition& t, const TimeWindow& horizon,
                                    const std::optional<ItemCode>& u) {
  const auto& m = detail::member_for(uset, u);
  const auto items = t.items();
  if (items.empty()) throw ContractViolation("estimate_infrequent needs a constrained target");
  if (u && std::find(items.begin(), items.end(), *u) == items.end()) {
    throw ContractViolation("U's item must belong to T");
  }
  const double su = static_cast<double>(m.support);
  const double bound = static_cast<double>(store.kappa()) / su;
  double product = 1.0;
  bool used_bound = false;
  for (const auto& ti : items) {
    if (u && ti == *u) continue;
    const Itemset pair = u ? Itemset{ti, *u} : Itemset{ti};
    if (const auto s = store.support(pair)) {
      product *= static_cast<double>(*s) / su;
    } else {
      product *= bound;
      used_bound = true;
    }
  }
  return detail::finish(t, horizon, m, product,
                        used_bound ? EstimateMethod::threshold_bound_mix : EstimateMethod::independence_product,
                        store);
}

/// Evaluates every member whose item is in T (G when there is none) and keeps
/// the smallest sigma; ties go to larger training support, then item order.
/// The all-wildcard target is answered by G directly.
inline Estimate choose_best_univariate(const FISStore& store, const UnivariateSet& uset,
                                       const TargetDefinition& t, const TimeWindow& horizon) {
  const auto items = t.items();
  const Itemset itemset(items);
  const bool frequent = store.support(itemset).has_value();
  auto estimate_with = [&](const std::optional<ItemCode>& u) {
    return frequent ? estimate_frequent(store, uset, t, horizon, u)
                    : estimate_infrequent(store, uset, t, horizon, u);
  };
  if (items.empty()) return estimate_frequent(store, uset, t, horizon, std::nullopt);

  std::optional<Estimate> best;
  for (const auto& c : itemset) {
    const auto* m = uset.find(c);
    if (!m) continue;
    Estimate e = estimate_with(c);
    if (!best || e.sigma < best->sigma ||
        (e.sigma == best->sigma && (e.univariate_support > best->univariate_support ||
                                    (e.univariate_support == best->univariate_support &&
                                     *e.chosen_univariate < *best->chosen_univariate)))) {
      best = std::move(e);
    }
  }
  if (!best) best = estimate_with(std::nullopt);
  return *best;
}

// Store persistence: <prefix>.fis, <prefix>.uni and <prefix>.meta.

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return in;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError("bad number '" + s + "'", line);
}

inline std::string univariate_line(const UnivariateMember& m, const AttributeSchema& schema) {
  std::string line = m.item ? schema.render(*m.item) : "*";
  const auto& p = m.params;
  line += '\t';
  line += fmt17(p.alpha) + ',' + fmt17(p.beta) + ',' + fmt17(p.gamma) + ',' + fmt17(p.level) + ',' +
          fmt17(p.trend);
  for (double s : p.seasonal) line += ',' + fmt17(s);
  line += ',' + fmt17(p.resid_sigma);
  return line;
}

}  // namespace detail

inline void save_store(const std::filesystem::path& prefix, const FISStore& store, const UnivariateSet& uset) {
  const auto& schema = store.schema();
  check_renderable(schema);
  {
    auto out = detail::open_out(prefix.string() + ".fis");
    write_fis(out, store.records(), schema);
  }
  {
    auto out = detail::open_out(prefix.string() + ".uni");
    out << detail::univariate_line(uset.global(), schema) << '\n';
    for (const auto& m : uset.members()) out << detail::univariate_line(m, schema) << '\n';
  }
  {
    auto out = detail::open_out(prefix.string() + ".meta");
    out << "kappa\t" << store.kappa() << '\n'
        << "n_train\t" << store.n_train() << '\n'
        << "train_start\t" << store.train_window().start() << '\n'
        << "train_end\t" << store.train_window().end() << '\n';
    for (const auto& a : schema.attributes()) {
      out << "attribute\t" << a.name;
      for (const auto& v : a.values) out << '\t' << v;
      out << '\n';
    }
  }
}

inline std::pair<FISStore, UnivariateSet> load_store(const std::filesystem::path& prefix) {
  std::uint64_t kappa = 0, n_train = 0;
  std::optional<Timestamp> start, end;
  std::vector<Attribute> attrs;
  {
    auto in = detail::open_in(prefix.string() + ".meta");
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (line.empty()) continue;
      const auto f = detail::split(line, '\t');
      try {
        if (f[0] == "kappa" && f.size() == 2) {
          kappa = std::stoull(f[1]);
        } else if (f[0] == "n_train" && f.size() == 2) {
          n_train = std::stoull(f[1]);
        } else if (f[0] == "train_start" && f.size() == 2) {
          start = std::stoll(f[1]);
        } else if (f[0] == "train_end" && f.size() == 2) {
          end = std::stoll(f[1]);
        } else if (f[0] == "attribute" && f.size() >= 2) {
          attrs.push_back(Attribute{f[1], std::vector<std::string>(f.begin() + 2, f.end())});
        } else {
          throw ParseError("unrecognized metadata line", no);
        }
      } catch (const std::logic_error&) {
        throw ParseError("bad metadata value", no);
      }
    }
  }
  if (!start || !end || kappa == 0 || attrs.empty()) throw ParseError("incomplete store metadata");
  AttributeSchema schema(std::move(attrs));

  std::vector<FISRecord> records;
  {
    auto in = detail::open_in(prefix.string() + ".fis");
    records = read_fis(in, schema);
  }
  FISStore store(schema, std::move(records), kappa, TimeWindow(*start, *end), n_train);

  std::vector<UnivariateMember> members;
  std::optional<UnivariateMember> global;
  {
    auto in = detail::open_in(prefix.string() + ".uni");
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError("univariate line without a tab", no);
      const auto v = detail::split(line.substr(tab + 1), ',');
      if (v.size() != 6 + kSeasonLength) throw ParseError("univariate line needs 30 numbers", no);
      UnivariateMember m;
      const std::string key = line.substr(0, tab);
      if (key != "*") {
        m.item = parse_item(key, schema);
        const auto s = store.support(Itemset{*m.item});
        if (!s) throw ParseError("univariate '" + key + "' missing from the FIS file", no);
        m.support = *s;
      } else {
        m.support = n_train;
      }
      auto& p = m.params;
      p.alpha = detail::parse_double(v[0], no);
      p.beta = detail::parse_double(v[1], no);
      p.gamma = detail::parse_double(v[2], no);
      p.level = detail::parse_double(v[3], no);
      p.trend = detail::parse_double(v[4], no);
      for (std::size_t j = 0; j < kSeasonLength; ++j) p.seasonal[j] = detail::parse_double(v[5 + j], no);
      p.resid_sigma = detail::parse_double(v[5 + kSeasonLength], no);
      if (m.item) {
        members.push_back(std::move(m));
      } else {
        global = std::move(m);
      }
    }
  }
  if (!global) throw ParseError("univariate file lacks the global '*' line");
  return {std::move(store), UnivariateSet(std::move(members), std::move(*global))};
}

}  // namespace audfc
