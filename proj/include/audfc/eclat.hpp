#pragma once

// Depth-first Eclat over tidlists, with and without categorical-constraint
// pre-counting pruning.
//
// Each equivalence class P holds frequent itemsets sharing a prefix, one
// node per distinct last item. For X_a, X_b in P with X_b > X_a the candidate
// X_ab = X_a ∪ X_b is formed; the CC variant discards it before the tidlist
// intersection when it would hold two values of one attribute.

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

#include "audfc/mining.hpp"

namespace audfc {

namespace detail {

struct EclatNode {
  ItemCode item;
  Cover tids;
};

template <RecordSink Sink>
class EclatRunner {
 public:
  EclatRunner(std::uint64_t kappa, bool use_cc, std::size_t max_size, Sink& sink,
              MiningStats& stats)
      : kappa_(kappa), use_cc_(use_cc), max_size_(max_size), sink_(sink), stats_(stats) {}

  /// Processes the whole class, releasing each node's tidlist once used.
  void run(std::vector<EclatNode>& klass) {
    for (std::size_t a = 0; a < klass.size(); ++a) {
      expand(klass, a);
      klass[a].tids = Cover();
    }
  }

  /// Emits X_a and recurses into its extensions.
  void expand(const std::vector<EclatNode>& klass, std::size_t a) {
    const EclatNode& xa = klass[a];
    prefix_.push_back(xa.item);
    sink_(std::span<const ItemCode>(prefix_), xa.tids.size());
    if (prefix_.size() < max_size_) {
      std::vector<EclatNode> next;
      for (std::size_t b = a + 1; b < klass.size(); ++b) {
        ++stats_.candidates_generated;
        // Both X_a and X_b satisfy CC and share the prefix, so CC(X_ab) fails
        // exactly when their last items share an attribute.
        if (use_cc_ && klass[b].item.attr == xa.item.attr) {
          ++stats_.candidates_rejected_by_cc;
          continue;
        }
        ++stats_.tidlist_intersections;
        Cover t = intersect(xa.tids, klass[b].tids, kappa_);
        if (t.size() >= kappa_) next.push_back(EclatNode{klass[b].item, std::move(t)});
      }
      if (!next.empty()) run(next);
    }
    prefix_.pop_back();
  }

 private:
  std::uint64_t kappa_;
  bool use_cc_;
  std::size_t max_size_;
  Sink& sink_;
  MiningStats& stats_;
  std::vector<ItemCode> prefix_;
};

template <RecordSink Sink>
MiningStats eclat_impl(LogView db, const MiningConfig& cfg, bool use_cc, Sink&& sink) {
  const Stopwatch clock;
  MiningStats stats;
  const std::uint64_t kappa = cfg.threshold.resolve(db.size());
  const std::size_t max_size = effective_max_size(cfg, db.schema());
  VerticalDb vertical = build_vertical(db, kappa);

  std::vector<EclatNode> top;
  top.reserve(vertical.items.size());
  for (std::size_t i = 0; i < vertical.items.size(); ++i) {
    top.push_back(EclatNode{vertical.items[i], Cover::from_list(std::move(vertical.tids[i]), db.size())});
  }

  const unsigned threads = std::max(1u, cfg.threads);
  if (threads == 1 || top.size() < 2) {
    EclatRunner<std::remove_reference_t<Sink>> runner(kappa, use_cc, max_size, sink, stats);
    runner.run(top);
    stats.wall_time = clock.seconds();
    return stats;
  }

  // First-level classes are independent subtrees; workers take them
  // round-robin and the results are replayed in class order.
  std::vector<std::vector<FISRecord>> buckets(top.size());
  std::vector<MiningStats> worker_stats(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t a = w; a < top.size(); a += threads) {
          CollectSink local{&buckets[a]};
          EclatRunner<CollectSink> runner(kappa, use_cc, max_size, local, worker_stats[w]);
          runner.expand(top, a);
        }
      });
    }
  }
  for (const auto& ws : worker_stats) {
    stats.candidates_generated += ws.candidates_generated;
    stats.candidates_rejected_by_cc += ws.candidates_rejected_by_cc;
    stats.tidlist_intersections += ws.tidlist_intersections;
  }
  for (auto& bucket : buckets) {
    for (const auto& r : bucket) sink(r.itemset.items(), r.support);
  }
  stats.wall_time = clock.seconds();
  return stats;
}

}  // namespace detail

/// Unconstrained Eclat streaming records to `sink` in lexicographic order.
template <RecordSink Sink>
MiningStats mine_eclat(LogView db, const MiningConfig& cfg, Sink&& sink) {
  detail::require_algorithm(cfg, Algorithm::eclat);
  return detail::eclat_impl(db, cfg, false, std::forward<Sink>(sink));
}

/// Eclat-CC streaming records to `sink` in lexicographic order.
template <RecordSink Sink>
MiningStats mine_eclat_cc(LogView db, const MiningConfig& cfg, Sink&& sink) {
  detail::require_algorithm(cfg, Algorithm::eclat_cc);
  return detail::eclat_impl(db, cfg, true, std::forward<Sink>(sink));
}

inline MiningResult mine_eclat(LogView db, const MiningConfig& cfg) {
  MiningResult r;
  r.stats = mine_eclat(db, cfg, CollectSink{&r.records});
  return r;
}

inline MiningResult mine_eclat_cc(LogView db, const MiningConfig& cfg) {
  MiningResult r;
  r.stats = mine_eclat_cc(db, cfg, CollectSink{&r.records});
  return r;
}

/// Exact supports of arbitrary itemsets over `db`, aligned with `family`.
/// Itemsets are visited in sorted order so that shared prefixes reuse their
/// intersections.
inline std::vector<std::uint64_t> count_supports(LogView db, std::span<const Itemset> family) {
  std::vector<std::uint64_t> out(family.size(), 0);
  if (family.empty()) return out;
  const VerticalDb vertical = build_vertical(db, 1);
  auto tid_of = [&](ItemCode c) -> const TidList* {
    auto it = std::lower_bound(vertical.items.begin(), vertical.items.end(), c);
    if (it == vertical.items.end() || *it != c) return nullptr;
    return &vertical.tids[static_cast<std::size_t>(it - vertical.items.begin())];
  };

  std::vector<std::size_t> order(family.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return family[a] < family[b]; });

  static const TidList kEmpty;
  std::vector<ItemCode> path;
  std::vector<TidList> stack;  // stack[d] = cover of path[0..d]
  for (std::size_t idx : order) {
    const auto items = family[idx].items();
    if (items.empty()) {
      out[idx] = db.size();
      continue;
    }
    std::size_t common = 0;
    while (common < path.size() && common < items.size() && path[common] == items[common]) {
      ++common;
    }
    path.resize(common);
    stack.resize(common);
    for (std::size_t d = common; d < items.size(); ++d) {
      const TidList* single = tid_of(items[d]);
      const TidList& base = single ? *single : kEmpty;
      stack.push_back(d == 0 ? base : intersect(stack.back(), base));
      path.push_back(items[d]);
    }
    out[idx] = stack.back().size();
  }
  return out;
}

}  // namespace audfc
