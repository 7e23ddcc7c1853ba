#pragma once

// FP-Growth: prefix-tree compression of the horizontal database, mined by
// recursive conditional trees. Holds both representations at once, so there
// is no constrained variant.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "audfc/mining.hpp"

namespace audfc {

namespace detail {

class FpTree {
 public:
  static constexpr std::int32_t kNone = -1;

  struct Node {
    std::int32_t rank;
    std::uint64_t count;
    std::int32_t parent;
    std::int32_t first_child = kNone;
    std::int32_t next_sibling = kNone;
    std::int32_t next_same = kNone;  // header-table chain
  };

  explicit FpTree(std::size_t ranks) : head_(ranks, kNone), support_(ranks, 0) {
    nodes_.push_back(Node{kNone, 0, kNone});
  }

  /// Inserts a path of ranks in ascending order (most frequent first).
  void insert(std::span<const std::int32_t> path, std::uint64_t count) {
    std::int32_t cur = 0;
    for (std::int32_t r : path) {
      std::int32_t child = nodes_[static_cast<std::size_t>(cur)].first_child;
      while (child != kNone && nodes_[static_cast<std::size_t>(child)].rank != r) {
        child = nodes_[static_cast<std::size_t>(child)].next_sibling;
      }
      if (child == kNone) {
        child = static_cast<std::int32_t>(nodes_.size());
        Node n{r, 0, cur};
        n.next_sibling = nodes_[static_cast<std::size_t>(cur)].first_child;
        n.next_same = head_[static_cast<std::size_t>(r)];
        nodes_.push_back(n);
        nodes_[static_cast<std::size_t>(cur)].first_child = child;
        head_[static_cast<std::size_t>(r)] = child;
      }
      nodes_[static_cast<std::size_t>(child)].count += count;
      support_[static_cast<std::size_t>(r)] += count;
      cur = child;
    }
  }

  std::size_t ranks() const { return head_.size(); }
  std::uint64_t support(std::size_t rank) const { return support_[rank]; }
  std::int32_t head(std::size_t rank) const { return head_[rank]; }
  const Node& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<Node> nodes_;
  std::vector<std::int32_t> head_;
  std::vector<std::uint64_t> support_;
};

template <RecordSink Sink>
class FpGrowthRunner {
 public:
  FpGrowthRunner(std::uint64_t kappa, std::size_t max_size, const std::vector<ItemCode>& by_rank,
                 Sink& sink, MiningStats& stats)
      : kappa_(kappa), max_size_(max_size), by_rank_(by_rank), sink_(sink), stats_(stats) {}

  void mine(const FpTree& tree) {
    // Least frequent first, as in the classic formulation.
    for (std::size_t r = tree.ranks(); r-- > 0;) {
      const std::uint64_t s = tree.support(r);
      if (s == 0) continue;
      ++stats_.candidates_generated;
      if (s < kappa_) continue;
      suffix_.push_back(static_cast<std::int32_t>(r));
      emit(s);
      if (suffix_.size() < max_size_) {
        FpTree cond = conditional(tree, r);
        if (cond.ranks() > 0) mine(cond);
      }
      suffix_.pop_back();
    }
  }

 private:
  void emit(std::uint64_t support) {
    items_.clear();
    for (auto r : suffix_) items_.push_back(by_rank_[static_cast<std::size_t>(r)]);
    std::sort(items_.begin(), items_.end());
    sink_(std::span<const ItemCode>(items_), support);
  }

  // Tree over the prefix paths of `rank`, keeping only ranks frequent there.
  FpTree conditional(const FpTree& tree, std::size_t rank) {
    std::vector<std::uint64_t> cond_support(rank, 0);
    for (auto n = tree.head(rank); n != FpTree::kNone; n = tree.node(n).next_same) {
      const auto c = tree.node(n).count;
      for (auto p = tree.node(n).parent; p != 0; p = tree.node(p).parent) {
        cond_support[static_cast<std::size_t>(tree.node(p).rank)] += c;
      }
    }
    std::size_t keep = 0;
    for (std::size_t r = 0; r < rank; ++r) {
      if (cond_support[r] >= kappa_) keep = r + 1;
    }
    FpTree cond(keep);
    std::vector<std::int32_t> path;
    for (auto n = tree.head(rank); n != FpTree::kNone; n = tree.node(n).next_same) {
      path.clear();
      for (auto p = tree.node(n).parent; p != 0; p = tree.node(p).parent) {
        const auto pr = tree.node(p).rank;
        if (cond_support[static_cast<std::size_t>(pr)] >= kappa_) path.push_back(pr);
      }
      if (path.empty()) continue;
      std::reverse(path.begin(), path.end());
      cond.insert(path, tree.node(n).count);
    }
    return cond;
  }

  std::uint64_t kappa_;
  std::size_t max_size_;
  const std::vector<ItemCode>& by_rank_;
  Sink& sink_;
  MiningStats& stats_;
  std::vector<std::int32_t> suffix_;
  std::vector<ItemCode> items_;
};

}  // namespace detail

/// Streams records to `sink`; emission order is suffix-driven, not
/// lexicographic.
template <RecordSink Sink>
MiningStats mine_fpgrowth(LogView db, const MiningConfig& cfg, Sink&& sink) {
  detail::require_algorithm(cfg, Algorithm::fpgrowth);
  const detail::Stopwatch clock;
  MiningStats stats;
  const std::uint64_t kappa = cfg.threshold.resolve(db.size());
  const std::size_t max_size = detail::effective_max_size(cfg, db.schema());

  const detail::ItemIndex index(db.schema());
  const auto counts = detail::count_singletons(db, index);
  std::vector<std::uint32_t> frequent;
  for (std::uint32_t id = 0; id < index.size(); ++id) {
    if (counts[id] >= kappa && counts[id] > 0) frequent.push_back(id);
  }
  // Rank by descending support, ties by item order.
  std::stable_sort(frequent.begin(), frequent.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return counts[a] > counts[b]; });
  std::vector<std::int32_t> rank_of(index.size(), -1);
  std::vector<ItemCode> by_rank;
  for (std::size_t r = 0; r < frequent.size(); ++r) {
    rank_of[frequent[r]] = static_cast<std::int32_t>(r);
    by_rank.push_back(index.code[frequent[r]]);
  }

  detail::FpTree tree(frequent.size());
  std::vector<std::int32_t> path;
  for (std::size_t r = 0; r < db.size(); ++r) {
    auto row = db.row(r);
    path.clear();
    for (std::size_t a = 0; a < row.size(); ++a) {
      const auto rk = rank_of[index.offset[a] + row[a]];
      if (rk >= 0) path.push_back(rk);
    }
    std::sort(path.begin(), path.end());
    if (!path.empty()) tree.insert(path, 1);
  }

  detail::FpGrowthRunner<std::remove_reference_t<Sink>> runner(kappa, max_size, by_rank, sink,
                                                               stats);
  runner.mine(tree);
  stats.wall_time = clock.seconds();
  return stats;
}

inline MiningResult mine_fpgrowth(LogView db, const MiningConfig& cfg) {
  MiningResult r;
  r.stats = mine_fpgrowth(db, cfg, CollectSink{&r.records});
  sort_records(r.records);
  return r;
}

}  // namespace audfc
