#pragma once

// Level-wise Apriori, optionally pushing the categorical constraint into
// candidate generation. CC is anti-monotone and succinct, so a candidate
// that violates it is dropped before its support is counted.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "audfc/mining.hpp"

namespace audfc {

namespace detail {

using Candidate = std::vector<ItemCode>;

// Counts every candidate contained in `items` (one frequent item per
// attribute, sorted). `cands[lo, hi)` share their first `depth` items.
inline void count_in_transaction(std::span<const ItemCode> items, std::size_t pos,
                                 std::size_t depth, std::size_t lo, std::size_t hi,
                                 const std::vector<Candidate>& cands,
                                 std::vector<std::uint64_t>& counts) {
  const std::size_t level = cands[lo].size();
  if (depth == level) {
    ++counts[lo];
    return;
  }
  const std::size_t needed = level - depth;
  for (std::size_t j = pos; j + needed <= items.size(); ++j) {
    auto first = std::lower_bound(cands.begin() + static_cast<std::ptrdiff_t>(lo),
                                  cands.begin() + static_cast<std::ptrdiff_t>(hi), items[j],
                                  [depth](const Candidate& c, ItemCode v) { return c[depth] < v; });
    auto last = std::upper_bound(first, cands.begin() + static_cast<std::ptrdiff_t>(hi), items[j],
                                 [depth](ItemCode v, const Candidate& c) { return v < c[depth]; });
    if (first == last) continue;
    count_in_transaction(items, j + 1, depth + 1, static_cast<std::size_t>(first - cands.begin()),
                         static_cast<std::size_t>(last - cands.begin()), cands, counts);
  }
}

template <RecordSink Sink>
MiningStats apriori_impl(LogView db, const MiningConfig& cfg, bool use_cc, Sink&& sink) {
  const Stopwatch clock;
  MiningStats stats;
  const std::uint64_t kappa = cfg.threshold.resolve(db.size());
  const std::size_t max_size = effective_max_size(cfg, db.schema());

  const ItemIndex index(db.schema());
  const auto single_counts = count_singletons(db, index);
  std::vector<bool> frequent_item(index.size(), false);
  std::vector<Candidate> level;
  std::vector<std::uint64_t> level_support;
  for (std::uint32_t id = 0; id < index.size(); ++id) {
    if (single_counts[id] >= kappa && single_counts[id] > 0) {
      frequent_item[id] = true;
      level.push_back({index.code[id]});
      level_support.push_back(single_counts[id]);
    }
  }
  stats.counted_per_level.assign(2, 0);
  stats.counted_per_level[1] = index.size();

  std::vector<ItemCode> row_items;
  for (std::size_t size = 1;; ++size) {
    for (std::size_t i = 0; i < level.size(); ++i) sink(std::span<const ItemCode>(level[i]), level_support[i]);
    if (level.empty() || size >= max_size) break;

    // Join itemsets sharing their first size-1 items; `level` is sorted, so
    // such itemsets are contiguous.
    std::vector<Candidate> cands;
    std::size_t block = 0;
    while (block < level.size()) {
      std::size_t end = block + 1;
      while (end < level.size() &&
             std::equal(level[block].begin(), level[block].end() - 1, level[end].begin())) {
        ++end;
      }
      for (std::size_t x = block; x < end; ++x) {
        for (std::size_t y = x + 1; y < end; ++y) {
          ++stats.candidates_generated;
          const ItemCode lx = level[x].back();
          const ItemCode ly = level[y].back();
          if (use_cc && lx.attr == ly.attr) {
            ++stats.candidates_rejected_by_cc;
            continue;
          }
          Candidate c = level[x];
          c.push_back(ly);
          // Every (size)-subset must be frequent.
          bool keep = true;
          for (std::size_t drop = 0; drop + 2 < c.size() && keep; ++drop) {
            Candidate sub;
            sub.reserve(size);
            for (std::size_t t = 0; t < c.size(); ++t) {
              if (t != drop) sub.push_back(c[t]);
            }
            keep = std::binary_search(level.begin(), level.end(), sub);
          }
          if (keep) cands.push_back(std::move(c));
        }
      }
      block = end;
    }
    stats.counted_per_level.push_back(cands.size());
    if (cands.empty()) break;

    std::vector<std::uint64_t> counts(cands.size(), 0);
    for (std::size_t r = 0; r < db.size(); ++r) {
      auto row = db.row(r);
      row_items.clear();
      for (std::uint32_t a = 0; a < row.size(); ++a) {
        if (frequent_item[index.offset[a] + row[a]]) row_items.push_back({a, row[a]});
      }
      if (row_items.size() > size) {
        count_in_transaction(row_items, 0, 0, 0, cands.size(), cands, counts);
      }
    }

    std::vector<Candidate> next;
    std::vector<std::uint64_t> next_support;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (counts[i] >= kappa) {
        next.push_back(std::move(cands[i]));
        next_support.push_back(counts[i]);
      }
    }
    level = std::move(next);
    level_support = std::move(next_support);
  }
  stats.wall_time = clock.seconds();
  return stats;
}

}  // namespace detail

template <RecordSink Sink>
MiningStats mine_apriori(LogView db, const MiningConfig& cfg, Sink&& sink) {
  detail::require_algorithm(cfg, Algorithm::apriori);
  return detail::apriori_impl(db, cfg, false, std::forward<Sink>(sink));
}

template <RecordSink Sink>
MiningStats mine_apriori_cc(LogView db, const MiningConfig& cfg, Sink&& sink) {
  detail::require_algorithm(cfg, Algorithm::apriori_cc);
  return detail::apriori_impl(db, cfg, true, std::forward<Sink>(sink));
}

inline MiningResult mine_apriori(LogView db, const MiningConfig& cfg) {
  MiningResult r;
  r.stats = mine_apriori(db, cfg, CollectSink{&r.records});
  sort_records(r.records);
  return r;
}

inline MiningResult mine_apriori_cc(LogView db, const MiningConfig& cfg) {
  MiningResult r;
  r.stats = mine_apriori_cc(db, cfg, CollectSink{&r.records});
  sort_records(r.records);
  return r;
}

}  // namespace audfc
