#pragma once

// Shared vocabulary for the frequent itemset miners: thresholds, config,
// instrumentation and the vertical (item -> tidlist) representation.
//
// Threshold semantics everywhere: an itemset is frequent iff s(I) >= kappa.

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "audfc/dataset.hpp"
#include "audfc/error.hpp"
#include "audfc/itemset.hpp"

namespace audfc {

/// Support threshold, either an absolute count or an exact decimal fraction
/// of the row count. Fractions resolve to ceil(fraction * n).
class SupportThreshold {
 public:
  static SupportThreshold absolute(std::uint64_t count) {
    SupportThreshold t;
    t.numerator_ = count;
    t.denominator_ = 0;
    return t;
  }

  /// `numerator / denominator` of n, e.g. (1, 100) for 1%.
  static SupportThreshold fraction(std::uint64_t numerator, std::uint64_t denominator) {
    if (denominator == 0) throw ConfigError("support fraction with zero denominator");
    SupportThreshold t;
    t.numerator_ = numerator;
    t.denominator_ = denominator;
    return t;
  }

  /// Fraction given as a double; its shortest decimal form is taken as exact,
  /// so 0.01 means exactly 1/100.
  static SupportThreshold fraction(double f) {
    if (!(f > 0.0) || f > 1.0) throw ConfigError("support fraction must lie in (0, 1]");
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, f, std::chars_format::fixed);
    return parse_decimal(std::string_view(buf, static_cast<std::size_t>(p - buf)), 1);
  }

  /// `N%` is a percentage of the row count, a bare integer is absolute.
  static SupportThreshold parse(std::string_view text) {
    if (text.empty()) throw ConfigError("empty support value");
    if (text.back() == '%') {
      auto t = parse_decimal(text.substr(0, text.size() - 1), 100);
      if (t.numerator_ == 0) throw ConfigError("support percentage must be positive");
      if (t.numerator_ > t.denominator_) throw ConfigError("support percentage above 100%");
      return t;
    }
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) {
      throw ConfigError("support '" + std::string(text) + "' is neither N% nor an integer");
    }
    return absolute(v);
  }

  bool is_relative() const noexcept { return denominator_ != 0; }

  /// Absolute kappa for a database of `n` rows; a result of 0 is an error.
  std::uint64_t resolve(std::uint64_t n) const {
    std::uint64_t kappa = numerator_;
    if (is_relative()) {
      const unsigned __int128 prod = static_cast<unsigned __int128>(numerator_) * n;
      kappa = static_cast<std::uint64_t>((prod + denominator_ - 1) / denominator_);
    }
    if (kappa == 0) throw ConfigError("support threshold resolves to 0");
    return kappa;
  }

  std::string to_string() const {
    if (!is_relative()) return std::to_string(numerator_);
    return std::to_string(numerator_) + "/" + std::to_string(denominator_) + " of n";
  }

 private:
  static SupportThreshold parse_decimal(std::string_view s, std::uint64_t scale) {
    std::uint64_t num = 0;
    std::uint64_t den = scale;
    bool dot = false;
    bool any = false;
    for (char c : s) {
      if (c == '.' && !dot) {
        dot = true;
        continue;
      }
      if (c < '0' || c > '9') throw ConfigError("bad support fraction '" + std::string(s) + "'");
      any = true;
      if (num > (UINT64_MAX - 9) / 10 || (dot && den > UINT64_MAX / 10)) {
        throw ConfigError("support fraction has too many digits");
      }
      num = num * 10 + static_cast<std::uint64_t>(c - '0');
      if (dot) den *= 10;
    }
    if (!any) throw ConfigError("bad support fraction '" + std::string(s) + "'");
    while (num % 10 == 0 && den % 10 == 0 && den > 1 && num > 0) num /= 10, den /= 10;
    return fraction(num, den);
  }

  std::uint64_t numerator_ = 1;
  std::uint64_t denominator_ = 0;
};

enum class Algorithm { apriori, apriori_cc, eclat, eclat_cc, fpgrowth };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::apriori, Algorithm::apriori_cc,
                                               Algorithm::eclat, Algorithm::eclat_cc,
                                               Algorithm::fpgrowth};

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::apriori: return "apriori";
    case Algorithm::apriori_cc: return "apriori_cc";
    case Algorithm::eclat: return "eclat";
    case Algorithm::eclat_cc: return "eclat_cc";
    case Algorithm::fpgrowth: return "fpgrowth";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (auto a : kAllAlgorithms) {
    if (to_string(a) == s) return a;
  }
  if (s == "apriori-cc") return Algorithm::apriori_cc;
  if (s == "eclat-cc") return Algorithm::eclat_cc;
  if (s == "fp-growth") return Algorithm::fpgrowth;
  return std::nullopt;
}

struct MiningConfig {
  SupportThreshold threshold = SupportThreshold::absolute(1);
  Algorithm algorithm = Algorithm::eclat_cc;
  std::optional<std::size_t> max_size;
  /// Worker threads for the Eclat family; 1 runs serially.
  unsigned threads = 1;
};

struct MiningStats {
  std::uint64_t candidates_generated = 0;
  std::uint64_t candidates_rejected_by_cc = 0;
  std::uint64_t tidlist_intersections = 0;
  double wall_time = 0.0;
  /// Candidates whose support was actually counted, indexed by itemset size
  /// (level-wise miners only).
  std::vector<std::uint64_t> counted_per_level;

  /// Equality ignoring wall time.
  bool same_counts(const MiningStats& o) const {
    return candidates_generated == o.candidates_generated &&
           candidates_rejected_by_cc == o.candidates_rejected_by_cc &&
           tidlist_intersections == o.tidlist_intersections &&
           counted_per_level == o.counted_per_level;
  }
};

struct MiningResult {
  std::vector<FISRecord> records;
  MiningStats stats;
};

/// Receives each frequent itemset (sorted items) with its support.
template <class S>
concept RecordSink = requires(S s, std::span<const ItemCode> items, std::uint64_t support) {
  s(items, support);
};

/// Collects records into a vector.
struct CollectSink {
  std::vector<FISRecord>* out;
  void operator()(std::span<const ItemCode> items, std::uint64_t support) const {
    out->push_back(FISRecord{Itemset(items), support});
  }
};

/// Counts records without storing them.
struct CountSink {
  std::uint64_t* count;
  void operator()(std::span<const ItemCode>, std::uint64_t) const { ++*count; }
};

namespace detail {

inline void require_algorithm(const MiningConfig& cfg, Algorithm expected) {
  if (cfg.algorithm != expected) {
    throw ConfigError("config selects " + std::string(to_string(cfg.algorithm)) + ", expected " +
                      std::string(to_string(expected)));
  }
}

// Without a cap, itemsets may grow up to the number of distinct items; the
// unconstrained miners must not assume the one-value-per-attribute bound.
inline std::size_t effective_max_size(const MiningConfig& cfg, const AttributeSchema& schema) {
  if (cfg.max_size && *cfg.max_size == 0) throw ConfigError("max itemset size must be >= 1");
  return cfg.max_size ? *cfg.max_size : schema.item_count();
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Dense item ids: id = offset[attr] + value, which preserves ItemCode order.
struct ItemIndex {
  std::vector<std::uint32_t> offset;
  std::vector<ItemCode> code;

  explicit ItemIndex(const AttributeSchema& schema) {
    offset.reserve(schema.k() + 1);
    std::uint32_t o = 0;
    for (std::uint32_t a = 0; a < schema.k(); ++a) {
      offset.push_back(o);
      for (std::uint32_t v = 0; v < schema.value_count(a); ++v) code.push_back({a, v});
      o += static_cast<std::uint32_t>(schema.value_count(a));
    }
    offset.push_back(o);
  }

  std::uint32_t id(ItemCode c) const { return offset[c.attr] + c.value; }
  std::size_t size() const { return code.size(); }
};

inline std::vector<std::uint64_t> count_singletons(LogView db, const ItemIndex& index) {
  std::vector<std::uint64_t> counts(index.size(), 0);
  for (std::size_t r = 0; r < db.size(); ++r) {
    auto row = db.row(r);
    for (std::size_t a = 0; a < row.size(); ++a) ++counts[index.offset[a] + row[a]];
  }
  return counts;
}

}  // namespace detail

/// Frequent singletons with their tidlists, in ItemCode order.
struct VerticalDb {
  std::vector<ItemCode> items;
  std::vector<TidList> tids;
};

/// Builds tidlists for items with support >= kappa (one counting pass, one
/// filling pass).
inline VerticalDb build_vertical(LogView db, std::uint64_t kappa) {
  const detail::ItemIndex index(db.schema());
  const auto counts = detail::count_singletons(db, index);
  VerticalDb v;
  std::vector<std::int64_t> slot(index.size(), -1);
  for (std::uint32_t id = 0; id < index.size(); ++id) {
    if (counts[id] >= kappa && counts[id] > 0) {
      slot[id] = static_cast<std::int64_t>(v.items.size());
      v.items.push_back(index.code[id]);
      v.tids.emplace_back();
      v.tids.back().reserve(counts[id]);
    }
  }
  for (std::size_t r = 0; r < db.size(); ++r) {
    auto row = db.row(r);
    for (std::size_t a = 0; a < row.size(); ++a) {
      const auto s = slot[index.offset[a] + row[a]];
      if (s >= 0) v.tids[static_cast<std::size_t>(s)].push_back(static_cast<std::uint32_t>(r));
    }
  }
  return v;
}

/// Linear-merge intersection. Gives up early once the result cannot reach
/// `min_size`; the returned list is then shorter than `min_size`.
inline TidList intersect(const TidList& a, const TidList& b, std::uint64_t min_size = 0) {
  TidList out;
  out.reserve(std::min(a.size(), b.size()));
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    const auto remaining =
        static_cast<std::uint64_t>(std::min(a.end() - i, b.end() - j)) + out.size();
    if (remaining < min_size) break;
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      out.push_back(*i);
      ++i;
      ++j;
    }
  }
  return out;
}

/// Transaction cover stored either as a sorted tidlist or, once the list
/// would outgrow it, as a bitset over the `universe` row ids.
class Cover {
 public:
  static constexpr std::size_t kDenseRatio = 1024;

  Cover() = default;

  static Cover from_list(TidList tids, std::size_t universe) {
    Cover c;
    c.universe_ = universe;
    c.count_ = tids.size();
    if (is_dense(c.count_, universe)) {
      c.bits_.assign((universe + 63) / 64, 0);
      for (auto t : tids) c.bits_[t >> 6] |= std::uint64_t{1} << (t & 63);
    } else {
      c.tids_ = std::move(tids);
    }
    return c;
  }

  std::uint64_t size() const noexcept { return count_; }
  bool dense() const noexcept { return !bits_.empty(); }

  TidList to_list() const {
    if (!dense()) return tids_;
    TidList out;
    out.reserve(count_);
    append_bits(bits_, out);
    return out;
  }

  /// Intersection; a sparse operand may stop early once fewer than
  /// `min_size` rows can remain, in which case size() < min_size.
  friend Cover intersect(const Cover& a, const Cover& b, std::uint64_t min_size) {
    Cover out;
    out.universe_ = a.universe_;
    if (a.dense() && b.dense()) {
      std::vector<std::uint64_t> w(a.bits_.size());
      std::uint64_t n = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = a.bits_[i] & b.bits_[i];
        n += static_cast<std::uint64_t>(std::popcount(w[i]));
      }
      out.count_ = n;
      if (is_dense(n, out.universe_)) {
        out.bits_ = std::move(w);
      } else {
        out.tids_.reserve(n);
        append_bits(w, out.tids_);
      }
    } else if (a.dense() || b.dense()) {
      const Cover& bits = a.dense() ? a : b;
      const Cover& list = a.dense() ? b : a;
      out.tids_.reserve(list.count_);
      for (auto t : list.tids_) {
        if ((bits.bits_[t >> 6] >> (t & 63)) & 1) out.tids_.push_back(t);
      }
      out.count_ = out.tids_.size();
    } else {
      out.tids_ = intersect(a.tids_, b.tids_, min_size);
      out.count_ = out.tids_.size();
    }
    return out;
  }

 private:
  static bool is_dense(std::uint64_t count, std::size_t universe) {
    return count > 0 && count * kDenseRatio > universe;
  }

  static void append_bits(const std::vector<std::uint64_t>& words, TidList& out) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      for (std::uint64_t w = words[i]; w != 0; w &= w - 1) {
        out.push_back(static_cast<std::uint32_t>(i * 64 + static_cast<std::size_t>(std::countr_zero(w))));
      }
    }
  }

  TidList tids_;
  std::vector<std::uint64_t> bits_;
  std::uint64_t count_ = 0;
  std::size_t universe_ = 0;
};

}  // namespace audfc
