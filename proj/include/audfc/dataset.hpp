#pragma once

// Event-log data model: attribute schema, item encoding, transactions,
// target definitions and windowed counting.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "audfc/error.hpp"

namespace audfc {

/// UTC epoch seconds.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

/// Floor division that also behaves for timestamps before the epoch.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

constexpr std::int64_t hour_index(Timestamp t) noexcept {
  return floor_div(t, kSecondsPerHour);
}

/// (attribute, value) pair. Ordered by attribute first, then value.
struct ItemCode {
  std::uint32_t attr = 0;
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(const ItemCode&, const ItemCode&) = default;
};

struct Attribute {
  std::string name;
  std::vector<std::string> values;
};

class AttributeSchema {
 public:
  AttributeSchema() = default;

  explicit AttributeSchema(std::vector<Attribute> attributes) {
    for (auto& a : attributes) {
      if (a.values.empty()) {
        throw SchemaError("attribute '" + a.name + "' has no values");
      }
      std::uint32_t idx = add_attribute(std::move(a.name));
      for (auto& v : a.values) add_value(idx, std::move(v));
    }
    if (attributes_.empty()) throw SchemaError("schema needs at least one attribute");
  }

  std::size_t k() const noexcept { return attributes_.size(); }

  const Attribute& attribute(std::size_t i) const { return attributes_.at(i); }
  const std::vector<Attribute>& attributes() const noexcept { return attributes_; }

  std::size_t value_count(std::size_t attr) const { return attributes_.at(attr).values.size(); }

  /// Total number of distinct items across all attributes.
  std::size_t item_count() const noexcept {
    std::size_t n = 0;
    for (const auto& a : attributes_) n += a.values.size();
    return n;
  }

  std::optional<std::uint32_t> find_attribute(std::string_view name) const {
    auto it = attr_index_.find(std::string(name));
    if (it == attr_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::uint32_t> find_value(std::uint32_t attr, std::string_view value) const {
    const auto& m = value_index_.at(attr);
    auto it = m.find(std::string(value));
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  bool valid(ItemCode c) const noexcept {
    return c.attr < attributes_.size() && c.value < attributes_[c.attr].values.size();
  }

  /// Renders an item as `attrname=value`.
  std::string render(ItemCode c) const {
    const auto& a = attributes_.at(c.attr);
    return a.name + "=" + a.values.at(c.value);
  }

  /// Appends a new attribute; names must be unique.
  std::uint32_t add_attribute(std::string name) {
    if (name.empty()) throw SchemaError("empty attribute name");
    if (attr_index_.contains(name)) throw SchemaError("duplicate attribute '" + name + "'");
    auto idx = static_cast<std::uint32_t>(attributes_.size());
    attr_index_.emplace(name, idx);
    attributes_.push_back(Attribute{std::move(name), {}});
    value_index_.emplace_back();
    return idx;
  }

  /// Appends a new value label to `attr`; labels must be unique per attribute.
  std::uint32_t add_value(std::uint32_t attr, std::string value) {
    auto& m = value_index_.at(attr);
    if (value.empty()) {
      throw SchemaError("empty value for attribute '" + attributes_[attr].name + "'");
    }
    if (m.contains(value)) {
      throw SchemaError("duplicate value '" + value + "' for attribute '" +
                        attributes_[attr].name + "'");
    }
    auto idx = static_cast<std::uint32_t>(attributes_[attr].values.size());
    m.emplace(value, idx);
    attributes_[attr].values.push_back(std::move(value));
    return idx;
  }

  /// Looks up a value, appending it when unseen (first-seen ordering).
  std::uint32_t intern_value(std::uint32_t attr, std::string_view value) {
    if (auto v = find_value(attr, value)) return *v;
    return add_value(attr, std::string(value));
  }

  friend bool operator==(const AttributeSchema& a, const AttributeSchema& b) {
    if (a.k() != b.k()) return false;
    for (std::size_t i = 0; i < a.k(); ++i) {
      if (a.attributes_[i].name != b.attributes_[i].name ||
          a.attributes_[i].values != b.attributes_[i].values) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Attribute> attributes_;
  std::unordered_map<std::string, std::uint32_t> attr_index_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> value_index_;
};

/// One event: a timestamp plus exactly one item per attribute, sorted by attribute.
struct Transaction {
  Timestamp timestamp = 0;
  std::vector<ItemCode> items;
};

/// Half-open interval [start, end) of epoch seconds.
class TimeWindow {
 public:
  TimeWindow(Timestamp start, Timestamp end) : start_(start), end_(end) {
    if (start >= end) {
      throw ConfigError("time window needs start < end (got " + std::to_string(start) +
                        ", " + std::to_string(end) + ")");
    }
  }

  Timestamp start() const noexcept { return start_; }
  Timestamp end() const noexcept { return end_; }
  Timestamp duration() const noexcept { return end_ - start_; }
  bool contains(Timestamp t) const noexcept { return t >= start_ && t < end_; }
  bool hour_aligned() const noexcept {
    return start_ % kSecondsPerHour == 0 && end_ % kSecondsPerHour == 0;
  }
  std::size_t hours() const noexcept {
    return static_cast<std::size_t>(hour_index(end_ - 1) - hour_index(start_) + 1);
  }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;

 private:
  Timestamp start_;
  Timestamp end_;
};

/// Contiguous block of rows [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

/// Immutable, timestamp-sorted collection of transactions stored row-major.
class TransactionLog {
 public:
  TransactionLog() = default;

  explicit TransactionLog(AttributeSchema schema) : schema_(std::move(schema)) {}

  /// Takes `values` row-major (rows × k). Rows are stably sorted by timestamp.
  TransactionLog(AttributeSchema schema, std::vector<Timestamp> timestamps,
                 std::vector<std::uint32_t> values)
      : schema_(std::move(schema)) {
    const std::size_t k = schema_.k();
    if (k == 0) throw SchemaError("log needs a non-empty schema");
    if (values.size() != timestamps.size() * k) {
      throw SchemaError("value buffer does not match rows × attributes");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] >= schema_.value_count(i % k)) {
        throw SchemaError("value index out of range for attribute '" +
                          schema_.attribute(i % k).name + "' in row " + std::to_string(i / k));
      }
    }
    if (std::is_sorted(timestamps.begin(), timestamps.end())) {
      timestamps_ = std::move(timestamps);
      values_ = std::move(values);
      return;
    }
    std::vector<std::size_t> order(timestamps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return timestamps[a] < timestamps[b]; });
    timestamps_.reserve(order.size());
    values_.reserve(values.size());
    for (std::size_t r : order) {
      timestamps_.push_back(timestamps[r]);
      values_.insert(values_.end(), values.begin() + static_cast<std::ptrdiff_t>(r * k),
                     values.begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
    }
  }

  const AttributeSchema& schema() const noexcept { return schema_; }
  std::size_t k() const noexcept { return schema_.k(); }
  std::size_t size() const noexcept { return timestamps_.size(); }
  bool empty() const noexcept { return timestamps_.empty(); }

  Timestamp timestamp(std::size_t row) const { return timestamps_[row]; }
  const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }

  std::span<const std::uint32_t> row(std::size_t r) const {
    return {values_.data() + r * k(), k()};
  }
  std::uint32_t value(std::size_t r, std::size_t attr) const { return values_[r * k() + attr]; }

  Transaction transaction(std::size_t r) const {
    Transaction t{timestamps_[r], {}};
    t.items.reserve(k());
    for (std::uint32_t a = 0; a < k(); ++a) t.items.push_back({a, value(r, a)});
    return t;
  }

  /// Rows whose timestamps fall inside `w`.
  RowRange rows_in(const TimeWindow& w) const {
    auto lo = std::lower_bound(timestamps_.begin(), timestamps_.end(), w.start());
    auto hi = std::lower_bound(lo, timestamps_.end(), w.end());
    return {static_cast<std::size_t>(lo - timestamps_.begin()),
            static_cast<std::size_t>(hi - timestamps_.begin())};
  }

 private:
  AttributeSchema schema_;
  std::vector<Timestamp> timestamps_;
  std::vector<std::uint32_t> values_;
};

/// Non-owning view over a contiguous row range of a log; the miners' input.
class LogView {
 public:
  LogView(const TransactionLog& log)  // NOLINT(google-explicit-constructor)
      : log_(&log), rows_{0, log.size()} {}
  LogView(const TransactionLog& log, RowRange rows) : log_(&log), rows_(rows) {}
  LogView(const TransactionLog& log, const TimeWindow& w) : log_(&log), rows_(log.rows_in(w)) {}

  const AttributeSchema& schema() const noexcept { return log_->schema(); }
  std::size_t k() const noexcept { return log_->k(); }
  std::size_t size() const noexcept { return rows_.size(); }
  std::uint32_t value(std::size_t r, std::size_t attr) const {
    return log_->value(rows_.begin + r, attr);
  }
  std::span<const std::uint32_t> row(std::size_t r) const { return log_->row(rows_.begin + r); }
  Timestamp timestamp(std::size_t r) const { return log_->timestamp(rows_.begin + r); }
  const TransactionLog& log() const noexcept { return *log_; }
  RowRange rows() const noexcept { return rows_; }

 private:
  const TransactionLog* log_;
  RowRange rows_;
};

/// Per-attribute constraint: a fixed value index, or a wildcard (nullopt).
class TargetDefinition {
 public:
  TargetDefinition() = default;
  explicit TargetDefinition(std::vector<std::optional<std::uint32_t>> constraints)
      : constraints_(std::move(constraints)) {}

  static TargetDefinition all_wildcard(std::size_t k) {
    return TargetDefinition(std::vector<std::optional<std::uint32_t>>(k));
  }

  /// Target fixing exactly the given items. At most one item per attribute.
  static TargetDefinition from_items(std::size_t k, std::span<const ItemCode> items) {
    auto t = all_wildcard(k);
    for (const auto& c : items) {
      if (c.attr >= k) throw SchemaError("item attribute out of range");
      if (t.constraints_[c.attr]) {
        throw ContractViolation("target fixes attribute " + std::to_string(c.attr) + " twice");
      }
      t.constraints_[c.attr] = c.value;
    }
    return t;
  }

  static TargetDefinition from_transaction(const Transaction& d) {
    return from_items(d.items.size(), d.items);
  }

  /// Parses `attr=value,attr=value`; omitted attributes are wildcards. An
  /// empty string or `*` is the all-wildcard target.
  static TargetDefinition parse(std::string_view text, const AttributeSchema& schema) {
    auto t = all_wildcard(schema.k());
    if (text.empty() || text == "*") return t;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t comma = text.find(',', pos);
      if (comma == std::string_view::npos) comma = text.size();
      std::string_view part = text.substr(pos, comma - pos);
      std::size_t eq = part.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError("target term '" + std::string(part) + "' is not attr=value");
      }
      auto name = part.substr(0, eq);
      auto value = part.substr(eq + 1);
      auto a = schema.find_attribute(name);
      if (!a) throw SchemaError("unknown attribute '" + std::string(name) + "' in target");
      auto v = schema.find_value(*a, value);
      if (!v) {
        throw SchemaError("unknown value '" + std::string(value) + "' for attribute '" +
                          std::string(name) + "' in target");
      }
      if (t.constraints_[*a]) {
        throw ParseError("attribute '" + std::string(name) + "' constrained twice in target");
      }
      t.constraints_[*a] = *v;
      pos = comma + 1;
    }
    return t;
  }

  std::size_t k() const noexcept { return constraints_.size(); }
  const std::optional<std::uint32_t>& operator[](std::size_t attr) const {
    return constraints_.at(attr);
  }
  const std::vector<std::optional<std::uint32_t>>& constraints() const noexcept {
    return constraints_;
  }

  /// The non-wildcard positions as items, in attribute order.
  std::vector<ItemCode> items() const {
    std::vector<ItemCode> out;
    for (std::uint32_t a = 0; a < constraints_.size(); ++a) {
      if (constraints_[a]) out.push_back({a, *constraints_[a]});
    }
    return out;
  }

  std::size_t specified_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(constraints_.begin(), constraints_.end(), [](const auto& c) { return c.has_value(); }));
  }

  bool is_all_wildcard() const noexcept { return specified_count() == 0; }

  /// Copy with `attr` relaxed to a wildcard.
  TargetDefinition relaxed(std::size_t attr) const {
    auto t = *this;
    t.constraints_.at(attr).reset();
    return t;
  }

  /// `attr=value,...` rendering, `*` for the all-wildcard target.
  std::string render(const AttributeSchema& schema) const {
    std::string out;
    for (const auto& c : items()) {
      if (!out.empty()) out += ',';
      out += schema.render(c);
    }
    return out.empty() ? "*" : out;
  }

  friend bool operator==(const TargetDefinition&, const TargetDefinition&) = default;

 private:
  std::vector<std::optional<std::uint32_t>> constraints_;
};

/// Row-level match: every non-wildcard attribute equals the row's value.
inline bool satisfies(std::span<const std::uint32_t> row, const TargetDefinition& target) {
  const auto& c = target.constraints();
  for (std::size_t l = 0; l < c.size(); ++l) {
    if (c[l] && row[l] != *c[l]) return false;
  }
  return true;
}

inline bool satisfies(const Transaction& d, const TargetDefinition& target) {
  const auto& c = target.constraints();
  if (c.size() != d.items.size()) throw ContractViolation("transaction / target arity mismatch");
  for (std::size_t l = 0; l < c.size(); ++l) {
    if (c[l] && d.items[l].value != *c[l]) return false;
  }
  return true;
}

/// Exact number of transactions in `w` that satisfy `target`.
inline std::size_t count_in_window(const TransactionLog& log, const TargetDefinition& target,
                                   const TimeWindow& w) {
  if (target.k() != log.k()) throw ContractViolation("target arity does not match log");
  const RowRange r = log.rows_in(w);
  std::size_t n = 0;
  for (std::size_t i = r.begin; i < r.end; ++i) n += satisfies(log.row(i), target) ? 1 : 0;
  return n;
}

/// Contiguous hourly values starting at epoch hour `start_hour`.
struct HourlySeries {
  std::int64_t start_hour = 0;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double total() const noexcept { return std::accumulate(values.begin(), values.end(), 0.0); }
};

/// One bucket per hour of `w`; missing hours are explicit zeros.
inline HourlySeries hourly_series(const TransactionLog& log, const TargetDefinition& target,
                                  const TimeWindow& w) {
  if (!w.hour_aligned()) {
    throw AlignmentError("window [" + std::to_string(w.start()) + ", " + std::to_string(w.end()) +
                         ") is not aligned to hour boundaries");
  }
  if (target.k() != log.k()) throw ContractViolation("target arity does not match log");
  HourlySeries s{hour_index(w.start()), std::vector<double>(w.hours(), 0.0)};
  const RowRange r = log.rows_in(w);
  for (std::size_t i = r.begin; i < r.end; ++i) {
    if (satisfies(log.row(i), target)) {
      s.values[static_cast<std::size_t>(hour_index(log.timestamp(i)) - s.start_hour)] += 1.0;
    }
  }
  return s;
}

}  // namespace audfc
