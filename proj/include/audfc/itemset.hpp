#pragma once

// Itemsets, frequent-itemset records and the FIS store file.
//
// FIS file: one record per line, `item1;item2;...<TAB>support`, items rendered
// as `attrname=value`, lines sorted bytewise.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "audfc/dataset.hpp"
#include "audfc/error.hpp"

namespace audfc {

/// Sorted, duplicate-free set of items. May violate the categorical
/// constraint; that is a predicate, not a structural rule.
class Itemset {
 public:
  Itemset() = default;
  Itemset(std::initializer_list<ItemCode> items) : Itemset(std::vector<ItemCode>(items)) {}
  explicit Itemset(std::vector<ItemCode> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
  }
  explicit Itemset(std::span<const ItemCode> items)
      : Itemset(std::vector<ItemCode>(items.begin(), items.end())) {}

  std::span<const ItemCode> items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const ItemCode& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }

  bool contains(ItemCode c) const { return std::binary_search(items_.begin(), items_.end(), c); }

  /// True when every item of `this` is in `other`.
  bool subset_of(const Itemset& other) const {
    return std::includes(other.items_.begin(), other.items_.end(), items_.begin(), items_.end());
  }

  Itemset with(ItemCode c) const {
    auto v = items_;
    v.push_back(c);
    return Itemset(std::move(v));
  }

  Itemset without(std::size_t index) const {
    auto v = items_;
    v.erase(v.begin() + static_cast<std::ptrdiff_t>(index));
    return Itemset(std::move(v));
  }

  /// `a=x;b=y` rendering used by the FIS file.
  std::string render(const AttributeSchema& schema) const {
    std::string out;
    for (const auto& c : items_) {
      if (!out.empty()) out += ';';
      out += schema.render(c);
    }
    return out;
  }

  friend auto operator<=>(const Itemset&, const Itemset&) = default;
  friend bool operator==(const Itemset&, const Itemset&) = default;

 private:
  std::vector<ItemCode> items_;
};

/// Sorted transaction indices of an itemset's cover.
using TidList = std::vector<std::uint32_t>;

struct FISRecord {
  Itemset itemset;
  std::uint64_t support = 0;

  friend bool operator==(const FISRecord&, const FISRecord&) = default;
};

/// No two items share an attribute. The empty set satisfies it.
inline bool categorical_constraint(std::span<const ItemCode> items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      if (items[i].attr == items[j].attr) return false;
    }
  }
  return true;
}

inline bool categorical_constraint(const Itemset& itemset, const AttributeSchema& schema) {
  for (const auto& c : itemset) {
    if (!schema.valid(c)) throw SchemaError("item not valid under schema");
  }
  // Sorted by attribute, so a violation shows up between neighbours.
  auto items = itemset.items();
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].attr == items[i - 1].attr) return false;
  }
  return true;
}

/// Records in ItemCode-lexicographic order.
inline void sort_records(std::vector<FISRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const FISRecord& a, const FISRecord& b) { return a.itemset < b.itemset; });
}

inline void check_renderable(const AttributeSchema& schema) {
  for (const auto& a : schema.attributes()) {
    if (a.name.find_first_of("=;\t\n") != std::string::npos) {
      throw SchemaError("attribute name '" + a.name + "' cannot be written to a FIS file");
    }
    for (const auto& v : a.values) {
      if (v.find_first_of(";\t\n") != std::string::npos) {
        throw SchemaError("value '" + v + "' cannot be written to a FIS file");
      }
    }
  }
}

inline void write_fis(std::ostream& out, std::span<const FISRecord> records,
                      const AttributeSchema& schema) {
  check_renderable(schema);
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    lines.push_back(r.itemset.render(schema) + '\t' + std::to_string(r.support));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l << '\n';
}

inline ItemCode parse_item(std::string_view text, const AttributeSchema& schema) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ParseError("item '" + std::string(text) + "' is not attr=value");
  auto a = schema.find_attribute(text.substr(0, eq));
  if (!a) throw SchemaError("unknown attribute in item '" + std::string(text) + "'");
  auto v = schema.find_value(*a, text.substr(eq + 1));
  if (!v) throw SchemaError("unknown value in item '" + std::string(text) + "'");
  return {*a, *v};
}

inline std::vector<FISRecord> read_fis(std::istream& in, const AttributeSchema& schema) {
  std::vector<FISRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("FIS line without a tab", line_no);
    std::vector<ItemCode> items;
    std::string_view body(line.data(), tab);
    std::size_t pos = 0;
    while (pos <= body.size()) {
      auto semi = body.find(';', pos);
      if (semi == std::string_view::npos) semi = body.size();
      items.push_back(parse_item(body.substr(pos, semi - pos), schema));
      pos = semi + 1;
    }
    FISRecord rec{Itemset(std::move(items)), 0};
    try {
      rec.support = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError("bad support value", line_no);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace audfc
