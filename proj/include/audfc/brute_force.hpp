#pragma once

// Exhaustive reference miner. Every CC-satisfying itemset is a choice of
// "absent or one value" per attribute, encoded in mixed radix with digit
// (value + 1). Each transaction adds one to the codes of all its 2^k
// sub-itemsets.

#include <cstdint>
#include <vector>

#include "audfc/mining.hpp"

namespace audfc {

inline constexpr std::uint64_t kBruteForceLimit = 1'000'000;

inline std::vector<FISRecord> brute_force_mine(LogView db, std::uint64_t kappa) {
  if (kappa == 0) throw ConfigError("brute force needs kappa >= 1");
  const auto& schema = db.schema();
  const std::size_t k = schema.k();
  std::vector<std::uint64_t> stride(k);
  std::uint64_t space = 1;
  for (std::size_t a = 0; a < k; ++a) {
    stride[a] = space;
    space *= schema.value_count(a) + 1;
    if (space > kBruteForceLimit) {
      throw GuardError("brute-force search space exceeds " + std::to_string(kBruteForceLimit));
    }
  }

  std::vector<std::uint64_t> support(space, 0);
  for (std::size_t r = 0; r < db.size(); ++r) {
    auto row = db.row(r);
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
      std::uint64_t code = 0;
      for (std::size_t a = 0; a < k; ++a) {
        if (mask >> a & 1) code += (row[a] + 1) * stride[a];
      }
      ++support[code];
    }
  }

  std::vector<FISRecord> out;
  std::vector<ItemCode> items;
  for (std::uint64_t code = 1; code < space; ++code) {
    if (support[code] < kappa) continue;
    items.clear();
    for (std::uint32_t a = 0; a < k; ++a) {
      const std::uint64_t digit = code / stride[a] % (schema.value_count(a) + 1);
      if (digit > 0) items.push_back({a, static_cast<std::uint32_t>(digit - 1)});
    }
    out.push_back(FISRecord{Itemset(items), support[code]});
  }
  sort_records(out);
  return out;
}

}  // namespace audfc
