#pragma once

#include "audfc/apriori.hpp"
#include "audfc/brute_force.hpp"
#include "audfc/eclat.hpp"
#include "audfc/fpgrowth.hpp"
#include "audfc/mining.hpp"

namespace audfc {

/// Runs the miner selected by `cfg.algorithm`, streaming into `sink`.
template <RecordSink Sink>
MiningStats mine(LogView db, const MiningConfig& cfg, Sink&& sink) {
  switch (cfg.algorithm) {
    case Algorithm::apriori: return mine_apriori(db, cfg, std::forward<Sink>(sink));
    case Algorithm::apriori_cc: return mine_apriori_cc(db, cfg, std::forward<Sink>(sink));
    case Algorithm::eclat: return mine_eclat(db, cfg, std::forward<Sink>(sink));
    case Algorithm::eclat_cc: return mine_eclat_cc(db, cfg, std::forward<Sink>(sink));
    case Algorithm::fpgrowth: return mine_fpgrowth(db, cfg, std::forward<Sink>(sink));
  }
  throw ConfigError("unknown algorithm");
}

/// Runs the selected miner; records come back in ItemCode-lexicographic order.
inline MiningResult mine(LogView db, const MiningConfig& cfg) {
  MiningResult r;
  r.stats = mine(db, cfg, CollectSink{&r.records});
  sort_records(r.records);
  return r;
}

}  // namespace audfc
