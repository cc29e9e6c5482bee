#pragma once

// Hand-built cost models and true-cost tables with exactly known optima,
// shared by the partition, sim, and cli suites plus the acceptance runner.

#include <map>
#include <string>

#include "coinf/costmodel.hpp"
#include "coinf/partition.hpp"
#include "coinf/sim.hpp"

namespace fixtures {

inline const coinf::LinkModel kBottleneckLink{250000.0, 0.0, 100.0, 100.0};

// Models for bottleneck_graph() as exact linear functions of the fc
// regressors (L1 -> [5000, 100, 5000], L2 -> [25000, 50, 25000]):
//   wearable:  latency 0.02*r1 (100/500 ms),   energy 0.01*r1 (50/250 mJ)
//   handheld:  latency 0.004*r1 (20/100 ms),   energy r1/1500 + 400*r2/1500
//              (30/30 mJ)
inline coinf::ModelRegistry bottleneck_registry(double wear_slowdown = 1.0) {
  coinf::LayerCostModel wear;
  wear.context = coinf::parse_context("wearable/cpu-interactive/0");
  wear.latency_leaves["fc"] = {{0.02 * wear_slowdown, 0.0, 0.0}, 0.0};
  wear.energy_leaves["fc"] = {{0.01 * wear_slowdown, 0.0, 0.0}, 0.0};
  coinf::LayerCostModel hand;
  hand.context = coinf::parse_context("handheld/cpu-interactive/0");
  hand.latency_leaves["fc"] = {{0.004, 0.0, 0.0}, 0.0};
  hand.energy_leaves["fc"] = {{1.0 / 1500.0, 400.0 / 1500.0, 0.0}, 0.0};
  coinf::ModelRegistry reg;
  reg[wear.context.str()] = std::move(wear);
  reg[hand.context.str()] = std::move(hand);
  return reg;
}

// bottleneck_registry plus handheld variants for load buckets 50 and 80,
// slowed down 3x and 10x. Under a pure latency goal the best cut moves from
// the waist back onto the wearable as the handheld gets busier.
inline coinf::ModelRegistry load_sweep_registry() {
  coinf::ModelRegistry reg = bottleneck_registry();
  const double factors[] = {3.0, 10.0};
  const int buckets[] = {50, 80};
  for (int i = 0; i < 2; ++i) {
    coinf::LayerCostModel hand;
    hand.context = coinf::parse_context("handheld/cpu-interactive/" + std::to_string(buckets[i]));
    hand.latency_leaves["fc"] = {{0.004 * factors[i], 0.0, 0.0}, 0.0};
    hand.energy_leaves["fc"] = {{factors[i] / 1500.0, 400.0 * factors[i] / 1500.0, 0.0}, 0.0};
    reg[hand.context.str()] = std::move(hand);
  }
  return reg;
}

// Random ground truth over all members of a simplified graph: the wearable
// is slower and hungrier than the handheld on average, so non-trivial cuts
// stay interesting.
inline coinf::TrueCostTable random_true_table(coinf::Rng& rng, const coinf::SimplifiedGraph& sg,
                                              const std::string& wear_context,
                                              const std::string& handheld_context) {
  coinf::TrueCostTable table;
  for (const coinf::SuperNode& sn : sg.nodes()) {
    for (const coinf::LayerNode& m : sn.members) {
      if (m.op_type == coinf::OpType::other) continue;
      table.entries[{m.id, wear_context}] = {rng.uniform(5.0, 60.0), rng.uniform(3.0, 40.0)};
      table.entries[{m.id, handheld_context}] = {rng.uniform(1.0, 15.0), rng.uniform(1.0, 10.0)};
    }
  }
  return table;
}

}  // namespace fixtures
