#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coinf/costmodel.hpp"
#include "coinf/simplify.hpp"

namespace coinf {

// bandwidth_bps is bytes per second; rtt is charged once per crossing.
struct LinkModel {
  double bandwidth_bps = 0.0;
  double rtt_ms = 62.0;
  double pt_mw = 0.0;  // wearable transmit power
  double pr_mw = 0.0;  // handheld receive power
};

inline void validate_link(const LinkModel& l) {
  if (!(l.bandwidth_bps > 0) || !std::isfinite(l.bandwidth_bps))
    throw ValidationError("bandwidth_bps must be positive and finite");
  if (!(l.rtt_ms >= 0) || !std::isfinite(l.rtt_ms))
    throw ValidationError("rtt_ms must be non-negative and finite");
  if (!(l.pt_mw >= 0) || !(l.pr_mw >= 0))
    throw ValidationError("link power draws must be non-negative");
}

// The latency goal knob: 0 selects for pure latency, a finite budget trades
// energy within the budget, infinity selects for pure weighted energy.
struct PropT {
  enum class Kind { latency, tradeoff, energy };
  Kind kind = Kind::latency;
  double ms = 0.0;

  static PropT zero() { return {Kind::latency, 0.0}; }
  static PropT finite(double ms) {
    if (!(ms > 0) || !std::isfinite(ms))
      throw ValidationError("finite prop_t must be a positive number of ms");
    return {Kind::tradeoff, ms};
  }
  static PropT infinite() { return {Kind::energy, std::numeric_limits<double>::infinity()}; }

  static PropT parse(const std::string& s) {
    if (s == "inf" || s == "INF" || s == "Inf") return infinite();
    double v = 0;
    if (!parse_double(s, v) || !(v >= 0))
      throw ParseError("prop_t must be 0, a positive ms value, or 'inf'");
    return v == 0.0 ? zero() : finite(v);
  }

  std::string str() const {
    switch (kind) {
      case Kind::latency: return "0";
      case Kind::energy: return "inf";
      case Kind::tradeoff: return format_double(ms);
    }
    return "0";
  }
  bool operator==(const PropT&) const = default;
};

struct PolicyConfig {
  PropT prop_t = PropT::zero();
  double w_w = 0.5;
  double w_p = 0.5;
  bool streaming = false;
};

inline void validate_policy(const PolicyConfig& p) {
  if (!(p.w_w >= 0.0 && p.w_w <= 1.0) || !(p.w_p >= 0.0 && p.w_p <= 1.0))
    throw ValidationError("energy weights must lie in [0, 1]");
}

struct CutPartition {
  std::vector<std::string> wear_set;      // sorted supernode ids
  std::vector<std::string> handheld_set;  // sorted supernode ids
  std::vector<Edge> crossing_edges;
  uint64_t dt_bytes = 0;
  std::string cut_label;      // topologically last wear-side supernode
  bool wearable_only = false;
  bool handheld_only = false;
  bool operator==(const CutPartition&) const = default;
};

// Data actually crossing the link for a cut. Keeping everything on the
// wearable moves nothing; shipping everything to the handheld also pays the
// result's trip back. A two-node graph counts as handheld-only.
inline uint64_t effective_transfer_bytes(const SimplifiedGraph& sg, const CutPartition& cut) {
  if (cut.handheld_only) return cut.dt_bytes + sg.result_return_bytes();
  if (cut.wearable_only) return 0;
  return cut.dt_bytes;
}

inline double transfer_time_ms(uint64_t bytes, const LinkModel& link) {
  if (bytes == 0) return 0.0;
  return static_cast<double>(bytes) / link.bandwidth_bps * 1000.0 + link.rtt_ms;
}

// All order-ideal cuts of the simplified graph: wearable side closed under
// predecessors, source pinned to the wearable, sink pinned to the handheld.
// Throws CutExplosion as soon as more than `limit` cuts exist.
inline std::vector<CutPartition> enumerate_cuts(const SimplifiedGraph& sg,
                                                uint64_t limit = 100000) {
  const auto& nodes = sg.nodes();
  size_t n = nodes.size();
  size_t source_pos = sg.index_of(sg.source_id());
  size_t sink_pos = sg.index_of(sg.sink_id());

  std::vector<std::vector<size_t>> preds(n);
  for (const Edge& e : sg.edges()) preds[sg.index_of(e.dst)].push_back(sg.index_of(e.src));

  std::vector<std::vector<char>> ideals;
  std::vector<char> include(n, 0);
  auto recurse = [&](auto&& self, size_t pos) -> void {
    if (pos == n) {
      ideals.push_back(include);
      if (ideals.size() > limit) throw CutExplosionError(limit);
      return;
    }
    if (pos == source_pos) {
      include[pos] = 1;
      self(self, pos + 1);
      include[pos] = 0;
      return;
    }
    bool can_include = pos != sink_pos &&
                       std::all_of(preds[pos].begin(), preds[pos].end(),
                                   [&](size_t p) { return include[p]; });
    if (can_include) {
      include[pos] = 1;
      self(self, pos + 1);
      include[pos] = 0;
    }
    self(self, pos + 1);
  };
  recurse(recurse, 0);

  std::vector<CutPartition> cuts;
  cuts.reserve(ideals.size());
  for (const auto& ideal : ideals) {
    CutPartition c;
    size_t last_wear = source_pos;
    for (size_t i = 0; i < n; ++i) {
      if (ideal[i]) {
        c.wear_set.push_back(nodes[i].id);
        last_wear = i;
      } else {
        c.handheld_set.push_back(nodes[i].id);
      }
    }
    for (const Edge& e : sg.edges()) {
      if (ideal[sg.index_of(e.src)] && !ideal[sg.index_of(e.dst)]) {
        c.crossing_edges.push_back(e);
        c.dt_bytes += e.bytes;
      }
    }
    std::sort(c.wear_set.begin(), c.wear_set.end());
    std::sort(c.handheld_set.begin(), c.handheld_set.end());
    c.cut_label = nodes[last_wear].id;  // nodes are stored in topo order
    c.handheld_only = c.wear_set.size() == 1;
    c.wearable_only = c.handheld_set.size() == 1;
    cuts.push_back(std::move(c));
  }
  std::sort(cuts.begin(), cuts.end(), [](const CutPartition& a, const CutPartition& b) {
    if (a.wear_set.size() != b.wear_set.size()) return a.wear_set.size() < b.wear_set.size();
    return a.wear_set < b.wear_set;
  });
  return cuts;
}

// Per-side cost callback: gets the member layers of one side in a fixed
// deterministic order, returns their total latency and energy.
using SideCostFn = std::function<Cost(const std::vector<const LayerNode*>&)>;

// Members of the given supernode ids in (supernode topo order, stored member
// order). Both the planner and the simulator walk members through this
// helper so their floating point sums agree bitwise.
inline std::vector<const LayerNode*> members_for(const SimplifiedGraph& sg,
                                                 const std::vector<std::string>& ids) {
  std::vector<const LayerNode*> out;
  for (const SuperNode& sn : sg.nodes()) {
    if (!std::binary_search(ids.begin(), ids.end(), sn.id)) continue;
    for (const LayerNode& m : sn.members) out.push_back(&m);
  }
  return out;
}

inline SideCostFn model_cost_fn(const LayerCostModel& model) {
  return [&model](const std::vector<const LayerNode*>& members) {
    Cost total;
    for (const LayerNode* n : members) {
      if (n->op_type == OpType::other) continue;
      total += predict_node(model, *n);
    }
    return total;
  };
}

struct EvaluatedCut {
  CutPartition cut;
  double latency_ms = 0.0;
  double energy_w_mj = 0.0;
  double energy_p_mj = 0.0;
  double weighted_energy_mj = 0.0;
  // breakdown
  double wear_compute_ms = 0.0;
  double handheld_compute_ms = 0.0;
  double transfer_ms = 0.0;
};

inline EvaluatedCut evaluate_cut(const SimplifiedGraph& sg, const CutPartition& cut,
                                 const SideCostFn& wear_cost, const SideCostFn& handheld_cost,
                                 const LinkModel& link, const PolicyConfig& policy) {
  validate_link(link);
  validate_policy(policy);
  Cost wear = wear_cost(members_for(sg, cut.wear_set));
  Cost hand = handheld_cost(members_for(sg, cut.handheld_set));
  EvaluatedCut ec;
  ec.cut = cut;
  ec.wear_compute_ms = wear.latency_ms;
  ec.handheld_compute_ms = hand.latency_ms;
  ec.transfer_ms = transfer_time_ms(effective_transfer_bytes(sg, cut), link);
  ec.latency_ms = policy.streaming
                      ? std::max(wear.latency_ms, hand.latency_ms + ec.transfer_ms)
                      : wear.latency_ms + hand.latency_ms + ec.transfer_ms;
  double transfer_s = ec.transfer_ms / 1000.0;
  ec.energy_w_mj = wear.energy_mj + link.pt_mw * transfer_s;
  ec.energy_p_mj = hand.energy_mj + link.pr_mw * transfer_s;
  ec.weighted_energy_mj = policy.w_w * ec.energy_w_mj + policy.w_p * ec.energy_p_mj;
  return ec;
}

struct PlanDecision {
  EvaluatedCut chosen;
  size_t chosen_index = 0;
  std::string applied_branch;  // latency | latency-fallback | tradeoff | energy
  std::vector<EvaluatedCut> candidates;
  // metadata filled by plan()
  std::string wear_context;
  std::string handheld_context;
  std::string origin_hash;
};

// Algorithm: prop_t == 0 selects min latency; an unreachable finite budget
// falls back to min latency; infinity selects min weighted energy; otherwise
// min weighted energy among the cuts meeting the budget. Ties break toward
// lower latency, then the smaller wearable side, then lexicographic order.
inline PlanDecision select_optimal(const std::vector<EvaluatedCut>& candidates,
                                   const PolicyConfig& policy) {
  validate_policy(policy);
  if (candidates.empty()) throw Error("no_candidates", "no cuts to select from");

  double min_latency = candidates.front().latency_ms;
  for (const auto& c : candidates) min_latency = std::min(min_latency, c.latency_ms);

  bool latency_branch = policy.prop_t.kind == PropT::Kind::latency;
  bool fallback = policy.prop_t.kind == PropT::Kind::tradeoff && min_latency > policy.prop_t.ms;
  bool by_latency = latency_branch || fallback;

  auto feasible = [&](const EvaluatedCut& c) {
    if (by_latency || policy.prop_t.kind == PropT::Kind::energy) return true;
    return c.latency_ms <= policy.prop_t.ms;
  };
  auto primary = [&](const EvaluatedCut& c) {
    return by_latency ? c.latency_ms : c.weighted_energy_mj;
  };
  auto better = [&](const EvaluatedCut& a, const EvaluatedCut& b) {
    if (primary(a) != primary(b)) return primary(a) < primary(b);
    if (a.latency_ms != b.latency_ms) return a.latency_ms < b.latency_ms;
    if (a.cut.wear_set.size() != b.cut.wear_set.size())
      return a.cut.wear_set.size() < b.cut.wear_set.size();
    return a.cut.wear_set < b.cut.wear_set;
  };

  size_t best = candidates.size();
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (!feasible(candidates[i])) continue;
    if (best == candidates.size() || better(candidates[i], candidates[best])) best = i;
  }
  if (best == candidates.size())
    throw Error("no_candidates", "no cut satisfies the latency budget");

  PlanDecision d;
  d.chosen = candidates[best];
  d.chosen_index = best;
  d.candidates = candidates;
  if (latency_branch) d.applied_branch = "latency";
  else if (fallback) d.applied_branch = "latency-fallback";
  else if (policy.prop_t.kind == PropT::Kind::energy) d.applied_branch = "energy";
  else d.applied_branch = "tradeoff";
  return d;
}

using ModelRegistry = std::map<std::string, LayerCostModel>;  // canonical context -> model

inline const LayerCostModel& registry_model(const ModelRegistry& registry,
                                            const std::string& context) {
  auto it = registry.find(context);
  if (it == registry.end())
    throw UnknownKeyError("no cost model for context '" + context + "'");
  return it->second;
}

// Full pipeline: simplify, enumerate, evaluate, select.
inline PlanDecision plan(const ModelGraph& g, const ModelRegistry& registry,
                         const std::string& wear_context, const std::string& handheld_context,
                         const LinkModel& link, const PolicyConfig& policy,
                         const SimplifyConfig& simplify_cfg = {}, uint64_t cut_limit = 100000,
                         SimplifyCache* cache = &default_simplify_cache()) {
  validate_link(link);
  validate_policy(policy);
  const LayerCostModel& wear_model = registry_model(registry, wear_context);
  const LayerCostModel& handheld_model = registry_model(registry, handheld_context);

  SimplifiedGraph sg = simplify(g, simplify_cfg, cache);
  std::vector<CutPartition> cuts = enumerate_cuts(sg, cut_limit);
  std::vector<EvaluatedCut> evaluated;
  evaluated.reserve(cuts.size());
  SideCostFn wear_fn = model_cost_fn(wear_model);
  SideCostFn hand_fn = model_cost_fn(handheld_model);
  for (const CutPartition& c : cuts)
    evaluated.push_back(evaluate_cut(sg, c, wear_fn, hand_fn, link, policy));

  PlanDecision d = select_optimal(evaluated, policy);
  d.wear_context = wear_context;
  d.handheld_context = handheld_context;
  d.origin_hash = sg.origin_hash();
  return d;
}

// Scales a handheld-side energy reading onto the wearable's battery scale.
inline double normalize_energy(double e_p_mj, double capacity_p_mah, double capacity_w_mah) {
  if (!(capacity_p_mah > 0) || !(capacity_w_mah > 0) || !std::isfinite(capacity_p_mah) ||
      !std::isfinite(capacity_w_mah))
    throw ValidationError("battery capacities must be positive and finite");
  return e_p_mj * capacity_w_mah / capacity_p_mah;
}

// ---- serialization ----

inline json evaluated_cut_to_json(const EvaluatedCut& ec, bool full) {
  json j;
  j["cut_label"] = ec.cut.cut_label;
  j["wear_set"] = ec.cut.wear_set;
  j["latency_ms"] = ec.latency_ms;
  j["energy_w_mj"] = ec.energy_w_mj;
  j["energy_p_mj"] = ec.energy_p_mj;
  j["weighted_energy_mj"] = ec.weighted_energy_mj;
  if (full) {
    j["handheld_set"] = ec.cut.handheld_set;
    j["dt_bytes"] = ec.cut.dt_bytes;
    j["wearable_only"] = ec.cut.wearable_only;
    j["handheld_only"] = ec.cut.handheld_only;
    j["breakdown"] = {{"wear_compute_ms", ec.wear_compute_ms},
                      {"transfer_ms", ec.transfer_ms},
                      {"handheld_compute_ms", ec.handheld_compute_ms}};
  }
  return j;
}

inline json plan_to_json(const PlanDecision& d, const LinkModel& link,
                         const PolicyConfig& policy) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "plan_decision";
  j["applied_branch"] = d.applied_branch;
  j["contexts"] = {{"wearable", d.wear_context}, {"handheld", d.handheld_context}};
  j["origin_hash"] = d.origin_hash;
  j["link"] = {{"bandwidth_bps", link.bandwidth_bps},
               {"rtt_ms", link.rtt_ms},
               {"pt_mw", link.pt_mw},
               {"pr_mw", link.pr_mw}};
  j["policy"] = {{"prop_t", policy.prop_t.str()},
                 {"w_w", policy.w_w},
                 {"w_p", policy.w_p},
                 {"streaming", policy.streaming}};
  j["chosen"] = evaluated_cut_to_json(d.chosen, true);
  j["chosen_index"] = d.chosen_index;
  json cands = json::array();
  for (const EvaluatedCut& c : d.candidates) cands.push_back(evaluated_cut_to_json(c, false));
  j["candidates"] = std::move(cands);
  return j;
}

}  // namespace coinf
