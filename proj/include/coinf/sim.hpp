#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coinf/csv.hpp"
#include "coinf/partition.hpp"

namespace coinf {

// Ground-truth per-layer costs for the simulator, keyed by node id and
// execution context. This is what the device "actually does", as opposed to
// what the cost models predict.
struct TrueCostTable {
  std::map<std::pair<std::string, std::string>, Cost> entries;

  const Cost& lookup(const std::string& node_id, const std::string& context) const {
    auto it = entries.find({node_id, context});
    if (it == entries.end())
      throw UnknownKeyError("no true cost for node '" + node_id + "' in context '" + context +
                            "'");
    return it->second;
  }
};

inline const std::vector<std::string>& table_csv_header() {
  static const std::vector<std::string> h = {"node_id", "context", "latency_ms", "energy_mj"};
  return h;
}

inline TrueCostTable table_from_csv(const std::string& text) {
  CsvTable t = parse_csv(text, table_csv_header());
  TrueCostTable out;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    size_t rowno = i + 2;
    parse_context(row[1]);  // reject malformed contexts early
    double lat = csv_double(row, 2, rowno);
    double ene = csv_double(row, 3, rowno);
    if (lat < 0 || ene < 0)
      throw ParseError("row " + std::to_string(rowno) + ": costs must be non-negative");
    auto key = std::make_pair(row[0], row[1]);
    if (out.entries.count(key))
      throw ParseError("row " + std::to_string(rowno) + ": duplicate entry for node '" +
                       row[0] + "' in context '" + row[1] + "'");
    out.entries[key] = {lat, ene};
  }
  return out;
}

inline std::string table_to_csv(const TrueCostTable& table) {
  CsvTable t;
  t.header = table_csv_header();
  for (const auto& [key, cost] : table.entries) {
    t.rows.push_back({key.first, key.second, format_double(cost.latency_ms),
                      format_double(cost.energy_mj)});
  }
  return emit_csv(t);
}

// Side cost callback backed by the true table; pass-through layers cost
// nothing, mirroring the model-backed planner. The table must outlive the
// returned callback.
inline SideCostFn table_cost_fn(const TrueCostTable& table, std::string context) {
  return [&table, context = std::move(context)](const std::vector<const LayerNode*>& members) {
    Cost total;
    for (const LayerNode* n : members) {
      if (n->op_type == OpType::other) continue;
      total += table.lookup(n->id, context);
    }
    return total;
  };
}

// Multiplicative lognormal disturbance on per-layer costs. sigma 0 disables
// noise and leaves the RNG untouched.
struct NoiseSpec {
  double sigma = 0.0;
  uint64_t seed = 0;
};

struct SimOptions {
  uint64_t seed = 0;
  NoiseSpec noise;
  double wear_idle_mw = 0.0;  // wearable idle draw while the handheld computes
};

struct SimResult {
  double latency_ms = 0.0;
  double energy_w_mj = 0.0;
  double energy_p_mj = 0.0;
  double wear_compute_ms = 0.0;
  double transfer_ms = 0.0;
  double handheld_compute_ms = 0.0;
};

namespace detail {

class CostDraw {
 public:
  CostDraw(const NoiseSpec& noise, uint64_t run_seed)
      : sigma_(noise.sigma), rng_(mix64(noise.seed, run_seed)) {}

  Cost operator()(const Cost& base) {
    if (sigma_ <= 0) return base;
    double lm = std::exp(sigma_ * rng_.normal());
    double em = std::exp(sigma_ * rng_.normal());
    return {base.latency_ms * lm, base.energy_mj * em};
  }

 private:
  double sigma_;
  Rng rng_;
};

inline Cost drawn_side_cost(const SimplifiedGraph& sg, const std::vector<std::string>& ids,
                            const TrueCostTable& table, const std::string& context,
                            CostDraw& draw) {
  Cost total;
  for (const LayerNode* n : members_for(sg, ids)) {
    if (n->op_type == OpType::other) continue;
    total += draw(table.lookup(n->id, context));
  }
  return total;
}

}  // namespace detail

// One sequential inference: wearable prefix, link crossing, handheld suffix.
// Noiseless runs reproduce the planner's evaluation of the same cut exactly.
inline SimResult run_once(const SimplifiedGraph& sg, const CutPartition& cut,
                          const TrueCostTable& table, const LinkModel& link,
                          const std::string& wear_context, const std::string& handheld_context,
                          const SimOptions& opts = {}) {
  validate_link(link);
  detail::CostDraw draw(opts.noise, opts.seed);
  Cost wear = detail::drawn_side_cost(sg, cut.wear_set, table, wear_context, draw);
  Cost hand = detail::drawn_side_cost(sg, cut.handheld_set, table, handheld_context, draw);

  SimResult r;
  r.wear_compute_ms = wear.latency_ms;
  r.handheld_compute_ms = hand.latency_ms;
  r.transfer_ms = transfer_time_ms(effective_transfer_bytes(sg, cut), link);
  r.latency_ms = wear.latency_ms + hand.latency_ms + r.transfer_ms;
  double transfer_s = r.transfer_ms / 1000.0;
  r.energy_w_mj = wear.energy_mj + link.pt_mw * transfer_s +
                  opts.wear_idle_mw * (hand.latency_ms / 1000.0);
  r.energy_p_mj = hand.energy_mj + link.pr_mw * transfer_s;
  return r;
}

struct StreamStats {
  size_t n_frames = 0;
  bool three_stage = false;
  double makespan_ms = 0.0;
  double throughput_fps = 0.0;
  double energy_w_mj = 0.0;
  double energy_p_mj = 0.0;
  // per-stage busy totals across all frames
  double wear_busy_ms = 0.0;
  double transfer_busy_ms = 0.0;
  double handheld_busy_ms = 0.0;
  std::vector<double> completions_ms;
};

// Pipelined inference over a frame stream. Two-stage mode runs (wearable)
// against (transfer + handheld); three-stage mode lets the link proceed
// while the handheld still chews on the previous frame.
inline StreamStats run_stream(const SimplifiedGraph& sg, const CutPartition& cut,
                              const TrueCostTable& table, const LinkModel& link,
                              const std::string& wear_context,
                              const std::string& handheld_context, size_t n_frames,
                              bool three_stage = false, const SimOptions& opts = {}) {
  validate_link(link);
  if (n_frames == 0) throw ValidationError("n_frames must be positive");
  detail::CostDraw draw(opts.noise, opts.seed);
  double transfer = transfer_time_ms(effective_transfer_bytes(sg, cut), link);
  double transfer_s = transfer / 1000.0;

  StreamStats st;
  st.n_frames = n_frames;
  st.three_stage = three_stage;
  st.completions_ms.reserve(n_frames);
  double a = 0.0, b = 0.0, c = 0.0;  // rolling stage finish times
  for (size_t f = 0; f < n_frames; ++f) {
    Cost wear = detail::drawn_side_cost(sg, cut.wear_set, table, wear_context, draw);
    Cost hand = detail::drawn_side_cost(sg, cut.handheld_set, table, handheld_context, draw);
    st.wear_busy_ms += wear.latency_ms;
    st.transfer_busy_ms += transfer;
    st.handheld_busy_ms += hand.latency_ms;
    st.energy_w_mj += wear.energy_mj + link.pt_mw * transfer_s;
    st.energy_p_mj += hand.energy_mj + link.pr_mw * transfer_s;

    a += wear.latency_ms;
    if (three_stage) {
      b = std::max(a, b) + transfer;
      c = std::max(b, c) + hand.latency_ms;
    } else {
      c = std::max(a, c) + (transfer + hand.latency_ms);
    }
    st.completions_ms.push_back(c);
  }
  st.makespan_ms = c;

  size_t tail = std::max<size_t>(1, n_frames / 2);
  if (n_frames == 1) {
    st.throughput_fps = st.makespan_ms > 0 ? 1000.0 / st.makespan_ms : 0.0;
  } else {
    tail = std::min(tail, n_frames - 1);
    double span = st.completions_ms[n_frames - 1] - st.completions_ms[n_frames - 1 - tail];
    st.throughput_fps = span > 0 ? static_cast<double>(tail) * 1000.0 / span : 0.0;
  }
  return st;
}

// Brute-force selection: simulate every cut noiselessly and pick per policy.
// Agrees with plan() whenever the planner's models match the table.
inline PlanDecision oracle_best(const SimplifiedGraph& sg, const TrueCostTable& table,
                                const LinkModel& link, const std::string& wear_context,
                                const std::string& handheld_context,
                                const PolicyConfig& policy, uint64_t cut_limit = 100000) {
  validate_policy(policy);
  std::vector<CutPartition> cuts = enumerate_cuts(sg, cut_limit);
  std::vector<EvaluatedCut> evaluated;
  evaluated.reserve(cuts.size());
  for (const CutPartition& cut : cuts) {
    SimResult r = run_once(sg, cut, table, link, wear_context, handheld_context);
    EvaluatedCut ec;
    ec.cut = cut;
    ec.wear_compute_ms = r.wear_compute_ms;
    ec.handheld_compute_ms = r.handheld_compute_ms;
    ec.transfer_ms = r.transfer_ms;
    ec.latency_ms = policy.streaming
                        ? std::max(r.wear_compute_ms, r.handheld_compute_ms + r.transfer_ms)
                        : r.latency_ms;
    ec.energy_w_mj = r.energy_w_mj;
    ec.energy_p_mj = r.energy_p_mj;
    ec.weighted_energy_mj = policy.w_w * r.energy_w_mj + policy.w_p * r.energy_p_mj;
    evaluated.push_back(std::move(ec));
  }
  PlanDecision d = select_optimal(evaluated, policy);
  d.wear_context = wear_context;
  d.handheld_context = handheld_context;
  d.origin_hash = sg.origin_hash();
  return d;
}

// ---- what-if sweeps ----

inline const std::vector<std::string>& sweep_csv_header() {
  static const std::vector<std::string> h = {"param",      "value",     "strategy",
                                             "latency_ms", "energy_mj", "chosen_cut"};
  return h;
}

// Sweep one knob and report, per value, the planner's choice next to the
// two degenerate placements. The energy column is the weighted blend under
// that row's weights, so rows within a value are directly comparable.
inline CsvTable run_sweep(const ModelGraph& g, const ModelRegistry& registry,
                          const std::string& wear_context, const std::string& handheld_context,
                          const LinkModel& base_link, const PolicyConfig& base_policy,
                          const std::string& param, const std::vector<double>& values,
                          const SimplifyConfig& simplify_cfg = {}, uint64_t cut_limit = 100000,
                          SimplifyCache* cache = &default_simplify_cache()) {
  if (param != "ww" && param != "bandwidth_bps" && param != "load")
    throw ValidationError("unknown sweep param '" + param + "', expected ww, bandwidth_bps, or load");
  if (values.empty()) throw ValidationError("sweep needs at least one value");

  CsvTable out;
  out.header = sweep_csv_header();
  for (double v : values) {
    LinkModel link = base_link;
    PolicyConfig policy = base_policy;
    std::string hctx = handheld_context;
    std::string value_str;
    if (param == "ww") {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("ww sweep values must lie in [0, 1]");
      policy.w_w = v;
      policy.w_p = 1.0 - v;
      value_str = format_double(v);
    } else if (param == "bandwidth_bps") {
      link.bandwidth_bps = v;
      value_str = format_double(v);
    } else {
      DeviceContext ctx = parse_context(handheld_context);
      ctx.load_bucket = map_load_bucket(v);
      hctx = ctx.str();
      value_str = std::to_string(ctx.load_bucket);
    }

    PlanDecision d =
        plan(g, registry, wear_context, hctx, link, policy, simplify_cfg, cut_limit, cache);
    const EvaluatedCut* wear_only = nullptr;
    const EvaluatedCut* handheld_only = nullptr;
    for (const EvaluatedCut& ec : d.candidates) {
      if (ec.cut.wearable_only) wear_only = &ec;
      if (ec.cut.handheld_only) handheld_only = &ec;
    }
    auto push = [&](const std::string& strategy, const EvaluatedCut& ec) {
      out.rows.push_back({param, value_str, strategy, format_double(ec.latency_ms),
                          format_double(ec.weighted_energy_mj), ec.cut.cut_label});
    };
    push("coinf", d.chosen);
    if (wear_only) push("wear_only", *wear_only);
    if (handheld_only) push("handheld_only", *handheld_only);
  }
  return out;
}

}  // namespace coinf
