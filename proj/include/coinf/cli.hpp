#pragma once

#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coinf/costmodel.hpp"
#include "coinf/graph.hpp"
#include "coinf/partition.hpp"
#include "coinf/profiler.hpp"
#include "coinf/sim.hpp"
#include "coinf/simplify.hpp"

namespace coinf::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitExplosion = 4;

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error("usage", msg) {}
};

namespace detail {

inline std::string read_file_or_throw(const std::string& path) {
  auto content = try_read_file(path);
  if (!content) throw Error("io", "cannot read '" + path + "'");
  return *content;
}

inline void write_file_or_throw(const std::string& path, const std::string& content) {
  if (!try_write_file(path, content)) throw Error("io", "cannot write '" + path + "'");
}

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

inline std::string config_value_to_arg(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<uint64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  throw Error("config", "config key '" + key + "' has an unsupported value type");
}

// Flags given on the command line win over config file entries, which win
// over built-in defaults. The merge appends missing flags so CLI11 applies
// its usual validation to both sources.
inline std::vector<std::string> merge_config_args(std::vector<std::string> args) {
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;

  json cfg;
  try {
    cfg = json::parse(read_file_or_throw(config_path));
  } catch (const json::parse_error& e) {
    throw Error("config", std::string("config file: ") + e.what());
  }
  if (!cfg.is_object()) throw Error("config", "config file must hold a JSON object");

  auto already_given = [&args](const std::string& flag) {
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    std::string flag = "--" + it.key();
    if (already_given(flag)) continue;
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
      continue;
    }
    if (v.is_array()) {
      std::string joined;
      for (const json& e : v) {
        if (!joined.empty()) joined += ',';
        joined += config_value_to_arg(e, it.key());
      }
      args.push_back(flag);
      args.push_back(joined);
      continue;
    }
    args.push_back(flag);
    args.push_back(config_value_to_arg(v, it.key()));
  }
  return args;
}

inline SimplifyCache& cli_cache() {
  static SimplifyCache cache;
  return cache;
}

inline SimplifyCache* configured_cache() {
  SimplifyCache& cache = cli_cache();
  if (const char* dir = std::getenv("COINF_CACHE_DIR"); dir && *dir) {
    cache.set_directory(dir);
  } else {
    cache.set_directory("");
  }
  return &cache;
}

inline void emit_artifact(const std::string& text, const std::string& out_path,
                          std::ostream& out) {
  out << text;
  if (!out_path.empty()) write_file_or_throw(out_path, text);
}

// ---- shared option bundles ----

struct LinkFlags {
  double bandwidth_bps = 0.0;
  double rtt_ms = 62.0;
  double pt_mw = 0.0;
  double pr_mw = 0.0;

  void attach(CLI::App* sub) {
    sub->add_option("--bandwidth-bps", bandwidth_bps,
                    "link bandwidth in bytes per second")
        ->required();
    sub->add_option("--rtt-ms", rtt_ms, "link round-trip time in ms");
    sub->add_option("--pt-mw", pt_mw, "wearable transmit power in mW");
    sub->add_option("--pr-mw", pr_mw, "handheld receive power in mW");
  }
  LinkModel link() const { return {bandwidth_bps, rtt_ms, pt_mw, pr_mw}; }
};

struct PolicyFlags {
  std::string prop_t = "0";
  double w_w = 0.5;
  double w_p = 0.5;
  bool streaming = false;

  void attach(CLI::App* sub) {
    sub->add_option("--prop-t", prop_t, "latency goal: 0, a budget in ms, or 'inf'");
    sub->add_option("--ww", w_w, "wearable energy weight in [0,1]");
    sub->add_option("--wp", w_p, "handheld energy weight in [0,1]");
    sub->add_flag("--streaming", streaming, "optimize pipelined throughput latency");
  }
  PolicyConfig policy() const { return {PropT::parse(prop_t), w_w, w_p, streaming}; }
};

struct SimplifyFlags {
  uint64_t min_support = 2;
  uint64_t max_pattern_size = 8;
  uint64_t limit = 100000;

  void attach(CLI::App* sub) {
    sub->add_option("--min-support", min_support, "min occurrences to group a pattern");
    sub->add_option("--max-pattern-size", max_pattern_size, "max nodes per grouped pattern");
    sub->add_option("--limit", limit, "abort when a graph admits more cuts than this");
  }
  SimplifyConfig config() const {
    return {static_cast<size_t>(min_support), static_cast<size_t>(max_pattern_size)};
  }
};

}  // namespace detail

// ---- subcommand payloads ----

namespace detail {

struct TrainCmd {
  std::string samples_path, context, out_path;
  double holdout_frac = 0.2;
  uint64_t holdout_seed = 0x5EED;
  bool no_pinv_fallback = false;

  int run(std::ostream& out, std::ostream& err) const {
    DeviceContext ctx = parse_context(context);
    auto samples = samples_from_csv(read_file_or_throw(samples_path));
    TrainOptions opts;
    opts.holdout_frac = holdout_frac;
    opts.holdout_seed = holdout_seed;
    opts.pinv_fallback = !no_pinv_fallback;
    LayerCostModel model = train(samples, ctx, opts);
    write_file_or_throw(out_path, save_model(model));

    size_t n_total = 0;
    json leaves = json::object();
    for (const auto& [key, q] : model.fit_r2) {
      n_total += q.n_samples;
      leaves[key] = {{"latency_r2", q.latency_r2},
                     {"energy_r2", q.energy_r2},
                     {"n_samples", q.n_samples}};
      if (q.latency_r2 < 0.9 || q.energy_r2 < 0.9) {
        err << "warning: leaf '" << key << "' fits poorly (latency R2 "
            << format_double(q.latency_r2) << ", energy R2 " << format_double(q.energy_r2)
            << ")\n";
      }
    }
    for (const auto& key : model.degenerate_keys) {
      err << "warning: leaf '" << key << "' had a degenerate design, used pseudo-inverse\n";
    }
    json report;
    report["kind"] = "train_report";
    report["schema_version"] = 1;
    report["context"] = ctx.str();
    report["n_samples"] = n_total;
    report["leaves"] = std::move(leaves);
    report["degenerate_keys"] = model.degenerate_keys;
    report["out"] = out_path;
    out << report.dump(2) << "\n";
    return kExitOk;
  }
};

struct PlanCmd {
  std::string graph_path, model_wear_path, model_handheld_path, out_path;
  LinkFlags link_flags;
  PolicyFlags policy_flags;
  SimplifyFlags simplify_flags;
  // trace-driven extras
  std::string trace_path;
  std::string weight_rule = "manual";
  uint64_t at_ms = 0;
  uint64_t probe_bytes = 100000;
  uint64_t probe_interval_s = 300;
  double probe_jitter = 0.0;
  uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  // reporting extras
  double capacity_wear_mah = 0.0;
  double capacity_handheld_mah = 0.0;
  CLI::Option* cap_w_opt = nullptr;
  CLI::Option* cap_p_opt = nullptr;

  int run(std::ostream& out, std::ostream& err) const {
    if (cap_w_opt->count() != cap_p_opt->count())
      throw UsageError("battery normalization needs both capacity flags");

    ModelGraph g = parse_graph(read_file_or_throw(graph_path));
    LayerCostModel wear_model = load_model(read_file_or_throw(model_wear_path));
    LayerCostModel hand_model = load_model(read_file_or_throw(model_handheld_path));
    std::string wctx = wear_model.context.str();
    std::string hctx = hand_model.context.str();
    if (wctx == hctx)
      throw ValidationError("wear and handheld models must cover different contexts");
    ModelRegistry registry;
    registry[wctx] = std::move(wear_model);
    registry[hctx] = std::move(hand_model);

    LinkModel link = link_flags.link();
    PolicyConfig policy = policy_flags.policy();

    json probe_block, weights_block;
    if (!trace_path.empty()) {
      if (probe_jitter > 0.0 && seed_opt->count() == 0)
        throw UsageError("--probe-jitter needs an explicit --seed");
      auto trace = parse_trace(read_file_or_throw(trace_path));
      ChannelModel channel{link.bandwidth_bps, probe_jitter, seed};
      BandwidthEstimate est = probe_bandwidth(channel, trace, probe_bytes, at_ms);
      link.bandwidth_bps = est.bps;
      probe_block = {{"bps", est.bps},
                     {"measured_at_ms", est.measured_at_ms},
                     {"probe_bytes", est.probe_bytes},
                     {"next_due_ms", next_probe_due(trace, at_ms, probe_interval_s)}};

      WeightRule rule;
      rule.kind = weight_rule_kind(weight_rule);
      rule.manual_w_w = policy.w_w;
      rule.manual_w_p = policy.w_p;
      Weights w = resolve_weights(rule, status_at(trace, at_ms, Device::wearable),
                                  status_at(trace, at_ms, Device::handheld));
      policy.w_w = w.w_w;
      policy.w_p = w.w_p;
      if (w.degenerate)
        err << "warning: both batteries are full, energy weights are all zero\n";
      weights_block = {{"rule", weight_rule},
                      {"w_w", w.w_w},
                      {"w_p", w.w_p},
                      {"degenerate", w.degenerate}};
    } else if (weight_rule != "manual") {
      throw UsageError("--weight-rule " + weight_rule + " needs --trace");
    }

    PlanDecision d = plan(g, registry, wctx, hctx, link, policy, simplify_flags.config(),
                          simplify_flags.limit, configured_cache());

    json j = plan_to_json(d, link, policy);
    if (!probe_block.is_null()) {
      j["probe"] = std::move(probe_block);
      j["weights"] = std::move(weights_block);
    }
    if (cap_w_opt->count() > 0) {
      j["normalized"] = {
          {"energy_p_normalized_mj",
           normalize_energy(d.chosen.energy_p_mj, capacity_handheld_mah, capacity_wear_mah)},
          {"capacity_wear_mah", capacity_wear_mah},
          {"capacity_handheld_mah", capacity_handheld_mah}};
    }
    emit_artifact(j.dump(2) + "\n", out_path, out);
    return kExitOk;
  }
};

struct SimulateCmd {
  std::string graph_path, table_path, wear_context, handheld_context, out_path;
  std::string cut = "auto";
  LinkFlags link_flags;
  PolicyFlags policy_flags;
  SimplifyFlags simplify_flags;
  uint64_t frames = 1;
  bool three_stage = false;
  double noise_sigma = 0.0;
  uint64_t noise_seed = 0;
  CLI::Option* noise_seed_opt = nullptr;
  uint64_t seed = 0;
  double wear_idle_mw = 0.0;

  int run(std::ostream& out, std::ostream&) const {
    if (noise_sigma > 0.0 && noise_seed_opt->count() == 0)
      throw UsageError("--noise-sigma needs an explicit --noise-seed");
    parse_context(wear_context);
    parse_context(handheld_context);

    ModelGraph g = parse_graph(read_file_or_throw(graph_path));
    TrueCostTable table = table_from_csv(read_file_or_throw(table_path));
    LinkModel link = link_flags.link();
    PolicyConfig policy = policy_flags.policy();
    SimplifiedGraph sg = simplify(g, simplify_flags.config(), configured_cache());

    CutPartition chosen;
    json selection;
    if (cut == "auto") {
      PlanDecision d = oracle_best(sg, table, link, wear_context, handheld_context, policy,
                                   simplify_flags.limit);
      chosen = d.chosen.cut;
      selection = {{"applied_branch", d.applied_branch}, {"origin_hash", d.origin_hash}};
    } else {
      std::vector<std::string> ids = split_csv_list(cut);
      std::sort(ids.begin(), ids.end());
      bool found = false;
      for (const CutPartition& c : enumerate_cuts(sg, simplify_flags.limit)) {
        if (c.wear_set == ids) {
          chosen = c;
          found = true;
          break;
        }
      }
      if (!found)
        throw ValidationError("'" + cut + "' is not a valid wearable-side cut of this graph");
    }

    SimOptions opts;
    opts.seed = seed;
    opts.noise = {noise_sigma, noise_seed};
    opts.wear_idle_mw = wear_idle_mw;

    json j;
    j["kind"] = "sim_report";
    j["schema_version"] = 1;
    j["contexts"] = {{"wearable", wear_context}, {"handheld", handheld_context}};
    j["cut"] = {{"cut_label", chosen.cut_label},
                {"wear_set", chosen.wear_set},
                {"handheld_set", chosen.handheld_set},
                {"dt_bytes", chosen.dt_bytes},
                {"effective_transfer_bytes", effective_transfer_bytes(sg, chosen)}};
    if (!selection.is_null()) j["selection"] = std::move(selection);

    if (frames <= 1) {
      SimResult r =
          run_once(sg, chosen, table, link, wear_context, handheld_context, opts);
      j["mode"] = "single";
      j["result"] = {{"latency_ms", r.latency_ms},
                     {"energy_w_mj", r.energy_w_mj},
                     {"energy_p_mj", r.energy_p_mj},
                     {"wear_compute_ms", r.wear_compute_ms},
                     {"transfer_ms", r.transfer_ms},
                     {"handheld_compute_ms", r.handheld_compute_ms}};
    } else {
      StreamStats st = run_stream(sg, chosen, table, link, wear_context, handheld_context,
                                  frames, three_stage, opts);
      j["mode"] = "stream";
      j["stats"] = {{"frames", st.n_frames},
                    {"three_stage", st.three_stage},
                    {"makespan_ms", st.makespan_ms},
                    {"throughput_fps", st.throughput_fps},
                    {"energy_w_mj", st.energy_w_mj},
                    {"energy_p_mj", st.energy_p_mj},
                    {"wear_busy_ms", st.wear_busy_ms},
                    {"transfer_busy_ms", st.transfer_busy_ms},
                    {"handheld_busy_ms", st.handheld_busy_ms}};
    }
    emit_artifact(j.dump(2) + "\n", out_path, out);
    return kExitOk;
  }
};

struct SweepCmd {
  std::string graph_path, wear_context, handheld_context, param, values_csv, out_path;
  std::vector<std::string> model_paths;
  LinkFlags link_flags;
  PolicyFlags policy_flags;
  SimplifyFlags simplify_flags;

  int run(std::ostream& out, std::ostream&) const {
    ModelGraph g = parse_graph(read_file_or_throw(graph_path));
    ModelRegistry registry;
    for (const std::string& path : model_paths) {
      LayerCostModel m = load_model(read_file_or_throw(path));
      std::string ctx = m.context.str();
      if (registry.count(ctx))
        throw ValidationError("two models cover context '" + ctx + "'");
      registry[ctx] = std::move(m);
    }
    std::vector<double> values;
    for (const std::string& tok : split_csv_list(values_csv)) {
      double v = 0;
      if (!parse_double(tok, v)) throw UsageError("bad sweep value '" + tok + "'");
      values.push_back(v);
    }

    CsvTable rows =
        run_sweep(g, registry, wear_context, handheld_context, link_flags.link(),
                  policy_flags.policy(), param, values, simplify_flags.config(),
                  simplify_flags.limit, configured_cache());
    write_file_or_throw(out_path, emit_csv(rows));

    json report;
    report["kind"] = "sweep_report";
    report["schema_version"] = 1;
    report["param"] = param;
    report["values"] = values;
    report["rows"] = rows.rows.size();
    report["out"] = out_path;
    out << report.dump(2) << "\n";
    return kExitOk;
  }
};

struct SimplifyCmd {
  std::string graph_path, out_path;
  SimplifyFlags simplify_flags;

  int run(std::ostream& out, std::ostream&) const {
    ModelGraph g = parse_graph(read_file_or_throw(graph_path));
    SimplifiedGraph sg = simplify(g, simplify_flags.config(), configured_cache());
    emit_artifact(serialize_simplified(sg), out_path, out);
    return kExitOk;
  }
};

struct InspectCmd {
  std::string in_path;

  static std::string canonical_json(const std::string& text) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("inspect: ") + e.what(), e.byte);
    }
    std::string kind = j.is_object() && j.count("kind") && j.at("kind").is_string()
                           ? j.at("kind").get<std::string>()
                           : "";
    if (kind == "cost_model") return save_model(model_from_json(j));
    if (kind == "simplified_graph") return serialize_simplified(simplified_from_json(j));
    if (kind == "plan_decision" || kind == "sim_report" || kind == "train_report" ||
        kind == "sweep_report") {
      const json& ver = j.at("schema_version");
      if (!ver.is_number_integer() || ver.get<int64_t>() != 1)
        throw ParseError("inspect: unsupported schema_version " + ver.dump());
      if (kind == "plan_decision" &&
          (!j.count("chosen") || !j.at("chosen").is_object() || !j.count("candidates")))
        throw ParseError("inspect: plan_decision is missing chosen/candidates");
      return j.dump(2) + "\n";
    }
    if (kind.empty() && j.is_object() && j.count("nodes") && j.count("source"))
      return serialize_graph(graph_from_json(j));
    throw Error("unrecognized", "inspect: not a known artifact kind");
  }

  static std::string canonical_csv(const std::string& text) {
    CsvTable probe = parse_csv(text, {});
    if (probe.header == trace_csv_header()) return trace_to_csv(parse_trace(text));
    if (probe.header == sample_csv_header()) return samples_to_csv(samples_from_csv(text));
    if (probe.header == table_csv_header()) return table_to_csv(table_from_csv(text));
    if (probe.header == sweep_csv_header()) return emit_csv(probe);
    throw Error("unrecognized", "inspect: csv header matches no known artifact");
  }

  int run(std::ostream& out, std::ostream&) const {
    std::string text = read_file_or_throw(in_path);
    size_t first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw Error("unrecognized", "inspect: file is empty");
    out << (text[first] == '{' ? canonical_json(text) : canonical_csv(text));
    return kExitOk;
  }
};

}  // namespace detail

// Entry point shared by the binary and the test suite. Errors come back as
// a JSON object on stdout plus a matching exit code, so scripted callers
// never have to scrape free-form text.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"on-device/offloaded inference partition planner", "coinf"};
  app.require_subcommand(1);
  app.footer("Any subcommand accepts --config FILE (JSON object); explicit flags win.");

  detail::TrainCmd train_cmd;
  CLI::App* train_sub = app.add_subcommand("train", "fit per-layer cost models");
  train_sub->add_option("--samples", train_cmd.samples_path, "profiling samples csv")
      ->required();
  train_sub->add_option("--context", train_cmd.context, "device/processor/load context")
      ->required();
  train_sub->add_option("--out", train_cmd.out_path, "model json output path")->required();
  train_sub->add_option("--holdout-frac", train_cmd.holdout_frac,
                        "fraction of samples held out for scoring");
  train_sub->add_option("--holdout-seed", train_cmd.holdout_seed, "holdout split seed");
  train_sub->add_flag("--no-pinv-fallback", train_cmd.no_pinv_fallback,
                      "fail on degenerate designs instead of using a pseudo-inverse");

  detail::PlanCmd plan_cmd;
  CLI::App* plan_sub = app.add_subcommand("plan", "pick the best partition for a graph");
  plan_sub->add_option("--graph", plan_cmd.graph_path, "model graph json")->required();
  plan_sub->add_option("--model-wear", plan_cmd.model_wear_path, "wearable cost model json")
      ->required();
  plan_sub
      ->add_option("--model-handheld", plan_cmd.model_handheld_path,
                   "handheld cost model json")
      ->required();
  plan_cmd.link_flags.attach(plan_sub);
  plan_cmd.policy_flags.attach(plan_sub);
  plan_cmd.simplify_flags.attach(plan_sub);
  plan_sub->add_option("--trace", plan_cmd.trace_path,
                       "device status trace csv; enables probing and weight rules");
  plan_sub->add_option("--at-ms", plan_cmd.at_ms, "trace timestamp to plan at");
  plan_sub->add_option("--weight-rule", plan_cmd.weight_rule,
                       "energy weight rule: manual, r1, or r2");
  plan_sub->add_option("--probe-bytes", plan_cmd.probe_bytes, "bandwidth probe payload size");
  plan_sub->add_option("--probe-interval-s", plan_cmd.probe_interval_s,
                       "periodic probe interval in seconds");
  plan_sub->add_option("--probe-jitter", plan_cmd.probe_jitter,
                       "lognormal sigma on the probed channel");
  plan_cmd.seed_opt = plan_sub->add_option("--seed", plan_cmd.seed, "probe jitter seed");
  plan_cmd.cap_w_opt = plan_sub->add_option("--capacity-wear-mah", plan_cmd.capacity_wear_mah,
                                            "wearable battery capacity");
  plan_cmd.cap_p_opt = plan_sub->add_option(
      "--capacity-handheld-mah", plan_cmd.capacity_handheld_mah, "handheld battery capacity");
  plan_sub->add_option("--out", plan_cmd.out_path, "also write the decision json here");

  detail::SimulateCmd sim_cmd;
  CLI::App* sim_sub = app.add_subcommand("simulate", "run a cut against true costs");
  sim_sub->add_option("--graph", sim_cmd.graph_path, "model graph json")->required();
  sim_sub->add_option("--table", sim_cmd.table_path, "true cost table csv")->required();
  sim_sub->add_option("--wear-context", sim_cmd.wear_context, "wearable context")->required();
  sim_sub->add_option("--handheld-context", sim_cmd.handheld_context, "handheld context")
      ->required();
  sim_sub->add_option("--cut", sim_cmd.cut,
                      "'auto' or a comma-separated wearable-side id list");
  sim_cmd.link_flags.attach(sim_sub);
  sim_cmd.policy_flags.attach(sim_sub);
  sim_cmd.simplify_flags.attach(sim_sub);
  sim_sub->add_option("--frames", sim_cmd.frames, "frames to stream (1 = single shot)");
  sim_sub->add_flag("--three-stage", sim_cmd.three_stage,
                    "pipeline transfer separately from handheld compute");
  sim_sub->add_option("--noise-sigma", sim_cmd.noise_sigma, "lognormal cost noise");
  sim_cmd.noise_seed_opt =
      sim_sub->add_option("--noise-seed", sim_cmd.noise_seed, "cost noise seed");
  sim_sub->add_option("--seed", sim_cmd.seed, "per-run seed mixed into noise draws");
  sim_sub->add_option("--wear-idle-mw", sim_cmd.wear_idle_mw,
                      "wearable idle draw while the handheld computes");
  sim_sub->add_option("--out", sim_cmd.out_path, "also write the report json here");

  detail::SweepCmd sweep_cmd;
  CLI::App* sweep_sub = app.add_subcommand("sweep", "sweep one knob and tabulate choices");
  sweep_sub->add_option("--graph", sweep_cmd.graph_path, "model graph json")->required();
  sweep_sub->add_option("--model", sweep_cmd.model_paths, "cost model json (repeatable)")
      ->required();
  sweep_sub->add_option("--wear-context", sweep_cmd.wear_context, "wearable context")
      ->required();
  sweep_sub->add_option("--handheld-context", sweep_cmd.handheld_context, "handheld context")
      ->required();
  sweep_sub->add_option("--param", sweep_cmd.param, "ww, bandwidth_bps, or load")->required();
  sweep_sub->add_option("--values", sweep_cmd.values_csv, "comma-separated sweep values")
      ->required();
  sweep_cmd.link_flags.attach(sweep_sub);
  sweep_cmd.policy_flags.attach(sweep_sub);
  sweep_cmd.simplify_flags.attach(sweep_sub);
  sweep_sub->add_option("--out", sweep_cmd.out_path, "sweep csv output path")->required();

  detail::SimplifyCmd simplify_cmd;
  CLI::App* simplify_sub =
      app.add_subcommand("simplify", "prune and group a graph, emit the supernode form");
  simplify_sub->add_option("--graph", simplify_cmd.graph_path, "model graph json")->required();
  simplify_cmd.simplify_flags.attach(simplify_sub);
  simplify_sub->add_option("--out", simplify_cmd.out_path,
                           "also write the simplified json here");

  detail::InspectCmd inspect_cmd;
  CLI::App* inspect_sub =
      app.add_subcommand("inspect", "validate an artifact and re-emit it canonically");
  inspect_sub->add_option("--in", inspect_cmd.in_path, "artifact file (json or csv)")
      ->required();

  try {
    args = detail::merge_config_args(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));

    if (train_sub->parsed()) return train_cmd.run(out, err);
    if (plan_sub->parsed()) return plan_cmd.run(out, err);
    if (sim_sub->parsed()) return sim_cmd.run(out, err);
    if (sweep_sub->parsed()) return sweep_cmd.run(out, err);
    if (simplify_sub->parsed()) return simplify_cmd.run(out, err);
    if (inspect_sub->parsed()) return inspect_cmd.run(out, err);
    throw UsageError("no subcommand given");
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    json j;
    j["error"] = {{"kind", "usage"}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    return kExitUsage;
  } catch (const CutExplosionError& e) {
    json j;
    j["error"] = {{"kind", e.kind()}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    return kExitExplosion;
  } catch (const UsageError& e) {
    json j;
    j["error"] = {{"kind", e.kind()}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    json j;
    j["error"] = {{"kind", e.kind()}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    json j;
    j["error"] = {{"kind", "internal"}, {"message", e.what()}};
    out << j.dump(2) << "\n";
    return kExitData;
  }
}

}  // namespace coinf::cli
