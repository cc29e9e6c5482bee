#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "coinf/csv.hpp"
#include "coinf/error.hpp"
#include "coinf/graph.hpp"
#include "coinf/util.hpp"

namespace coinf {

struct Cost {
  double latency_ms = 0.0;
  double energy_mj = 0.0;
  Cost& operator+=(const Cost& o) {
    latency_ms += o.latency_ms;
    energy_mj += o.energy_mj;
    return *this;
  }
  friend Cost operator+(Cost a, const Cost& b) { return a += b; }
  bool operator==(const Cost&) const = default;
};

inline const std::vector<int>& default_load_buckets() {
  static const std::vector<int> buckets = {0, 50, 80};
  return buckets;
}

// Nearest configured bucket; ties go to the lower bucket.
inline int map_load_bucket(double load_pct, const std::vector<int>& buckets = default_load_buckets()) {
  if (buckets.empty()) throw Error("config", "load bucket list must be non-empty");
  int best = buckets.front();
  double best_d = std::abs(load_pct - best);
  for (int b : buckets) {
    double d = std::abs(load_pct - b);
    if (d < best_d || (d == best_d && b < best)) {
      best = b;
      best_d = d;
    }
  }
  return best;
}

struct DeviceContext {
  std::string device;     // free-form, e.g. "urbane" or "nexus6"
  std::string processor;  // cpu-interactive | cpu-powersave | gpu
  int load_bucket = 0;

  std::string str() const {
    return device + "/" + processor + "/" + std::to_string(load_bucket);
  }
  bool operator==(const DeviceContext&) const = default;
  bool operator<(const DeviceContext& o) const { return str() < o.str(); }
};

inline bool valid_processor(const std::string& p) {
  return p == "cpu-interactive" || p == "cpu-powersave" || p == "gpu";
}

inline DeviceContext parse_context(const std::string& s) {
  size_t a = s.find('/');
  size_t b = (a == std::string::npos) ? std::string::npos : s.find('/', a + 1);
  if (a == std::string::npos || b == std::string::npos || s.find('/', b + 1) != std::string::npos)
    throw ParseError("context '" + s + "' must be device/processor/load");
  DeviceContext c;
  c.device = s.substr(0, a);
  c.processor = s.substr(a + 1, b - a - 1);
  std::string load = s.substr(b + 1);
  int64_t bucket = 0;
  if (c.device.empty() || !valid_processor(c.processor) || !parse_i64(load, bucket) ||
      bucket < 0 || bucket > 100)
    throw ParseError("context '" + s + "' must be device/processor/load with processor in "
                     "{cpu-interactive, cpu-powersave, gpu} and load in [0,100]");
  c.load_bucket = static_cast<int>(bucket);
  return c;
}

struct FeatureVector {
  std::string layer_key;
  std::vector<double> regressors;
  bool operator==(const FeatureVector&) const = default;
};

// Regressor arity per key family: conv/pool and activations use a single
// volume term, fc uses the three matrix products.
inline size_t regressor_arity(const std::string& layer_key) {
  if (layer_key.rfind("fc", 0) == 0) return 3;
  return 1;
}

inline FeatureVector featurize(const LayerNode& n) {
  switch (n.op_type) {
    case OpType::convolution:
    case OpType::pooling: {
      const auto& p = std::get<ConvPoolParams>(n.params);
      double vol = static_cast<double>(p.batch) * static_cast<double>(p.input_width) *
                   static_cast<double>(p.input_height) * static_cast<double>(p.channel) *
                   static_cast<double>(p.kernel_number) /
                   (static_cast<double>(p.stride) * static_cast<double>(p.stride));
      const char* fam = (n.op_type == OpType::convolution) ? "conv" : "pool";
      return {std::string(fam) + "/k" + std::to_string(p.kernel_size), {vol}};
    }
    case OpType::fully_connected: {
      const auto& p = std::get<FcParams>(n.params);
      double aw = static_cast<double>(p.a_width);
      double ah = static_cast<double>(p.a_height);
      double bw = static_cast<double>(p.b_width);
      double bh = static_cast<double>(p.b_height);
      return {"fc", {aw * ah * bw, aw * ah, bw * bh}};
    }
    case OpType::activation: {
      const auto& p = std::get<ActivationParams>(n.params);
      return {"act/" + p.fn_kind, {static_cast<double>(p.input_size)}};
    }
    case OpType::other:
      throw UnmodeledLayerError("node '" + n.id + "' (" + n.op_name +
                                ") has no cost features");
  }
  throw UnmodeledLayerError("unreachable");
}

struct OlsFit {
  std::vector<double> coef;
  double intercept = 0.0;
  bool operator==(const OlsFit&) const = default;

  double predict(const std::vector<double>& regressors) const {
    double y = intercept;
    for (size_t i = 0; i < coef.size(); ++i) y += coef[i] * regressors[i];
    return y;
  }
};

struct LeafQuality {
  double latency_r2 = 0.0;
  double energy_r2 = 0.0;
  size_t n_samples = 0;
  bool operator==(const LeafQuality&) const = default;
};

struct LayerCostModel {
  DeviceContext context;
  std::map<std::string, OlsFit> latency_leaves;
  std::map<std::string, OlsFit> energy_leaves;
  std::map<std::string, LeafQuality> fit_r2;
  std::vector<std::string> degenerate_keys;
};

struct ProfilingSample {
  OpType op_type = OpType::other;
  std::string op_name;
  LayerParams params = OtherParams{};
  DeviceContext context;
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

struct TrainOptions {
  double holdout_frac = 0.2;
  uint64_t holdout_seed = 0x5EED;
  // Singular normal equations: solve by pseudo-inverse and record the key,
  // or throw DegenerateDesign when disabled.
  bool pinv_fallback = true;
};

namespace detail {

// Gaussian elimination with partial pivoting on the (p+1)x(p+1) normal
// equations. Returns false when the system is numerически singular.
inline bool solve_normal_equations(std::vector<std::vector<double>> a, std::vector<double> b,
                                   std::vector<double>& x) {
  size_t n = a.size();
  double scale = 0.0;
  for (size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i][i]));
  if (scale == 0.0) return false;
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-10 * scale) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (size_t i = n; i-- > 0;) {
    double s = b[i];
    for (size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

// Jacobi eigendecomposition of a symmetric matrix; used as the min-norm
// pseudo-inverse fallback. Matrices here are at most 4x4.
inline void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& eigvals,
                         std::vector<std::vector<double>>& eigvecs) {
  size_t n = a.size();
  eigvecs.assign(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) eigvecs[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-24) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          double vkp = eigvecs[k][p], vkq = eigvecs[k][q];
          eigvecs[k][p] = c * vkp - s * vkq;
          eigvecs[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  eigvals.resize(n);
  for (size_t i = 0; i < n; ++i) eigvals[i] = a[i][i];
}

inline std::vector<double> pinv_solve(const std::vector<std::vector<double>>& a,
                                      const std::vector<double>& b) {
  size_t n = a.size();
  std::vector<double> eigvals;
  std::vector<std::vector<double>> q;
  jacobi_eigen(a, eigvals, q);
  double lmax = 0.0;
  for (double l : eigvals) lmax = std::max(lmax, std::abs(l));
  // x = Q diag(1/lambda) Q^T b with tiny eigenvalues zeroed
  std::vector<double> qtb(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < n; ++k) qtb[i] += q[k][i] * b[k];
  for (size_t i = 0; i < n; ++i) {
    qtb[i] = (lmax > 0 && std::abs(eigvals[i]) > 1e-12 * lmax) ? qtb[i] / eigvals[i] : 0.0;
  }
  std::vector<double> x(n, 0.0);
  for (size_t k = 0; k < n; ++k)
    for (size_t i = 0; i < n; ++i) x[k] += q[k][i] * qtb[i];
  return x;
}

struct KeyedRows {
  std::vector<std::vector<double>> regressors;
  std::vector<double> latency;
  std::vector<double> energy;
};

inline OlsFit fit_ols(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                      const std::string& key, bool pinv_fallback, bool& degenerate) {
  size_t p = xs.front().size();
  size_t n = p + 1;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (size_t r = 0; r < xs.size(); ++r) {
    std::vector<double> row(n, 1.0);
    for (size_t i = 0; i < p; ++i) row[i + 1] = xs[r][i];
    for (size_t i = 0; i < n; ++i) {
      b[i] += row[i] * ys[r];
      for (size_t j = 0; j < n; ++j) a[i][j] += row[i] * row[j];
    }
  }
  std::vector<double> x;
  if (!solve_normal_equations(a, b, x)) {
    if (!pinv_fallback) throw DegenerateDesignError(key);
    degenerate = true;
    x = pinv_solve(a, b);
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DegenerateDesignError(key);
  }
  OlsFit fit;
  fit.intercept = x[0];
  fit.coef.assign(x.begin() + 1, x.end());
  return fit;
}

inline double r_squared(const OlsFit& fit, const std::vector<std::vector<double>>& xs,
                        const std::vector<double>& ys) {
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(ys.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < ys.size(); ++i) {
    double e = ys[i] - fit.predict(xs[i]);
    ss_res += e * e;
    double d = ys[i] - mean;
    ss_tot += d * d;
  }
  if (ss_tot < 1e-12) return ss_res < 1e-9 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

}  // namespace detail

// Fits the per-leaf regression model from profiling samples matching
// `context`. Quality is scored on a held-out slice chosen by hashing each
// sample's per-key index, so the split is stable across runs and platforms.
inline LayerCostModel train(const std::vector<ProfilingSample>& samples,
                            const DeviceContext& context, const TrainOptions& opts = {}) {
  LayerCostModel model;
  model.context = context;

  std::map<std::string, detail::KeyedRows> by_key;
  for (const ProfilingSample& s : samples) {
    if (!(s.context == context)) continue;
    LayerNode probe{"sample", s.op_type, s.op_name, s.params, 0};
    FeatureVector fv = featurize(probe);
    auto& rows = by_key[fv.layer_key];
    rows.regressors.push_back(fv.regressors);
    rows.latency.push_back(s.latency_ms);
    rows.energy.push_back(s.energy_mj);
  }
  if (by_key.empty())
    throw InsufficientSamplesError("context " + context.str(), 0, 1);

  for (auto& [key, rows] : by_key) {
    size_t n = rows.regressors.size();
    size_t p = rows.regressors.front().size();
    if (n < p + 1) throw InsufficientSamplesError(key, n, p + 1);

    std::vector<char> held(n, 0);
    size_t train_count = n;
    uint64_t key_salt = fnv1a64(key);
    for (size_t i = 0; i < n; ++i) {
      uint64_t h = mix64(opts.holdout_seed ^ key_salt, i);
      if (static_cast<double>(h % 1000) < opts.holdout_frac * 1000.0) {
        held[i] = 1;
        --train_count;
      }
    }
    // never hold out so much that the fit is underdetermined
    for (size_t i = 0; i < n && train_count < p + 1; ++i) {
      if (held[i]) {
        held[i] = 0;
        ++train_count;
      }
    }

    detail::KeyedRows fit_rows, eval_rows;
    for (size_t i = 0; i < n; ++i) {
      auto& dst = held[i] ? eval_rows : fit_rows;
      dst.regressors.push_back(rows.regressors[i]);
      dst.latency.push_back(rows.latency[i]);
      dst.energy.push_back(rows.energy[i]);
    }
    const detail::KeyedRows& score = eval_rows.regressors.empty() ? fit_rows : eval_rows;

    bool degenerate = false;
    OlsFit lat = detail::fit_ols(fit_rows.regressors, fit_rows.latency, key,
                                 opts.pinv_fallback, degenerate);
    OlsFit ene = detail::fit_ols(fit_rows.regressors, fit_rows.energy, key,
                                 opts.pinv_fallback, degenerate);
    if (degenerate) model.degenerate_keys.push_back(key);

    LeafQuality q;
    q.latency_r2 = detail::r_squared(lat, score.regressors, score.latency);
    q.energy_r2 = detail::r_squared(ene, score.regressors, score.energy);
    q.n_samples = n;
    model.latency_leaves[key] = std::move(lat);
    model.energy_leaves[key] = std::move(ene);
    model.fit_r2[key] = q;
  }
  return model;
}

inline Cost predict_node(const LayerCostModel& model, const LayerNode& node) {
  FeatureVector fv = featurize(node);  // throws UnmodeledLayer for pass-through ops
  auto lit = model.latency_leaves.find(fv.layer_key);
  auto eit = model.energy_leaves.find(fv.layer_key);
  if (lit == model.latency_leaves.end() || eit == model.energy_leaves.end())
    throw UnknownKeyError("no trained leaf for layer key '" + fv.layer_key + "'");
  Cost c;
  c.latency_ms = std::max(0.0, lit->second.predict(fv.regressors));
  c.energy_mj = std::max(0.0, eit->second.predict(fv.regressors));
  return c;
}

// Whole-graph prediction: pass-through nodes contribute nothing, everything
// else is summed in topological order (a fixed order keeps repeated runs
// bitwise identical).
inline Cost predict_graph(const LayerCostModel& model, const ModelGraph& g) {
  Cost total;
  for (const std::string& id : g.topo()) {
    const LayerNode& n = g.node(id);
    if (n.op_type == OpType::other) continue;
    total += predict_node(model, n);
  }
  return total;
}

inline json ols_to_json(const OlsFit& f) {
  return json{{"coef", f.coef}, {"intercept", f.intercept}};
}

inline OlsFit ols_from_json(const json& j, const std::string& key) {
  const std::string ctx = "leaf '" + key + "'";
  OlsFit f;
  const json& coef = detail::require_field(j, "coef", ctx);
  if (!coef.is_array()) throw ParseError(ctx + ": coef must be an array");
  for (const json& c : coef) {
    if (!c.is_number()) throw ParseError(ctx + ": coef entries must be numbers");
    f.coef.push_back(c.get<double>());
  }
  const json& ic = detail::require_field(j, "intercept", ctx);
  if (!ic.is_number()) throw ParseError(ctx + ": intercept must be a number");
  f.intercept = ic.get<double>();
  if (f.coef.size() != regressor_arity(key))
    throw ParseError(ctx + ": expected " + std::to_string(regressor_arity(key)) +
                     " coefficients, got " + std::to_string(f.coef.size()));
  return f;
}

inline json model_to_json(const LayerCostModel& m) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "cost_model";
  j["context"] = m.context.str();
  json lat = json::object(), ene = json::object(), r2 = json::object();
  for (const auto& [key, fit] : m.latency_leaves) lat[key] = ols_to_json(fit);
  for (const auto& [key, fit] : m.energy_leaves) ene[key] = ols_to_json(fit);
  for (const auto& [key, q] : m.fit_r2) {
    r2[key] = json{{"latency", q.latency_r2}, {"energy", q.energy_r2},
                   {"n_samples", q.n_samples}};
  }
  j["latency_leaves"] = std::move(lat);
  j["energy_leaves"] = std::move(ene);
  j["fit_r2"] = std::move(r2);
  j["degenerate_keys"] = m.degenerate_keys;
  return j;
}

inline std::string save_model(const LayerCostModel& m) { return model_to_json(m).dump(2) + "\n"; }

inline LayerCostModel model_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("model: top level must be an object");
  const json& ver = detail::require_field(j, "schema_version", "model");
  if (!ver.is_number_integer() || ver.get<int64_t>() != 1)
    throw ParseError("model: unsupported schema_version " + ver.dump());
  LayerCostModel m;
  m.context = parse_context(detail::get_string(j, "context", "model"));
  const json& lat = detail::require_field(j, "latency_leaves", "model");
  const json& ene = detail::require_field(j, "energy_leaves", "model");
  if (!lat.is_object() || !ene.is_object())
    throw ParseError("model: leaves must be objects keyed by layer key");
  for (auto it = lat.begin(); it != lat.end(); ++it)
    m.latency_leaves[it.key()] = ols_from_json(it.value(), it.key());
  for (auto it = ene.begin(); it != ene.end(); ++it)
    m.energy_leaves[it.key()] = ols_from_json(it.value(), it.key());
  if (m.latency_leaves.size() != m.energy_leaves.size())
    throw ParseError("model: latency and energy leaves must cover the same keys");
  for (const auto& [key, fit] : m.latency_leaves) {
    (void)fit;
    if (!m.energy_leaves.count(key))
      throw ParseError("model: key '" + key + "' missing from energy_leaves");
  }
  if (j.count("fit_r2")) {
    const json& r2 = j.at("fit_r2");
    if (!r2.is_object()) throw ParseError("model: fit_r2 must be an object");
    for (auto it = r2.begin(); it != r2.end(); ++it) {
      LeafQuality q;
      q.latency_r2 = detail::require_field(it.value(), "latency", "fit_r2").get<double>();
      q.energy_r2 = detail::require_field(it.value(), "energy", "fit_r2").get<double>();
      q.n_samples = detail::get_u64(it.value(), "n_samples", "fit_r2");
      m.fit_r2[it.key()] = q;
    }
  }
  if (j.count("degenerate_keys")) {
    for (const json& k : j.at("degenerate_keys")) m.degenerate_keys.push_back(k.get<std::string>());
  }
  return m;
}

inline LayerCostModel load_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model: ") + e.what(), e.byte);
  }
  return model_from_json(j);
}

// ---- profiling sample CSV ----

inline const std::vector<std::string>& sample_csv_header() {
  static const std::vector<std::string> h = {"op_type", "param_json", "context", "latency_ms",
                                             "energy_mj"};
  return h;
}

inline std::vector<ProfilingSample> samples_from_csv(std::string_view text) {
  CsvTable t = parse_csv(text, sample_csv_header());
  std::vector<ProfilingSample> out;
  out.reserve(t.rows.size());
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ProfilingSample s;
    s.op_type = op_type_from_string(row[0]);
    s.op_name = (s.op_type == OpType::other) ? row[0] : op_type_canonical(s.op_type);
    json pj;
    try {
      pj = json::parse(row[1]);
    } catch (const json::parse_error& e) {
      throw ParseError("sample row " + std::to_string(r + 1) + ": bad param_json: " + e.what());
    }
    s.params = params_from_json(s.op_type, pj, "sample row " + std::to_string(r + 1));
    s.context = parse_context(row[2]);
    s.latency_ms = csv_double(row, 3, r + 1);
    s.energy_mj = csv_double(row, 4, r + 1);
    if (!(s.latency_ms >= 0) || !(s.energy_mj >= 0) || !std::isfinite(s.latency_ms) ||
        !std::isfinite(s.energy_mj))
      throw ParseError("sample row " + std::to_string(r + 1) +
                       ": latency/energy must be finite and non-negative");
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string samples_to_csv(const std::vector<ProfilingSample>& samples) {
  CsvTable t;
  t.header = sample_csv_header();
  for (const ProfilingSample& s : samples) {
    LayerNode probe{"sample", s.op_type, s.op_name, s.params, 0};
    t.rows.push_back({s.op_name, params_to_json(probe).dump(), s.context.str(),
                      format_double(s.latency_ms), format_double(s.energy_mj)});
  }
  return emit_csv(t);
}

}  // namespace coinf
