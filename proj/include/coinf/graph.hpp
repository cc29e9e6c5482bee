#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coinf/error.hpp"
#include "coinf/util.hpp"

namespace coinf {

using json = nlohmann::json;

enum class OpType { convolution, fully_connected, pooling, activation, other };

inline const char* op_type_canonical(OpType t) {
  switch (t) {
    case OpType::convolution: return "Convolution";
    case OpType::fully_connected: return "FullyConnected";
    case OpType::pooling: return "Pooling";
    case OpType::activation: return "Activation";
    case OpType::other: return "Other";
  }
  return "Other";
}

// Exact canonical names map to modeled types; any other string is an
// opaque pass-through layer (Placeholder, Reshape, Concat, ...).
inline OpType op_type_from_string(const std::string& s) {
  if (s == "Convolution") return OpType::convolution;
  if (s == "FullyConnected") return OpType::fully_connected;
  if (s == "Pooling") return OpType::pooling;
  if (s == "Activation") return OpType::activation;
  return OpType::other;
}

struct ConvPoolParams {
  uint64_t batch = 1;
  uint64_t input_width = 0;
  uint64_t input_height = 0;
  uint64_t channel = 0;
  uint64_t kernel_number = 0;
  uint64_t kernel_size = 0;
  uint64_t stride = 1;
  bool operator==(const ConvPoolParams&) const = default;
};

struct FcParams {
  uint64_t a_width = 0;
  uint64_t a_height = 0;
  uint64_t b_width = 0;
  uint64_t b_height = 0;
  bool operator==(const FcParams&) const = default;
};

struct ActivationParams {
  std::string fn_kind;
  uint64_t input_size = 0;
  bool operator==(const ActivationParams&) const = default;
};

struct OtherParams {
  std::map<std::string, std::string> attrs;
  bool operator==(const OtherParams&) const = default;
};

using LayerParams = std::variant<ConvPoolParams, FcParams, ActivationParams, OtherParams>;

struct LayerNode {
  std::string id;
  OpType op_type = OpType::other;
  std::string op_name;  // canonical name, or the raw string for unmodeled ops
  LayerParams params = OtherParams{};
  uint64_t output_bytes = 0;
  bool operator==(const LayerNode&) const = default;
};

struct Edge {
  std::string src;
  std::string dst;
  uint64_t bytes = 0;
  bool operator==(const Edge&) const = default;
};

namespace detail {

inline const json& require_field(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(ctx + ": missing field '" + key + "'");
  return *it;
}

inline std::string get_string(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (!v.is_string()) throw ParseError(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline uint64_t get_u64(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer() && v.get<int64_t>() >= 0)
    return static_cast<uint64_t>(v.get<int64_t>());
  throw ParseError(ctx + ": field '" + key + "' must be a non-negative integer");
}

}  // namespace detail

// A validated DAG with a unique source and sink. Construction goes through
// make_graph/parse_graph, which reject anything malformed, so downstream code
// can rely on acyclicity, connectivity and a cached topological order.
class ModelGraph {
 public:
  ModelGraph() = default;

  const std::vector<LayerNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& source_id() const { return source_; }
  const std::string& sink_id() const { return sink_; }
  uint64_t result_return_bytes() const { return result_return_bytes_; }

  bool has_node(const std::string& id) const { return index_.count(id) != 0; }

  size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownKeyError("no node with id '" + id + "'");
    return it->second;
  }

  const LayerNode& node(const std::string& id) const { return nodes_[index_of(id)]; }

  const std::vector<size_t>& out_edge_indices(const std::string& id) const {
    return out_edges_[index_of(id)];
  }
  const std::vector<size_t>& in_edge_indices(const std::string& id) const {
    return in_edges_[index_of(id)];
  }

  // node ids in topological order, ties broken by id
  const std::vector<std::string>& topo() const { return topo_; }

  size_t topo_pos(const std::string& id) const {
    return topo_pos_[index_of(id)];
  }

  bool operator==(const ModelGraph& o) const {
    return nodes_ == o.nodes_ && edges_ == o.edges_ && source_ == o.source_ &&
           sink_ == o.sink_ && result_return_bytes_ == o.result_return_bytes_;
  }

  friend ModelGraph make_graph(std::vector<LayerNode> nodes, std::vector<Edge> edges,
                               std::string source, std::string sink,
                               std::optional<uint64_t> result_return_bytes);

 private:
  std::vector<LayerNode> nodes_;  // sorted by id
  std::vector<Edge> edges_;       // sorted by (src, dst)
  std::string source_;
  std::string sink_;
  uint64_t result_return_bytes_ = 0;
  std::map<std::string, size_t> index_;
  std::vector<std::vector<size_t>> out_edges_;
  std::vector<std::vector<size_t>> in_edges_;
  std::vector<std::string> topo_;
  std::vector<size_t> topo_pos_;  // by node index
};

inline void validate_params(const LayerNode& n) {
  const std::string ctx = "node '" + n.id + "'";
  switch (n.op_type) {
    case OpType::convolution:
    case OpType::pooling: {
      const auto& p = std::get<ConvPoolParams>(n.params);
      static const uint64_t allowed[] = {1, 3, 5, 7, 11};
      if (std::find(std::begin(allowed), std::end(allowed), p.kernel_size) == std::end(allowed))
        throw ValidationError(ctx + ": kernel_size " + std::to_string(p.kernel_size) +
                              " not in {1,3,5,7,11}");
      if (p.stride < 1) throw ValidationError(ctx + ": stride must be >= 1");
      if (p.batch < 1 || p.input_width < 1 || p.input_height < 1 || p.channel < 1 ||
          p.kernel_number < 1)
        throw ValidationError(ctx + ": conv/pool dimensions must be positive");
      break;
    }
    case OpType::fully_connected: {
      const auto& p = std::get<FcParams>(n.params);
      if (p.a_width < 1 || p.a_height < 1 || p.b_width < 1 || p.b_height < 1)
        throw ValidationError(ctx + ": fc dimensions must be positive");
      break;
    }
    case OpType::activation: {
      const auto& p = std::get<ActivationParams>(n.params);
      if (p.fn_kind.empty()) throw ValidationError(ctx + ": activation fn_kind must be non-empty");
      if (p.input_size < 1) throw ValidationError(ctx + ": activation input_size must be positive");
      break;
    }
    case OpType::other:
      if (n.op_name.empty()) throw ValidationError(ctx + ": op_type must be non-empty");
      break;
  }
}

// Validates and freezes a graph: sorts nodes/edges into canonical order,
// builds adjacency, checks DAG-ness and that every node lies on a
// source -> sink path, and caches the deterministic topological order.
inline ModelGraph make_graph(std::vector<LayerNode> nodes, std::vector<Edge> edges,
                             std::string source, std::string sink,
                             std::optional<uint64_t> result_return_bytes = std::nullopt) {
  ModelGraph g;
  std::sort(nodes.begin(), nodes.end(),
            [](const LayerNode& a, const LayerNode& b) { return a.id < b.id; });
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  g.source_ = std::move(source);
  g.sink_ = std::move(sink);

  for (size_t i = 0; i < g.nodes_.size(); ++i) {
    const auto& n = g.nodes_[i];
    if (n.id.empty()) throw ValidationError("node id must be non-empty");
    if (!g.index_.emplace(n.id, i).second)
      throw DuplicateIdError("duplicate node id '" + n.id + "'");
    validate_params(n);
  }

  if (!g.index_.count(g.source_))
    throw MissingEndpointError("source '" + g.source_ + "' is not a node");
  if (!g.index_.count(g.sink_))
    throw MissingEndpointError("sink '" + g.sink_ + "' is not a node");
  if (g.source_ == g.sink_) throw ValidationError("source and sink must differ");

  g.out_edges_.assign(g.nodes_.size(), {});
  g.in_edges_.assign(g.nodes_.size(), {});
  std::set<std::pair<std::string, std::string>> seen;
  for (size_t e = 0; e < g.edges_.size(); ++e) {
    const Edge& ed = g.edges_[e];
    auto si = g.index_.find(ed.src);
    auto di = g.index_.find(ed.dst);
    if (si == g.index_.end())
      throw DanglingEdgeError("edge references unknown node '" + ed.src + "'");
    if (di == g.index_.end())
      throw DanglingEdgeError("edge references unknown node '" + ed.dst + "'");
    if (ed.src == ed.dst) throw CycleError("self edge on node '" + ed.src + "'");
    if (!seen.emplace(ed.src, ed.dst).second)
      throw ValidationError("duplicate edge " + ed.src + " -> " + ed.dst);
    g.out_edges_[si->second].push_back(e);
    g.in_edges_[di->second].push_back(e);
  }

  if (!g.in_edges_[g.index_.at(g.source_)].empty())
    throw ValidationError("source '" + g.source_ + "' must have no incoming edges");
  if (!g.out_edges_[g.index_.at(g.sink_)].empty())
    throw ValidationError("sink '" + g.sink_ + "' must have no outgoing edges");

  // Kahn with a min-heap on id: deterministic topological order.
  std::vector<size_t> indeg(g.nodes_.size());
  for (size_t i = 0; i < g.nodes_.size(); ++i) indeg[i] = g.in_edges_[i].size();
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (size_t i = 0; i < g.nodes_.size(); ++i)
    if (indeg[i] == 0) ready.push(g.nodes_[i].id);
  g.topo_pos_.assign(g.nodes_.size(), 0);
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    size_t i = g.index_.at(id);
    g.topo_pos_[i] = g.topo_.size();
    g.topo_.push_back(id);
    for (size_t e : g.out_edges_[i]) {
      size_t d = g.index_.at(g.edges_[e].dst);
      if (--indeg[d] == 0) ready.push(g.nodes_[d].id);
    }
  }
  if (g.topo_.size() != g.nodes_.size()) throw CycleError("cycle detected");

  // every node must sit on some source -> sink path
  std::vector<char> fwd(g.nodes_.size(), 0), bwd(g.nodes_.size(), 0);
  std::vector<size_t> stack{g.index_.at(g.source_)};
  fwd[stack[0]] = 1;
  while (!stack.empty()) {
    size_t i = stack.back();
    stack.pop_back();
    for (size_t e : g.out_edges_[i]) {
      size_t d = g.index_.at(g.edges_[e].dst);
      if (!fwd[d]) {
        fwd[d] = 1;
        stack.push_back(d);
      }
    }
  }
  stack = {g.index_.at(g.sink_)};
  bwd[stack[0]] = 1;
  while (!stack.empty()) {
    size_t i = stack.back();
    stack.pop_back();
    for (size_t e : g.in_edges_[i]) {
      size_t s = g.index_.at(g.edges_[e].src);
      if (!bwd[s]) {
        bwd[s] = 1;
        stack.push_back(s);
      }
    }
  }
  for (size_t i = 0; i < g.nodes_.size(); ++i) {
    if (!fwd[i] || !bwd[i])
      throw ValidationError("node '" + g.nodes_[i].id + "' is not on any source->sink path");
  }

  g.result_return_bytes_ =
      result_return_bytes ? *result_return_bytes : g.node(g.sink_).output_bytes;
  return g;
}

inline json params_to_json(const LayerNode& n) {
  json p = json::object();
  switch (n.op_type) {
    case OpType::convolution:
    case OpType::pooling: {
      const auto& c = std::get<ConvPoolParams>(n.params);
      p["batch"] = c.batch;
      p["input_width"] = c.input_width;
      p["input_height"] = c.input_height;
      p["channel"] = c.channel;
      p["kernel_number"] = c.kernel_number;
      p["kernel_size"] = c.kernel_size;
      p["stride"] = c.stride;
      break;
    }
    case OpType::fully_connected: {
      const auto& f = std::get<FcParams>(n.params);
      p["a_width"] = f.a_width;
      p["a_height"] = f.a_height;
      p["b_width"] = f.b_width;
      p["b_height"] = f.b_height;
      break;
    }
    case OpType::activation: {
      const auto& a = std::get<ActivationParams>(n.params);
      p["fn_kind"] = a.fn_kind;
      p["input_size"] = a.input_size;
      break;
    }
    case OpType::other: {
      for (const auto& [k, v] : std::get<OtherParams>(n.params).attrs) p[k] = v;
      break;
    }
  }
  return p;
}

inline LayerParams params_from_json(OpType t, const json& p, const std::string& ctx) {
  if (!p.is_object()) throw ParseError(ctx + ": params must be an object");
  switch (t) {
    case OpType::convolution:
    case OpType::pooling: {
      ConvPoolParams c;
      c.batch = detail::get_u64(p, "batch", ctx);
      c.input_width = detail::get_u64(p, "input_width", ctx);
      c.input_height = detail::get_u64(p, "input_height", ctx);
      c.channel = detail::get_u64(p, "channel", ctx);
      c.kernel_number = detail::get_u64(p, "kernel_number", ctx);
      c.kernel_size = detail::get_u64(p, "kernel_size", ctx);
      c.stride = detail::get_u64(p, "stride", ctx);
      return c;
    }
    case OpType::fully_connected: {
      FcParams f;
      f.a_width = detail::get_u64(p, "a_width", ctx);
      f.a_height = detail::get_u64(p, "a_height", ctx);
      f.b_width = detail::get_u64(p, "b_width", ctx);
      f.b_height = detail::get_u64(p, "b_height", ctx);
      return f;
    }
    case OpType::activation: {
      ActivationParams a;
      a.fn_kind = detail::get_string(p, "fn_kind", ctx);
      a.input_size = detail::get_u64(p, "input_size", ctx);
      return a;
    }
    case OpType::other: {
      OtherParams o;
      for (auto it = p.begin(); it != p.end(); ++it) {
        const json& v = it.value();
        o.attrs[it.key()] = v.is_string() ? v.get<std::string>() : v.dump();
      }
      return o;
    }
  }
  return OtherParams{};
}

inline LayerNode node_from_json(const json& nj) {
  if (!nj.is_object()) throw ParseError("graph: each node must be an object");
  LayerNode n;
  n.id = detail::get_string(nj, "id", "node");
  const std::string ctx = "node '" + n.id + "'";
  std::string raw_type = detail::get_string(nj, "op_type", ctx);
  n.op_type = op_type_from_string(raw_type);
  n.op_name = (n.op_type == OpType::other) ? raw_type : op_type_canonical(n.op_type);
  n.output_bytes = detail::get_u64(nj, "output_bytes", ctx);
  auto pit = nj.find("params");
  if (pit != nj.end()) {
    n.params = params_from_json(n.op_type, *pit, ctx);
  } else if (n.op_type != OpType::other) {
    throw ParseError(ctx + ": missing field 'params'");
  }
  return n;
}

inline json node_to_json(const LayerNode& n) {
  json nj;
  nj["id"] = n.id;
  nj["op_type"] = n.op_name;
  nj["output_bytes"] = n.output_bytes;
  nj["params"] = params_to_json(n);
  return nj;
}

inline ModelGraph graph_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("graph: top level must be an object");
  const json& ver = detail::require_field(j, "schema_version", "graph");
  if (!ver.is_number_integer() || ver.get<int64_t>() != 1)
    throw ParseError("graph: unsupported schema_version " + ver.dump());

  const json& jn = detail::require_field(j, "nodes", "graph");
  const json& je = detail::require_field(j, "edges", "graph");
  if (!jn.is_array()) throw ParseError("graph: 'nodes' must be an array");
  if (!je.is_array()) throw ParseError("graph: 'edges' must be an array");

  std::vector<LayerNode> nodes;
  nodes.reserve(jn.size());
  for (const json& nj : jn) nodes.push_back(node_from_json(nj));

  std::vector<Edge> edges;
  edges.reserve(je.size());
  for (const json& ej : je) {
    if (!ej.is_object()) throw ParseError("graph: each edge must be an object");
    Edge e;
    e.src = detail::get_string(ej, "src", "edge");
    e.dst = detail::get_string(ej, "dst", "edge");
    e.bytes = detail::get_u64(ej, "bytes", "edge " + e.src + "->" + e.dst);
    edges.push_back(std::move(e));
  }

  std::string source = detail::get_string(j, "source", "graph");
  std::string sink = detail::get_string(j, "sink", "graph");
  std::optional<uint64_t> rrb;
  if (j.count("result_return_bytes")) rrb = detail::get_u64(j, "result_return_bytes", "graph");

  return make_graph(std::move(nodes), std::move(edges), std::move(source), std::move(sink), rrb);
}

inline ModelGraph parse_graph(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("graph: ") + e.what(), e.byte);
  }
  return graph_from_json(j);
}

inline json graph_to_json(const ModelGraph& g) {
  json j;
  j["schema_version"] = 1;
  j["source"] = g.source_id();
  j["sink"] = g.sink_id();
  j["result_return_bytes"] = g.result_return_bytes();
  json nodes = json::array();
  for (const LayerNode& n : g.nodes()) nodes.push_back(node_to_json(n));  // sorted by id
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const Edge& e : g.edges()) {  // already sorted by (src, dst)
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"bytes", e.bytes}});
  }
  j["edges"] = std::move(edges);
  return j;
}

inline std::string serialize_graph(const ModelGraph& g) {
  return graph_to_json(g).dump(2) + "\n";
}

inline std::vector<std::string> topo_order(const ModelGraph& g) { return g.topo(); }

}  // namespace coinf
