#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "coinf/costmodel.hpp"
#include "coinf/graph.hpp"

namespace coinf {

struct SimplifyConfig {
  size_t min_support = 2;
  size_t max_pattern_size = 8;
  bool operator==(const SimplifyConfig&) const = default;
};

// Drops pass-through nodes (anything unmodeled, except the source and sink
// anchors) and reconnects their predecessors to their successors. A bypass
// edge carries the removed node's output_bytes; parallel edges that fall
// together are merged by summing.
inline ModelGraph prune_low_compute(const ModelGraph& g) {
  std::map<std::string, std::map<std::string, uint64_t>> out, in;
  for (const Edge& e : g.edges()) {
    out[e.src][e.dst] += e.bytes;
    in[e.dst][e.src] += e.bytes;
  }
  for (const std::string& id : g.topo()) {
    const LayerNode& n = g.node(id);
    bool anchor = (id == g.source_id() || id == g.sink_id());
    if (n.op_type != OpType::other || anchor) continue;
    for (const auto& [src, src_bytes] : in[id]) {
      (void)src_bytes;
      out[src].erase(id);
      for (const auto& [dst, dst_bytes] : out[id]) {
        (void)dst_bytes;
        out[src][dst] += n.output_bytes;
        in[dst][src] += n.output_bytes;
      }
    }
    for (const auto& [dst, dst_bytes] : out[id]) {
      (void)dst_bytes;
      in[dst].erase(id);
    }
    out.erase(id);
    in.erase(id);
  }

  std::vector<LayerNode> nodes;
  for (const LayerNode& n : g.nodes()) {
    bool anchor = (n.id == g.source_id() || n.id == g.sink_id());
    if (n.op_type != OpType::other || anchor) nodes.push_back(n);
  }
  std::vector<Edge> edges;
  for (const auto& [src, dsts] : out)
    for (const auto& [dst, bytes] : dsts) edges.push_back({src, dst, bytes});
  return make_graph(std::move(nodes), std::move(edges), g.source_id(), g.sink_id(),
                    g.result_return_bytes());
}

struct Occurrence {
  std::vector<std::string> members;  // original node ids in graph-topo order
  bool operator==(const Occurrence&) const = default;
};

struct PatternSpec {
  std::string signature;
  size_t size = 0;
  size_t support = 0;                  // node-disjoint occurrences actually claimed
  std::vector<Occurrence> occurrences;
};

namespace detail {

struct MiningIndex {
  std::vector<size_t> cand;                    // node indices, topo order
  std::vector<std::vector<size_t>> neighbors;  // undirected, by cand position
  std::vector<size_t> cand_pos;                // node index -> cand position (or npos)
};

inline std::string subgraph_signature(const ModelGraph& g,
                                      const std::vector<std::string>& members) {
  std::string sig;
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < members.size(); ++i) {
    if (i) sig += '|';
    sig += featurize(g.node(members[i])).layer_key;
    pos[members[i]] = i;
  }
  std::vector<std::pair<size_t, size_t>> arcs;
  for (const std::string& m : members) {
    for (size_t e : g.out_edge_indices(m)) {
      const Edge& ed = g.edges()[e];
      auto it = pos.find(ed.dst);
      if (it != pos.end()) arcs.emplace_back(pos[m], it->second);
    }
  }
  std::sort(arcs.begin(), arcs.end());
  sig += ';';
  for (size_t i = 0; i < arcs.size(); ++i) {
    if (i) sig += ',';
    sig += std::to_string(arcs[i].first) + '>' + std::to_string(arcs[i].second);
  }
  return sig;
}

}  // namespace detail

// Enumerates connected repeated subgraphs (ESU over the undirected skeleton
// of the modeled nodes), buckets them by a canonical signature over
// (layer_key sequence, induced arcs), then claims node-disjoint occurrence
// sets in (size desc, support desc, signature asc) order.
inline std::vector<PatternSpec> mine_repeated_subgraphs(const ModelGraph& g,
                                                        const SimplifyConfig& cfg = {}) {
  std::vector<PatternSpec> result;
  if (cfg.max_pattern_size < 2 || cfg.min_support < 1) return result;

  const size_t npos = static_cast<size_t>(-1);
  const auto& topo = g.topo();
  detail::MiningIndex mi;
  mi.cand_pos.assign(g.nodes().size(), npos);
  for (const std::string& id : topo) {
    const LayerNode& n = g.node(id);
    if (n.op_type == OpType::other || id == g.source_id() || id == g.sink_id()) continue;
    mi.cand_pos[g.index_of(id)] = mi.cand.size();
    mi.cand.push_back(g.index_of(id));
  }
  mi.neighbors.assign(mi.cand.size(), {});
  for (const Edge& e : g.edges()) {
    size_t a = mi.cand_pos[g.index_of(e.src)];
    size_t b = mi.cand_pos[g.index_of(e.dst)];
    if (a == npos || b == npos) continue;
    mi.neighbors[a].push_back(b);
    mi.neighbors[b].push_back(a);
  }
  for (auto& ns : mi.neighbors) {
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  }

  // signature -> occurrences as cand-position vectors (ascending)
  std::map<std::string, std::vector<std::vector<size_t>>> buckets;
  std::vector<size_t> sub;
  std::vector<std::string> member_ids;
  auto record = [&](const std::vector<size_t>& s) {
    std::vector<size_t> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    member_ids.clear();
    for (size_t cp : sorted) member_ids.push_back(g.nodes()[mi.cand[cp]].id);
    buckets[detail::subgraph_signature(g, member_ids)].push_back(std::move(sorted));
  };

  // ESU: grow subgraphs only with candidates ranked above the root, adding a
  // node's exclusive neighborhood to the extension set, so each connected
  // subgraph is produced exactly once.
  std::vector<char> in_sub(mi.cand.size(), 0);
  auto extend = [&](auto&& self, size_t root, std::vector<size_t> ext) -> void {
    if (sub.size() >= 2) record(sub);
    if (sub.size() == cfg.max_pattern_size) return;
    while (!ext.empty()) {
      size_t w = ext.front();
      ext.erase(ext.begin());
      std::vector<size_t> next_ext = ext;
      for (size_t u : mi.neighbors[w]) {
        if (u <= root || in_sub[u]) continue;
        // skip anything already adjacent to the current subgraph: those
        // candidates are in some extension set on this path already
        bool neighbor_of_sub = false;
        for (size_t s : sub) {
          if (std::binary_search(mi.neighbors[s].begin(), mi.neighbors[s].end(), u)) {
            neighbor_of_sub = true;
            break;
          }
        }
        if (!neighbor_of_sub) next_ext.push_back(u);
      }
      std::sort(next_ext.begin(), next_ext.end());
      sub.push_back(w);
      in_sub[w] = 1;
      self(self, root, std::move(next_ext));
      in_sub[w] = 0;
      sub.pop_back();
    }
  };

  for (size_t v = 0; v < mi.cand.size(); ++v) {
    sub = {v};
    in_sub[v] = 1;
    std::vector<size_t> ext;
    for (size_t u : mi.neighbors[v])
      if (u > v) ext.push_back(u);
    extend(extend, v, std::move(ext));
    in_sub[v] = 0;
  }

  struct Candidate {
    std::string signature;
    size_t size;
    size_t prelim_support;
    const std::vector<std::vector<size_t>>* occs;
  };
  std::vector<Candidate> cands;
  for (auto& [sig, occs] : buckets) {
    if (occs.size() < cfg.min_support) continue;
    std::sort(occs.begin(), occs.end());
    std::vector<char> used(mi.cand.size(), 0);
    size_t prelim = 0;
    for (const auto& occ : occs) {
      bool free = std::none_of(occ.begin(), occ.end(), [&](size_t p) { return used[p]; });
      if (!free) continue;
      for (size_t p : occ) used[p] = 1;
      ++prelim;
    }
    if (prelim < cfg.min_support) continue;
    cands.push_back({sig, occs.front().size(), prelim, &occs});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.size != b.size) return a.size > b.size;
    if (a.prelim_support != b.prelim_support) return a.prelim_support > b.prelim_support;
    return a.signature < b.signature;
  });

  std::vector<char> claimed(mi.cand.size(), 0);
  for (const Candidate& c : cands) {
    std::vector<const std::vector<size_t>*> selected;
    std::vector<char> tentative(mi.cand.size(), 0);
    for (const auto& occ : *c.occs) {
      bool free = std::none_of(occ.begin(), occ.end(),
                               [&](size_t p) { return claimed[p] || tentative[p]; });
      if (!free) continue;
      for (size_t p : occ) tentative[p] = 1;
      selected.push_back(&occ);
    }
    if (selected.size() < cfg.min_support) continue;
    PatternSpec ps;
    ps.signature = c.signature;
    ps.size = c.size;
    ps.support = selected.size();
    for (const auto* occ : selected) {
      Occurrence o;
      for (size_t p : *occ) {
        o.members.push_back(g.nodes()[mi.cand[p]].id);
        claimed[p] = 1;
      }
      // cand positions are topo-ordered already
      ps.occurrences.push_back(std::move(o));
    }
    result.push_back(std::move(ps));
  }
  return result;
}

struct SuperNode {
  std::string id;
  std::vector<LayerNode> members;  // graph-topo order
  uint64_t boundary_in_bytes = 0;
  uint64_t boundary_out_bytes = 0;
  bool grouped = false;  // formed from a mined pattern
};

class SimplifiedGraph {
 public:
  SimplifiedGraph() = default;

  const std::vector<SuperNode>& nodes() const { return nodes_; }  // topo order
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& source_id() const { return source_; }
  const std::string& sink_id() const { return sink_; }
  const std::string& origin_hash() const { return origin_hash_; }
  uint64_t result_return_bytes() const { return result_return_bytes_; }

  size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownKeyError("no supernode with id '" + id + "'");
    return it->second;
  }
  const SuperNode& node(const std::string& id) const { return nodes_[index_of(id)]; }
  bool has_node(const std::string& id) const { return index_.count(id) != 0; }

  const std::vector<size_t>& out_edge_indices(const std::string& id) const {
    return out_edges_[index_of(id)];
  }
  const std::vector<size_t>& in_edge_indices(const std::string& id) const {
    return in_edges_[index_of(id)];
  }

  size_t member_count() const {
    size_t n = 0;
    for (const auto& sn : nodes_) n += sn.members.size();
    return n;
  }

  friend SimplifiedGraph build_simplified(std::vector<SuperNode> nodes, std::vector<Edge> edges,
                                          std::string source, std::string sink,
                                          std::string origin_hash, uint64_t result_return_bytes);

 private:
  std::vector<SuperNode> nodes_;
  std::vector<Edge> edges_;  // sorted by (src, dst)
  std::string source_, sink_, origin_hash_;
  uint64_t result_return_bytes_ = 0;
  std::map<std::string, size_t> index_;
  std::vector<std::vector<size_t>> out_edges_, in_edges_;
};

// Same validation shape as make_graph, plus boundary byte bookkeeping.
// Nodes end up stored in deterministic topological order.
inline SimplifiedGraph build_simplified(std::vector<SuperNode> nodes, std::vector<Edge> edges,
                                        std::string source, std::string sink,
                                        std::string origin_hash, uint64_t result_return_bytes) {
  SimplifiedGraph sg;
  sg.source_ = std::move(source);
  sg.sink_ = std::move(sink);
  sg.origin_hash_ = std::move(origin_hash);
  sg.result_return_bytes_ = result_return_bytes;

  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
  });
  std::map<std::string, size_t> tmp_index;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id.empty()) throw ValidationError("supernode id must be non-empty");
    if (!tmp_index.emplace(nodes[i].id, i).second)
      throw DuplicateIdError("duplicate supernode id '" + nodes[i].id + "'");
    if (nodes[i].members.empty())
      throw ValidationError("supernode '" + nodes[i].id + "' has no members");
  }
  if (!tmp_index.count(sg.source_))
    throw MissingEndpointError("source '" + sg.source_ + "' is not a supernode");
  if (!tmp_index.count(sg.sink_))
    throw MissingEndpointError("sink '" + sg.sink_ + "' is not a supernode");

  std::map<std::string, std::vector<std::string>> out_ids;
  std::map<std::string, size_t> indeg;
  for (const auto& n : nodes) indeg[n.id] = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const Edge& e : edges) {
    if (!tmp_index.count(e.src) || !tmp_index.count(e.dst))
      throw DanglingEdgeError("edge references unknown supernode " + e.src + "->" + e.dst);
    if (e.src == e.dst) throw CycleError("self edge on supernode '" + e.src + "'");
    if (!seen.emplace(e.src, e.dst).second)
      throw ValidationError("duplicate edge " + e.src + " -> " + e.dst);
    out_ids[e.src].push_back(e.dst);
    ++indeg[e.dst];
  }

  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, d] : indeg)
    if (d == 0) ready.push(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const std::string& d : out_ids[id])
      if (--indeg[d] == 0) ready.push(d);
  }
  if (order.size() != nodes.size()) throw CycleError("cycle detected in simplified graph");

  for (const std::string& id : order) {
    sg.index_[id] = sg.nodes_.size();
    sg.nodes_.push_back(std::move(nodes[tmp_index[id]]));
  }
  sg.edges_ = std::move(edges);
  sg.out_edges_.assign(sg.nodes_.size(), {});
  sg.in_edges_.assign(sg.nodes_.size(), {});
  for (size_t e = 0; e < sg.edges_.size(); ++e) {
    sg.out_edges_[sg.index_.at(sg.edges_[e].src)].push_back(e);
    sg.in_edges_[sg.index_.at(sg.edges_[e].dst)].push_back(e);
  }
  for (auto& sn : sg.nodes_) {
    sn.boundary_in_bytes = 0;
    sn.boundary_out_bytes = 0;
  }
  for (const Edge& e : sg.edges_) {
    sg.nodes_[sg.index_.at(e.src)].boundary_out_bytes += e.bytes;
    sg.nodes_[sg.index_.at(e.dst)].boundary_in_bytes += e.bytes;
  }
  return sg;
}

// Contracts each claimed occurrence into one SuperNode; every unclaimed node
// becomes a singleton. An occurrence whose contraction would create a cycle
// in the quotient graph is rejected and its nodes fall back to singletons
// (the rejected occurrences are reported through `rejected` when given).
inline SimplifiedGraph collapse(const ModelGraph& g, const std::vector<PatternSpec>& patterns,
                                std::vector<Occurrence>* rejected = nullptr) {
  struct Group {
    std::vector<std::string> members;
    size_t min_topo = 0;
  };
  std::vector<Group> groups;
  std::map<std::string, size_t> group_of;  // node id -> group index
  for (const PatternSpec& p : patterns) {
    for (const Occurrence& occ : p.occurrences) {
      Group grp;
      grp.min_topo = g.nodes().size();
      for (const std::string& m : occ.members) {
        if (!g.has_node(m))
          throw ValidationError("occurrence references unknown node '" + m + "'");
        if (m == g.source_id() || m == g.sink_id())
          throw ValidationError("occurrence may not contain the source or sink");
        if (!group_of.emplace(m, groups.size()).second)
          throw ValidationError("occurrences overlap on node '" + m + "'");
        grp.min_topo = std::min(grp.min_topo, g.topo_pos(m));
      }
      grp.members = occ.members;
      groups.push_back(std::move(grp));
    }
  }

  std::vector<char> active(groups.size(), 1);
  while (true) {
    // quotient key per node: g<idx> for active groups, node id otherwise
    auto quid = [&](const std::string& id) -> std::string {
      auto it = group_of.find(id);
      if (it != group_of.end() && active[it->second]) return "g" + std::to_string(it->second);
      return "n" + id;
    };
    std::map<std::string, std::vector<std::string>> adj;
    std::set<std::string> qnodes;
    for (const auto& n : g.nodes()) qnodes.insert(quid(n.id));
    for (const Edge& e : g.edges()) {
      std::string a = quid(e.src), b = quid(e.dst);
      if (a != b) adj[a].push_back(b);
    }
    // Kosaraju: order by finish time, then assign components on the reverse
    std::map<std::string, std::vector<std::string>> radj;
    for (const auto& [a, bs] : adj)
      for (const auto& b : bs) radj[b].push_back(a);
    std::vector<std::string> finish;
    std::set<std::string> visited;
    for (const std::string& start : qnodes) {
      if (visited.count(start)) continue;
      // iterative DFS with explicit post-order
      std::vector<std::pair<std::string, size_t>> stack{{start, 0}};
      visited.insert(start);
      while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        auto it = adj.find(node);
        if (it != adj.end() && idx < it->second.size()) {
          const std::string& next = it->second[idx++];
          if (!visited.count(next)) {
            visited.insert(next);
            stack.emplace_back(next, 0);
          }
        } else {
          finish.push_back(node);
          stack.pop_back();
        }
      }
    }
    std::map<std::string, size_t> comp;
    size_t ncomp = 0;
    for (auto it = finish.rbegin(); it != finish.rend(); ++it) {
      if (comp.count(*it)) continue;
      std::vector<std::string> stack{*it};
      comp[*it] = ncomp;
      while (!stack.empty()) {
        std::string node = stack.back();
        stack.pop_back();
        auto rit = radj.find(node);
        if (rit == radj.end()) continue;
        for (const std::string& prev : rit->second) {
          if (!comp.count(prev)) {
            comp[prev] = ncomp;
            stack.push_back(prev);
          }
        }
      }
      ++ncomp;
    }
    std::vector<size_t> comp_size(ncomp, 0);
    for (const auto& [id, c] : comp) {
      (void)id;
      ++comp_size[c];
    }
    // reject the group with the smallest min-topo index among those caught
    // in a multi-node component
    size_t worst = groups.size();
    for (size_t gi = 0; gi < groups.size(); ++gi) {
      if (!active[gi]) continue;
      if (comp_size[comp.at("g" + std::to_string(gi))] < 2) continue;
      if (worst == groups.size() || groups[gi].min_topo < groups[worst].min_topo) worst = gi;
    }
    if (worst == groups.size()) break;
    active[worst] = 0;
    if (rejected) rejected->push_back({groups[worst].members});
  }

  // materialize supernodes
  std::map<std::string, std::string> super_of;  // node id -> supernode id
  std::set<std::string> taken;
  for (const auto& n : g.nodes())
    if (!group_of.count(n.id) || !active[group_of.at(n.id)]) taken.insert(n.id);
  std::vector<SuperNode> supers;
  std::map<std::string, std::vector<LayerNode>> singleton;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    if (!active[gi]) continue;
    std::vector<std::string> ids = groups[gi].members;
    std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
      return g.topo_pos(a) < g.topo_pos(b);
    });
    std::string sid;
    for (const std::string& m : ids) {
      if (!sid.empty()) sid += '+';
      sid += m;
    }
    while (taken.count(sid)) sid += '#';
    taken.insert(sid);
    SuperNode sn;
    sn.id = sid;
    sn.grouped = true;
    for (const std::string& m : ids) {
      sn.members.push_back(g.node(m));
      super_of[m] = sid;
    }
    supers.push_back(std::move(sn));
  }
  for (const auto& n : g.nodes()) {
    if (super_of.count(n.id)) continue;
    SuperNode sn;
    sn.id = n.id;
    sn.members.push_back(n);
    super_of[n.id] = n.id;
    supers.push_back(std::move(sn));
  }

  std::map<std::pair<std::string, std::string>, uint64_t> qedges;
  for (const Edge& e : g.edges()) {
    std::string a = super_of.at(e.src), b = super_of.at(e.dst);
    if (a != b) qedges[{a, b}] += e.bytes;
  }
  std::vector<Edge> edges;
  for (const auto& [key, bytes] : qedges) edges.push_back({key.first, key.second, bytes});

  return build_simplified(std::move(supers), std::move(edges), super_of.at(g.source_id()),
                          super_of.at(g.sink_id()), to_hex(fnv1a64(serialize_graph(g))),
                          g.result_return_bytes());
}

// ---- serialization ----

inline json simplified_to_json(const SimplifiedGraph& sg) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "simplified_graph";
  j["origin_hash"] = sg.origin_hash();
  j["source"] = sg.source_id();
  j["sink"] = sg.sink_id();
  j["result_return_bytes"] = sg.result_return_bytes();
  std::vector<const SuperNode*> sorted;
  for (const auto& sn : sg.nodes()) sorted.push_back(&sn);
  std::sort(sorted.begin(), sorted.end(),
            [](const SuperNode* a, const SuperNode* b) { return a->id < b->id; });
  json nodes = json::array();
  for (const SuperNode* sn : sorted) {
    json nj;
    nj["id"] = sn->id;
    nj["grouped"] = sn->grouped;
    nj["boundary_in_bytes"] = sn->boundary_in_bytes;
    nj["boundary_out_bytes"] = sn->boundary_out_bytes;
    json members = json::array();
    for (const LayerNode& m : sn->members) members.push_back(node_to_json(m));
    nj["members"] = std::move(members);
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const Edge& e : sg.edges())
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"bytes", e.bytes}});
  j["edges"] = std::move(edges);
  return j;
}

inline std::string serialize_simplified(const SimplifiedGraph& sg) {
  return simplified_to_json(sg).dump(2) + "\n";
}

inline SimplifiedGraph simplified_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("simplified graph: top level must be an object");
  const json& ver = detail::require_field(j, "schema_version", "simplified graph");
  if (!ver.is_number_integer() || ver.get<int64_t>() != 1)
    throw ParseError("simplified graph: unsupported schema_version " + ver.dump());
  const json& jn = detail::require_field(j, "nodes", "simplified graph");
  if (!jn.is_array()) throw ParseError("simplified graph: 'nodes' must be an array");
  std::vector<SuperNode> nodes;
  for (const json& nj : jn) {
    SuperNode sn;
    sn.id = detail::get_string(nj, "id", "supernode");
    sn.grouped = detail::require_field(nj, "grouped", "supernode '" + sn.id + "'").get<bool>();
    const json& members = detail::require_field(nj, "members", "supernode '" + sn.id + "'");
    if (!members.is_array())
      throw ParseError("supernode '" + sn.id + "': members must be an array");
    for (const json& mj : members) sn.members.push_back(node_from_json(mj));
    nodes.push_back(std::move(sn));
  }
  std::vector<Edge> edges;
  const json& je = detail::require_field(j, "edges", "simplified graph");
  if (!je.is_array()) throw ParseError("simplified graph: 'edges' must be an array");
  for (const json& ej : je) {
    Edge e;
    e.src = detail::get_string(ej, "src", "edge");
    e.dst = detail::get_string(ej, "dst", "edge");
    e.bytes = detail::get_u64(ej, "bytes", "edge " + e.src + "->" + e.dst);
    edges.push_back(std::move(e));
  }
  return build_simplified(std::move(nodes), std::move(edges),
                          detail::get_string(j, "source", "simplified graph"),
                          detail::get_string(j, "sink", "simplified graph"),
                          detail::get_string(j, "origin_hash", "simplified graph"),
                          detail::get_u64(j, "result_return_bytes", "simplified graph"));
}

inline SimplifiedGraph parse_simplified(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("simplified graph: ") + e.what(), e.byte);
  }
  return simplified_from_json(j);
}

// ---- caching ----

inline std::string simplify_cache_key(const ModelGraph& g, const SimplifyConfig& cfg) {
  uint64_t h = fnv1a64(serialize_graph(g));
  h = mix64(h, cfg.min_support);
  h = mix64(h, cfg.max_pattern_size);
  return to_hex(h);
}

// Memoizes simplification results by content hash. Reads take the shared
// lock; an optional directory adds a persistent layer (best effort: disk
// problems degrade to recomputation, they never fail the caller).
class SimplifyCache {
 public:
  struct Stats {
    uint64_t hits = 0;
    uint64_t misses = 0;
    uint64_t disk_hits = 0;
  };

  void set_directory(std::string dir) {
    std::unique_lock lock(mu_);
    dir_ = std::move(dir);
  }

  Stats stats() const {
    return {hits_.load(), misses_.load(), disk_hits_.load()};
  }

  std::shared_ptr<const SimplifiedGraph> lookup(const std::string& key) {
    {
      std::shared_lock lock(mu_);
      auto it = mem_.find(key);
      if (it != mem_.end()) {
        ++hits_;
        return it->second;
      }
    }
    std::string dir;
    {
      std::shared_lock lock(mu_);
      dir = dir_;
    }
    if (!dir.empty()) {
      if (auto text = try_read_file(dir + "/" + key + ".json")) {
        try {
          auto sg = std::make_shared<SimplifiedGraph>(parse_simplified(*text));
          std::unique_lock lock(mu_);
          mem_[key] = sg;
          ++hits_;
          ++disk_hits_;
          return sg;
        } catch (const Error&) {
          // corrupt cache entry: fall through and recompute
        }
      }
    }
    ++misses_;
    return nullptr;
  }

  void store(const std::string& key, std::shared_ptr<const SimplifiedGraph> sg) {
    std::string dir;
    {
      std::unique_lock lock(mu_);
      mem_[key] = sg;
      dir = dir_;
    }
    if (!dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      try_write_file(dir + "/" + key + ".json", serialize_simplified(*sg));
    }
  }

  void clear() {
    std::unique_lock lock(mu_);
    mem_.clear();
    hits_ = 0;
    misses_ = 0;
    disk_hits_ = 0;
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const SimplifiedGraph>> mem_;
  std::string dir_;
  std::atomic<uint64_t> hits_{0}, misses_{0}, disk_hits_{0};
};

inline SimplifyCache& default_simplify_cache() {
  static SimplifyCache cache;
  return cache;
}

// prune -> mine -> collapse, memoized on (graph content, config).
inline SimplifiedGraph simplify(const ModelGraph& g, const SimplifyConfig& cfg = {},
                                SimplifyCache* cache = &default_simplify_cache()) {
  std::string key;
  if (cache) {
    key = simplify_cache_key(g, cfg);
    if (auto hit = cache->lookup(key)) return *hit;
  }
  ModelGraph pruned = prune_low_compute(g);
  std::vector<PatternSpec> patterns = mine_repeated_subgraphs(pruned, cfg);
  SimplifiedGraph sg = collapse(pruned, patterns);
  if (cache) cache->store(key, std::make_shared<SimplifiedGraph>(sg));
  return sg;
}

}  // namespace coinf
