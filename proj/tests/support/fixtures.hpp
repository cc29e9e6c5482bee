#pragma once

// Shared graph builders and generators used by the unit suites and the
// acceptance runner.

#include <string>
#include <vector>

#include "coinf/graph.hpp"
#include "coinf/util.hpp"

namespace fixtures {

using coinf::ActivationParams;
using coinf::ConvPoolParams;
using coinf::Edge;
using coinf::FcParams;
using coinf::LayerNode;
using coinf::ModelGraph;
using coinf::OpType;
using coinf::OtherParams;

inline LayerNode conv_node(std::string id, uint64_t k, uint64_t out_bytes,
                           ConvPoolParams dims = {1, 56, 56, 64, 64, 0, 1}) {
  dims.kernel_size = k;
  return LayerNode{std::move(id), OpType::convolution, "Convolution", dims, out_bytes};
}

inline LayerNode pool_node(std::string id, uint64_t k, uint64_t out_bytes,
                           ConvPoolParams dims = {1, 56, 56, 64, 64, 0, 2}) {
  dims.kernel_size = k;
  return LayerNode{std::move(id), OpType::pooling, "Pooling", dims, out_bytes};
}

inline LayerNode fc_node(std::string id, FcParams p, uint64_t out_bytes) {
  return LayerNode{std::move(id), OpType::fully_connected, "FullyConnected", p, out_bytes};
}

inline LayerNode act_node(std::string id, std::string fn, uint64_t input_size,
                          uint64_t out_bytes) {
  return LayerNode{std::move(id), OpType::activation, "Activation",
                   ActivationParams{std::move(fn), input_size}, out_bytes};
}

inline LayerNode other_node(std::string id, std::string name, uint64_t out_bytes) {
  return LayerNode{std::move(id), OpType::other, std::move(name), OtherParams{}, out_bytes};
}

// Chain the given nodes in order; each edge carries the producer's output_bytes.
inline ModelGraph chain_graph(std::vector<LayerNode> nodes,
                              std::optional<uint64_t> rrb = std::nullopt) {
  std::vector<Edge> edges;
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    edges.push_back({nodes[i].id, nodes[i + 1].id, nodes[i].output_bytes});
  }
  std::string source = nodes.front().id;
  std::string sink = nodes.back().id;
  return coinf::make_graph(std::move(nodes), std::move(edges), source, sink, rrb);
}

// input -> {a, b} -> merge -> output
inline ModelGraph diamond_graph() {
  std::vector<LayerNode> nodes;
  nodes.push_back(other_node("input", "Placeholder", 1000));
  nodes.push_back(conv_node("a", 3, 2000));
  nodes.push_back(conv_node("b", 5, 3000));
  nodes.push_back(act_node("merge", "add", 500, 500));
  nodes.push_back(other_node("output", "Identity", 400));
  std::vector<Edge> edges = {
      {"input", "a", 1000}, {"input", "b", 1000}, {"a", "merge", 2000},
      {"b", "merge", 3000}, {"merge", "output", 500},
  };
  return coinf::make_graph(std::move(nodes), std::move(edges), "input", "output");
}

// Sixteen identical 8-node branchy cells in a chain, then seventeen compute
// nodes with pairwise-distinct layer keys, between Other anchors. With the
// default simplify config the cells collapse one-to-one and nothing else
// groups, giving exactly 35 simplified nodes.
inline ModelGraph inception_like_graph() {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  nodes.push_back(other_node("input", "Placeholder", 150528));

  std::string prev = "input";
  uint64_t prev_bytes = 150528;
  char buf[8];
  for (int cell = 0; cell < 16; ++cell) {
    std::snprintf(buf, sizeof buf, "m%02d_", cell);
    std::string p(buf);
    nodes.push_back(conv_node(p + "a", 1, 4096));
    nodes.push_back(conv_node(p + "b1", 3, 4096));
    nodes.push_back(act_node(p + "b2", "relu", 4096, 4096));
    nodes.push_back(conv_node(p + "c1", 5, 4096));
    nodes.push_back(act_node(p + "c2", "relu", 4096, 4096));
    nodes.push_back(pool_node(p + "d", 3, 4096));
    nodes.push_back(act_node(p + "e", "add", 12288, 4096));
    nodes.push_back(conv_node(p + "f", 1, 8192));
    edges.push_back({prev, p + "a", prev_bytes});
    edges.push_back({p + "a", p + "b1", 4096});
    edges.push_back({p + "a", p + "c1", 4096});
    edges.push_back({p + "a", p + "d", 4096});
    edges.push_back({p + "b1", p + "b2", 4096});
    edges.push_back({p + "c1", p + "c2", 4096});
    edges.push_back({p + "b2", p + "e", 4096});
    edges.push_back({p + "c2", p + "e", 4096});
    edges.push_back({p + "d", p + "e", 4096});
    edges.push_back({p + "e", p + "f", 4096});
    prev = p + "f";
    prev_bytes = 8192;
  }

  std::vector<LayerNode> tail;
  tail.push_back(conv_node("t00", 7, 2048));
  tail.push_back(conv_node("t01", 11, 2048));
  tail.push_back(pool_node("t02", 1, 2048));
  tail.push_back(pool_node("t03", 5, 2048));
  tail.push_back(pool_node("t04", 7, 2048));
  tail.push_back(pool_node("t05", 11, 2048));
  tail.push_back(fc_node("t06", {1, 1024, 1000, 1024}, 4000));
  tail.push_back(act_node("t07", "sigmoid", 1000, 4000));
  tail.push_back(act_node("t08", "tanh", 1000, 4000));
  tail.push_back(act_node("t09", "relu6", 1000, 4000));
  tail.push_back(act_node("t10", "elu", 1000, 4000));
  tail.push_back(act_node("t11", "selu", 1000, 4000));
  tail.push_back(act_node("t12", "gelu", 1000, 4000));
  tail.push_back(act_node("t13", "swish", 1000, 4000));
  tail.push_back(act_node("t14", "mish", 1000, 4000));
  tail.push_back(act_node("t15", "softmax", 1000, 4000));
  tail.push_back(act_node("t16", "prelu", 1000, 4000));
  for (auto& n : tail) {
    edges.push_back({prev, n.id, prev_bytes});
    prev = n.id;
    prev_bytes = n.output_bytes;
    nodes.push_back(std::move(n));
  }

  nodes.push_back(other_node("output", "Identity", 4000));
  edges.push_back({prev, "output", prev_bytes});
  return coinf::make_graph(std::move(nodes), std::move(edges), "input", "output");
}

// k copies of a fixed block (size 3..8) in a chain, separated by Other nodes.
// After pruning the blocks become contiguous; mining with max_pattern_size ==
// block_size collapses each block into one supernode.
inline ModelGraph repeated_block_graph(int k, int block_size) {
  std::vector<LayerNode> block_template;
  block_template.push_back(conv_node("", 3, 3000));
  block_template.push_back(act_node("", "relu", 3000, 3000));
  block_template.push_back(pool_node("", 3, 2000));
  if (block_size >= 4) block_template.push_back(fc_node("", {1, 200, 100, 200}, 1500));
  if (block_size >= 5) block_template.push_back(act_node("", "tanh", 1500, 1500));
  if (block_size >= 6) block_template.push_back(conv_node("", 5, 2500));
  if (block_size >= 7) block_template.push_back(pool_node("", 5, 1200));
  if (block_size >= 8) block_template.push_back(act_node("", "sigmoid", 1200, 1200));
  block_template.resize(static_cast<size_t>(block_size));

  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  nodes.push_back(other_node("input", "Placeholder", 5000));
  std::string prev = "input";
  uint64_t prev_bytes = 5000;
  char buf[24];
  for (int b = 0; b < k; ++b) {
    for (int i = 0; i < block_size; ++i) {
      LayerNode n = block_template[static_cast<size_t>(i)];
      std::snprintf(buf, sizeof buf, "b%02d_n%d", b, i);
      n.id = buf;
      edges.push_back({prev, n.id, prev_bytes});
      prev = n.id;
      prev_bytes = n.output_bytes;
      nodes.push_back(std::move(n));
    }
    if (b + 1 < k) {
      std::snprintf(buf, sizeof buf, "sep%02d", b);
      LayerNode sep = other_node(buf, "Reshape", 900);
      edges.push_back({prev, sep.id, prev_bytes});
      prev = sep.id;
      prev_bytes = sep.output_bytes;
      nodes.push_back(std::move(sep));
    }
  }
  nodes.push_back(other_node("output", "Identity", 400));
  edges.push_back({prev, "output", prev_bytes});
  return coinf::make_graph(std::move(nodes), std::move(edges), "input", "output");
}

// Cheap wide input, expensive narrow waist: input(100 KB) -> L1 -> (25 KB)
// -> L2 -> output(400 B). Costs come from linear functions of the fc
// regressors, see the partition/sim suites.
inline ModelGraph bottleneck_graph() {
  std::vector<LayerNode> nodes;
  nodes.push_back(other_node("input", "Placeholder", 100000));
  nodes.push_back(fc_node("L1", {1, 100, 50, 100}, 25000));
  nodes.push_back(fc_node("L2", {1, 50, 500, 50}, 400));
  nodes.push_back(other_node("output", "Identity", 400));
  return chain_graph(std::move(nodes));
}

// Mostly-linear random DAG: chain segments with occasional 2-3 way short
// branches, so the order-ideal count stays small. Compute nodes are modeled
// op types with randomized params; p_other controls how many pass-through
// nodes get sprinkled into the chain segments.
inline ModelGraph random_model_graph(coinf::Rng& rng, int n_compute, double p_other = 0.15) {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  int seq = 0;
  auto fresh_id = [&seq] {
    char b[16];
    std::snprintf(b, sizeof b, "n%03d", seq++);
    return std::string(b);
  };
  auto random_compute = [&](const std::string& id) -> LayerNode {
    uint64_t out = static_cast<uint64_t>(rng.uniform_int(100, 100000));
    switch (rng.uniform_int(0, 3)) {
      case 0: {
        static const uint64_t ks[] = {1, 3, 5, 7, 11};
        ConvPoolParams d{1, static_cast<uint64_t>(rng.uniform_int(8, 224)),
                         static_cast<uint64_t>(rng.uniform_int(8, 224)),
                         static_cast<uint64_t>(rng.uniform_int(1, 64)),
                         static_cast<uint64_t>(rng.uniform_int(1, 64)), 0,
                         static_cast<uint64_t>(rng.uniform_int(1, 4))};
        return conv_node(id, ks[rng.uniform_int(0, 4)], out, d);
      }
      case 1: {
        static const uint64_t ks[] = {1, 3, 5, 7, 11};
        ConvPoolParams d{1, static_cast<uint64_t>(rng.uniform_int(8, 224)),
                         static_cast<uint64_t>(rng.uniform_int(8, 224)),
                         static_cast<uint64_t>(rng.uniform_int(1, 64)),
                         static_cast<uint64_t>(rng.uniform_int(1, 64)), 0,
                         static_cast<uint64_t>(rng.uniform_int(1, 4))};
        return pool_node(id, ks[rng.uniform_int(0, 4)], out, d);
      }
      case 2:
        return fc_node(id,
                       {1, static_cast<uint64_t>(rng.uniform_int(16, 4096)),
                        static_cast<uint64_t>(rng.uniform_int(16, 4096)),
                        static_cast<uint64_t>(rng.uniform_int(16, 4096))},
                       out);
      default: {
        static const char* fns[] = {"relu", "tanh", "sigmoid", "add", "mul"};
        return act_node(id, fns[rng.uniform_int(0, 4)],
                        static_cast<uint64_t>(rng.uniform_int(100, 100000)), out);
      }
    }
  };

  nodes.push_back(other_node("input", "Placeholder", 50000));
  std::string tip = "input";
  uint64_t tip_bytes = 50000;
  int made = 0;
  int branches_left = 4;
  while (made < n_compute) {
    bool branch = branches_left > 0 && n_compute - made >= 4 && rng.uniform() < 0.22;
    if (!branch) {
      LayerNode n = rng.uniform() < p_other
                        ? other_node(fresh_id(),
                                     rng.uniform() < 0.5 ? "Reshape" : "Concat",
                                     static_cast<uint64_t>(rng.uniform_int(100, 100000)))
                        : random_compute(fresh_id());
      edges.push_back({tip, n.id, tip_bytes});
      tip = n.id;
      tip_bytes = n.output_bytes;
      nodes.push_back(std::move(n));
      ++made;
    } else {
      --branches_left;
      int arms = static_cast<int>(rng.uniform_int(2, 3));
      std::vector<std::string> arm_tips;
      std::vector<uint64_t> arm_bytes;
      for (int a = 0; a < arms && made < n_compute; ++a) {
        int len = static_cast<int>(rng.uniform_int(1, 2));
        std::string p = tip;
        uint64_t pb = tip_bytes;
        for (int i = 0; i < len && made < n_compute; ++i) {
          LayerNode n = random_compute(fresh_id());
          edges.push_back({p, n.id, pb});
          p = n.id;
          pb = n.output_bytes;
          nodes.push_back(std::move(n));
          ++made;
        }
        arm_tips.push_back(p);
        arm_bytes.push_back(pb);
      }
      LayerNode join = act_node(fresh_id(), "add", 1000,
                                static_cast<uint64_t>(rng.uniform_int(100, 50000)));
      for (size_t a = 0; a < arm_tips.size(); ++a) {
        if (arm_tips[a] == tip) continue;  // empty arm, avoid duplicate edge below
        edges.push_back({arm_tips[a], join.id, arm_bytes[a]});
      }
      if (std::none_of(edges.begin(), edges.end(), [&](const Edge& e) {
            return e.dst == join.id;
          })) {
        edges.push_back({tip, join.id, tip_bytes});
      }
      tip = join.id;
      tip_bytes = join.output_bytes;
      nodes.push_back(std::move(join));
      ++made;
    }
  }
  nodes.push_back(other_node("out_sink", "Identity", 400));
  edges.push_back({tip, "out_sink", tip_bytes});
  return coinf::make_graph(std::move(nodes), std::move(edges), "input", "out_sink");
}

}  // namespace fixtures
