#include <catch2/catch_amalgamated.hpp>

#include "coinf/costmodel.hpp"
#include "support/fixtures.hpp"

using namespace coinf;
using fixtures::act_node;
using fixtures::conv_node;
using fixtures::fc_node;
using fixtures::other_node;
using fixtures::pool_node;

static DeviceContext wear_ctx() { return {"urbane", "cpu-interactive", 0}; }

// samples along y = coef . regressors + intercept for one conv key
static std::vector<ProfilingSample> conv_samples(int n, double lat_a, double lat_b,
                                                 double ene_a, double ene_b, double sigma,
                                                 uint64_t seed) {
  coinf::Rng rng(seed);
  std::vector<ProfilingSample> out;
  for (int i = 0; i < n; ++i) {
    ConvPoolParams p;
    p.batch = 1;
    p.input_width = static_cast<uint64_t>(rng.uniform_int(16, 256));
    p.input_height = static_cast<uint64_t>(rng.uniform_int(16, 256));
    p.channel = static_cast<uint64_t>(rng.uniform_int(1, 64));
    p.kernel_number = static_cast<uint64_t>(rng.uniform_int(8, 128));
    p.kernel_size = 3;
    p.stride = static_cast<uint64_t>(rng.uniform_int(1, 2));
    LayerNode probe{"s", OpType::convolution, "Convolution", p, 0};
    double vol = featurize(probe).regressors[0];
    ProfilingSample s;
    s.op_type = OpType::convolution;
    s.op_name = "Convolution";
    s.params = p;
    s.context = wear_ctx();
    s.latency_ms = (lat_a * vol + lat_b) * (sigma > 0 ? rng.lognormal_factor(sigma) : 1.0);
    s.energy_mj = (ene_a * vol + ene_b) * (sigma > 0 ? rng.lognormal_factor(sigma) : 1.0);
    out.push_back(std::move(s));
  }
  return out;
}

TEST_CASE("featurize conv example") {
  LayerNode n = conv_node("c", 3, 0, {1, 224, 224, 3, 32, 0, 2});
  FeatureVector fv = featurize(n);
  CHECK(fv.layer_key == "conv/k3");
  REQUIRE(fv.regressors.size() == 1);
  CHECK(fv.regressors[0] == 1204224.0);
}

TEST_CASE("featurize pool keys on kernel size") {
  LayerNode n = pool_node("p", 5, 0, {1, 56, 56, 64, 64, 0, 2});
  FeatureVector fv = featurize(n);
  CHECK(fv.layer_key == "pool/k5");
  CHECK(fv.regressors[0] == 1.0 * 56 * 56 * 64 * 64 / 4.0);
}

TEST_CASE("featurize fc example") {
  LayerNode n = fc_node("f", {1, 1024, 1000, 1024}, 0);
  FeatureVector fv = featurize(n);
  CHECK(fv.layer_key == "fc");
  REQUIRE(fv.regressors.size() == 3);
  CHECK(fv.regressors[0] == 1024000.0);
  CHECK(fv.regressors[1] == 1024.0);
  CHECK(fv.regressors[2] == 1024000.0);
}

TEST_CASE("featurize activation example") {
  LayerNode n = act_node("a", "relu", 50176, 0);
  FeatureVector fv = featurize(n);
  CHECK(fv.layer_key == "act/relu");
  REQUIRE(fv.regressors.size() == 1);
  CHECK(fv.regressors[0] == 50176.0);
}

TEST_CASE("featurize rejects pass-through ops") {
  CHECK_THROWS_AS(featurize(other_node("x", "Reshape", 0)), UnmodeledLayerError);
}

TEST_CASE("load bucket mapping is nearest with ties to the lower bucket") {
  CHECK(map_load_bucket(0) == 0);
  CHECK(map_load_bucket(10) == 0);
  CHECK(map_load_bucket(26) == 50);
  CHECK(map_load_bucket(65) == 50);  // equidistant from 50 and 80
  CHECK(map_load_bucket(66) == 80);
  CHECK(map_load_bucket(100) == 80);
  CHECK(map_load_bucket(25) == 0);   // equidistant from 0 and 50
}

TEST_CASE("context string parsing") {
  DeviceContext c = parse_context("nexus6/gpu/50");
  CHECK(c.device == "nexus6");
  CHECK(c.processor == "gpu");
  CHECK(c.load_bucket == 50);
  CHECK(c.str() == "nexus6/gpu/50");
  CHECK_THROWS_AS(parse_context("nexus6/gpu"), ParseError);
  CHECK_THROWS_AS(parse_context("nexus6/turbo/0"), ParseError);
  CHECK_THROWS_AS(parse_context("nexus6/gpu/abc"), ParseError);
  CHECK_THROWS_AS(parse_context("nexus6/gpu/0/extra"), ParseError);
}

TEST_CASE("noiseless training recovers exact coefficients") {
  auto samples = conv_samples(60, 0.004, 5.0, 0.01, 2.0, 0.0, 91);
  LayerCostModel m = train(samples, wear_ctx());
  REQUIRE(m.latency_leaves.count("conv/k3"));
  const OlsFit& lat = m.latency_leaves.at("conv/k3");
  const OlsFit& ene = m.energy_leaves.at("conv/k3");
  CHECK(std::abs(lat.coef[0] - 0.004) < 1e-9);
  CHECK(std::abs(lat.intercept - 5.0) < 1e-9);
  CHECK(std::abs(ene.coef[0] - 0.01) < 1e-9);
  CHECK(std::abs(ene.intercept - 2.0) < 1e-9);
  CHECK(m.fit_r2.at("conv/k3").latency_r2 > 1.0 - 1e-9);
  CHECK(m.fit_r2.at("conv/k3").energy_r2 > 1.0 - 1e-9);
  CHECK(m.degenerate_keys.empty());
}

TEST_CASE("noisy training keeps held-out r2 high") {
  auto samples = conv_samples(400, 0.004, 5.0, 0.01, 2.0, 0.05, 17);
  LayerCostModel m = train(samples, wear_ctx());
  CHECK(m.fit_r2.at("conv/k3").latency_r2 >= 0.95);
  CHECK(m.fit_r2.at("conv/k3").energy_r2 >= 0.95);
  CHECK(m.fit_r2.at("conv/k3").latency_r2 <= 1.0);
  CHECK(m.fit_r2.at("conv/k3").n_samples == 400);
}

TEST_CASE("training filters samples by context") {
  auto wear = conv_samples(50, 0.004, 5.0, 0.01, 2.0, 0.0, 3);
  auto hand = conv_samples(50, 0.001, 1.0, 0.002, 0.5, 0.0, 4);
  for (auto& s : hand) s.context = {"nexus6", "cpu-interactive", 0};
  std::vector<ProfilingSample> all = wear;
  all.insert(all.end(), hand.begin(), hand.end());
  LayerCostModel m = train(all, {"nexus6", "cpu-interactive", 0});
  CHECK(std::abs(m.latency_leaves.at("conv/k3").coef[0] - 0.001) < 1e-9);
  CHECK_THROWS_AS(train(all, DeviceContext{"pixel", "gpu", 0}), InsufficientSamplesError);
}

TEST_CASE("too few samples for a key is an error") {
  std::vector<ProfilingSample> samples;
  for (int i = 0; i < 3; ++i) {
    ProfilingSample s;
    s.op_type = OpType::fully_connected;
    s.op_name = "FullyConnected";
    s.params = FcParams{1, static_cast<uint64_t>(100 + i), 50, static_cast<uint64_t>(100 + i)};
    s.context = wear_ctx();
    s.latency_ms = 10 + i;
    s.energy_mj = 5 + i;
    samples.push_back(std::move(s));
  }
  // fc has three regressors, so four samples are the minimum
  CHECK_THROWS_AS(train(samples, wear_ctx()), InsufficientSamplesError);
}

TEST_CASE("constant regressors are degenerate") {
  std::vector<ProfilingSample> samples;
  for (int i = 0; i < 12; ++i) {
    ProfilingSample s;
    s.op_type = OpType::activation;
    s.op_name = "Activation";
    s.params = ActivationParams{"relu", 4096};  // identical feature every time
    s.context = wear_ctx();
    s.latency_ms = 10.0 + (i % 3);
    s.energy_mj = 6.0;
    samples.push_back(std::move(s));
  }
  TrainOptions strict;
  strict.pinv_fallback = false;
  CHECK_THROWS_AS(train(samples, wear_ctx(), strict), DegenerateDesignError);

  LayerCostModel m = train(samples, wear_ctx());  // default falls back to pinv
  REQUIRE(m.degenerate_keys == std::vector<std::string>{"act/relu"});
  // min-norm solution still predicts the sample mean at the observed feature
  Cost c = predict_node(m, act_node("a", "relu", 4096, 0));
  double mean = 0;
  int held = 0;
  (void)held;
  for (int i = 0; i < 12; ++i) mean += 10.0 + (i % 3);
  mean /= 12;
  CHECK(std::abs(c.latency_ms - mean) < 0.35);  // fit set is a subset of samples
  CHECK(std::abs(c.energy_mj - 6.0) < 1e-6);
}

TEST_CASE("predict_node applies the leaf and clamps at zero") {
  LayerCostModel m;
  m.context = wear_ctx();
  m.latency_leaves["act/relu"] = {{2.0}, 1.0};
  m.energy_leaves["act/relu"] = {{-1.0}, 5.0};
  Cost c = predict_node(m, act_node("a", "relu", 10, 0));
  CHECK(c.latency_ms == 21.0);
  CHECK(c.energy_mj == 0.0);  // 5 - 10 clamps
}

TEST_CASE("predict_node on an unknown key") {
  LayerCostModel m;
  m.context = wear_ctx();
  m.latency_leaves["fc"] = {{0, 0, 0}, 1.0};
  m.energy_leaves["fc"] = {{0, 0, 0}, 1.0};
  CHECK_THROWS_AS(predict_node(m, conv_node("c", 3, 0)), UnknownKeyError);
}

static LayerCostModel full_model(coinf::Rng& rng, double scale) {
  LayerCostModel m;
  m.context = wear_ctx();
  std::vector<std::string> keys = {"conv/k1", "conv/k3", "conv/k5", "conv/k7", "conv/k11",
                                   "pool/k1", "pool/k3", "pool/k5", "pool/k7", "pool/k11",
                                   "act/relu", "act/tanh", "act/sigmoid", "act/add", "act/mul"};
  for (const auto& k : keys) {
    m.latency_leaves[k] = {{scale * rng.uniform(1e-6, 1e-4)}, rng.uniform(0.1, 5.0)};
    m.energy_leaves[k] = {{scale * rng.uniform(1e-6, 1e-4)}, rng.uniform(0.1, 5.0)};
  }
  m.latency_leaves["fc"] = {{scale * 1e-6, scale * 1e-5, scale * 2e-6}, 0.5};
  m.energy_leaves["fc"] = {{scale * 2e-6, scale * 1e-5, scale * 1e-6}, 0.25};
  return m;
}

TEST_CASE("predict_graph sums node predictions and skips pass-through nodes") {
  coinf::Rng rng(5150);
  LayerCostModel m = full_model(rng, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ModelGraph g = fixtures::random_model_graph(rng, 15);
    Cost total = predict_graph(m, g);
    Cost manual;
    for (const auto& n : g.nodes()) {
      if (n.op_type == OpType::other) continue;
      manual += predict_node(m, n);
    }
    CHECK(total.latency_ms == Catch::Approx(manual.latency_ms).epsilon(1e-12));
    CHECK(total.energy_mj == Catch::Approx(manual.energy_mj).epsilon(1e-12));
  }
}

TEST_CASE("predict_graph on a graph with only pass-through nodes") {
  LayerCostModel m;
  m.context = wear_ctx();
  ModelGraph g = fixtures::chain_graph({other_node("in", "Placeholder", 10),
                                        other_node("mid", "Reshape", 10),
                                        other_node("out", "Identity", 10)});
  Cost c = predict_graph(m, g);
  CHECK(c.latency_ms == 0.0);
  CHECK(c.energy_mj == 0.0);
}

TEST_CASE("model save and load round trips bitwise") {
  auto samples = conv_samples(80, 0.0043, 4.7, 0.011, 1.9, 0.05, 23);
  LayerCostModel m = train(samples, wear_ctx());
  std::string text = save_model(m);
  LayerCostModel m2 = load_model(text);
  CHECK(save_model(m2) == text);
  CHECK(m2.context == m.context);
  CHECK(m2.latency_leaves.at("conv/k3") == m.latency_leaves.at("conv/k3"));
  CHECK(m2.fit_r2.at("conv/k3") == m.fit_r2.at("conv/k3"));
}

TEST_CASE("model load rejects malformed input") {
  auto samples = conv_samples(40, 0.004, 5.0, 0.01, 2.0, 0.0, 7);
  std::string text = save_model(train(samples, wear_ctx()));
  CHECK_THROWS_AS(load_model(text.substr(0, text.size() / 2)), ParseError);

  json j = json::parse(text);
  j["schema_version"] = 9;
  CHECK_THROWS_AS(model_from_json(j), ParseError);

  j = json::parse(text);
  j["latency_leaves"]["conv/k3"]["coef"] = {1.0, 2.0};  // wrong arity
  CHECK_THROWS_AS(model_from_json(j), ParseError);

  j = json::parse(text);
  j["energy_leaves"].erase("conv/k3");
  CHECK_THROWS_AS(model_from_json(j), ParseError);
}

TEST_CASE("profiling csv round trips including quoted param_json") {
  auto samples = conv_samples(5, 0.004, 5.0, 0.01, 2.0, 0.0, 11);
  ProfilingSample fc;
  fc.op_type = OpType::fully_connected;
  fc.op_name = "FullyConnected";
  fc.params = FcParams{1, 1024, 1000, 1024};
  fc.context = {"nexus6", "gpu", 80};
  fc.latency_ms = 3.25;
  fc.energy_mj = 0.125;
  samples.push_back(fc);

  std::string text = samples_to_csv(samples);
  CHECK(text.find('"') != std::string::npos);  // param_json cells are quoted
  auto back = samples_from_csv(text);
  REQUIRE(back.size() == samples.size());
  CHECK(back.back().params == samples.back().params);
  CHECK(back.back().context.str() == "nexus6/gpu/80");
  CHECK(back.back().latency_ms == 3.25);
  CHECK(samples_to_csv(back) == text);
}

TEST_CASE("profiling csv rejects bad rows") {
  CHECK_THROWS_AS(samples_from_csv("op_type,param_json\nx,y\n"), ParseError);
  std::string good = "op_type,param_json,context,latency_ms,energy_mj\n";
  CHECK_THROWS_AS(samples_from_csv(good + "Activation,\"{\"\"fn_kind\"\":\"\"relu\"\",\"\"input_size\"\":4}\",urbane/cpu-interactive/0,-1,2\n"),
                  ParseError);
  CHECK_THROWS_AS(samples_from_csv(good + "Activation,not-json,urbane/cpu-interactive/0,1,2\n"),
                  ParseError);
}

TEST_CASE("r2 values stay within bounds on random data") {
  coinf::Rng rng(31337);
  std::vector<ProfilingSample> samples;
  for (int i = 0; i < 100; ++i) {
    ProfilingSample s;
    s.op_type = OpType::activation;
    s.op_name = "Activation";
    s.params = ActivationParams{"tanh", static_cast<uint64_t>(rng.uniform_int(100, 100000))};
    s.context = wear_ctx();
    s.latency_ms = rng.uniform(0.1, 100.0);  // pure noise, no structure
    s.energy_mj = rng.uniform(0.1, 100.0);
    samples.push_back(std::move(s));
  }
  LayerCostModel m = train(samples, wear_ctx());
  const LeafQuality& q = m.fit_r2.at("act/tanh");
  CHECK(q.latency_r2 <= 1.0);
  CHECK(q.energy_r2 <= 1.0);
  CHECK(std::isfinite(q.latency_r2));
  CHECK(std::isfinite(q.energy_r2));
}
