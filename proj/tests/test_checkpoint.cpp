#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "scmp/checkpoint.hpp"
#include "scmp/data.hpp"

using namespace scmp;

namespace {

std::string tmp_path() { return std::string(std::tmpnam(nullptr)) + ".ckpt"; }

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

ModelConfig config_for(Variant v) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.embed_dim = cfg.msg_dim = cfg.edge_dim = 6;
  cfg.steps = 2;
  cfg.mlp_depth = 3;
  return cfg;
}

}  // namespace

TEST_CASE("save -> load -> save is byte identical") {
  for (Variant v : {Variant::kModelI, Variant::kModelII}) {
    CompatibilityModel model(config_for(v), 5);
    model.registry().set_step(17);
    model.norm_state().initialized = true;
    for (double& x : model.norm_state().running_mean) x = 0.25;

    std::string p1 = tmp_path(), p2 = tmp_path();
    save_checkpoint(model, p1);
    CompatibilityModel loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
  }
}

TEST_CASE("loaded model reproduces scores bit identically") {
  EmbeddingTable table = generate_synthetic(3, 20, 6, 0.05, 8);
  auto samples = sample_style_ensembles(table, 25, 3, 5, 9);
  for (Variant v : {Variant::kModelI, Variant::kModelII}) {
    CompatibilityModel model(config_for(v), 6);
    std::string p = tmp_path();
    save_checkpoint(model, p);
    CompatibilityModel loaded = load_checkpoint(p);
    std::remove(p.c_str());
    for (const EnsembleSample& s : samples) {
      SetGraph g = graph_from_items(s.item_ids, table, s.label);
      CHECK(model.score(g).score == loaded.score(g).score);
      CHECK(model.score(g).ranking == loaded.score(g).ranking);
    }
  }
}

TEST_CASE("checkpoint rejects corruption") {
  CompatibilityModel model(config_for(Variant::kModelI), 1);
  std::string p = tmp_path();
  save_checkpoint(model, p);

  std::string bytes = slurp(p);
  {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os << "XXXX" << bytes.substr(4);
  }
  CHECK_THROWS_AS(load_checkpoint(p), std::runtime_error);

  {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(p), std::runtime_error);
  std::remove(p.c_str());
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.ckpt"), std::runtime_error);
}
