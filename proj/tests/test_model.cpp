#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "scmp/data.hpp"
#include "scmp/model.hpp"
#include "scmp/train.hpp"

using namespace scmp;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<Tensor> random_states(int n, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<Tensor> out;
  for (int i = 0; i < n; ++i) {
    Tensor t = Tensor::zeros({dim});
    for (double& v : t.data) v = dist(rng);
    out.push_back(std::move(t));
  }
  return out;
}

ModelConfig toy_config(Variant v, int dim = 5, int steps = 2) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.embed_dim = cfg.msg_dim = cfg.edge_dim = dim;
  cfg.steps = steps;
  cfg.mlp_depth = 2;
  // keep the y=0 hinge loss O(1): a margin of 50 puts the loss near m^2 and
  // central differences lose ~1e-4 relative precision to cancellation
  cfg.margin = 5.0;
  return cfg;
}

SetGraph random_graph(int n, int dim, std::mt19937_64& rng, int label) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("i" + std::to_string(i));
  return make_graph("g", ids, random_states(n, dim, rng), label);
}

}  // namespace

TEST_CASE("edge_absdiff") {
  Tape t;
  Tensor a = t.leaf({2}, {1, -2});
  Tensor b = t.leaf({2}, {4, 1});
  CHECK(edge_absdiff(t, a, b).data == std::vector<double>{3, 3});
  CHECK(edge_absdiff(t, a, a).data == std::vector<double>{0, 0});

  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Tape tt;
    std::vector<double> x = {dist(rng), dist(rng)}, y = {dist(rng), dist(rng)};
    Tensor u = tt.leaf({2}, x), v = tt.leaf({2}, y);
    CHECK(edge_absdiff(tt, u, v).data == edge_absdiff(tt, v, u).data);
  }
}

TEST_CASE("edge_learned closed forms") {
  Tape t;
  Tensor hi = t.leaf({2}, {0.5, -0.5});
  Tensor hj = t.leaf({2}, {1.5, 2.5});
  Tensor w0 = t.leaf(Tensor::zeros({2, 4}));
  CHECK(edge_learned(t, hi, hj, w0, t.leaf(Tensor::zeros({2}))).data ==
        std::vector<double>{0, 0});
  CHECK(edge_learned(t, hi, hj, w0, t.leaf({2}, {-1, 2})).data ==
        std::vector<double>{0, 2});
}

TEST_CASE("edge_learned gradient w.r.t. weights") {
  std::vector<double> wv = {0.3, -0.2, 0.5, 0.1, -0.4, 0.7, 0.2, -0.6};
  std::vector<double> hiv = {0.9, -1.1}, hjv = {0.4, 0.8}, bv = {0.05, -0.03};
  auto f = [&](const std::vector<double>& w) {
    Tape t;
    Tensor out = edge_learned(t, t.leaf({2}, hiv), t.leaf({2}, hjv),
                              t.leaf({2, 4}, w), t.leaf({2}, bv));
    return t.sq_l2_norm(out).item();
  };
  Tape t;
  Tensor w = t.leaf({2, 4}, wv);
  Tensor out = edge_learned(t, t.leaf({2}, hiv), t.leaf({2}, hjv), w, t.leaf({2}, bv));
  GradientMap g = t.backward(t.sq_l2_norm(out));
  REQUIRE(t.min_kink_distance() >= 1e-3);
  const std::vector<double>& analytic = g.at(w);
  for (std::size_t i = 0; i < wv.size(); ++i) {
    std::vector<double> pert = wv;
    pert[i] += 1e-5;
    double fp = f(pert);
    pert[i] -= 2e-5;
    double fm = f(pert);
    double numeric = (fp - fm) / 2e-5;
    CHECK(std::fabs(analytic[i] - numeric) /
              std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-4}) <= 1e-4);
  }
}

TEST_CASE("aggregate_message hand expansion, 3 nodes dim 2") {
  // hand-set weights; expected value expanded neighbor-by-neighbor below
  std::vector<double> h0 = {1.0, 0.0}, h1 = {0.0, 1.0}, h2 = {0.5, 0.5};
  std::vector<double> wm = {0.5, 0.0, 0.25, 0.0,
                           0.0, 0.5, 0.0, 0.25};  // 2 x (2+2)
  std::vector<double> bm = {0.1, -0.1};
  // message into node 0, edge = |h_q - h_0|:
  //   q=1: concat(h1, |h1-h0|) = (0,1,1,1) -> W.(...)+b = (0.25+0.1, 0.5+0.25-0.1)
  //        = (0.35, 0.65) -> relu same
  //   q=2: concat(h2, |h2-h0|) = (0.5,0.5,0.5,0.5) -> (0.25+0.125+0.1, 0.25+0.125-0.1)
  //        = (0.475, 0.275)
  //   mean = (0.4125, 0.4625)
  Tape t;
  std::vector<Tensor> states = {t.leaf({2}, h0), t.leaf({2}, h1), t.leaf({2}, h2)};
  EdgeFn efn = [](Tape& tp, const Tensor& a, const Tensor& b) {
    return edge_absdiff(tp, a, b);
  };
  Tensor m0 = aggregate_message(t, 0, states, efn, t.leaf({2, 4}, wm), t.leaf({2}, bm));
  CHECK(m0.data[0] == doctest::Approx(0.4125));
  CHECK(m0.data[1] == doctest::Approx(0.4625));
}

TEST_CASE("aggregate_message edge cases") {
  Tape t;
  std::vector<Tensor> one = {t.leaf({2}, {1, 2})};
  EdgeFn efn = [](Tape& tp, const Tensor& a, const Tensor& b) {
    return edge_absdiff(tp, a, b);
  };
  CHECK_THROWS_AS(
      aggregate_message(t, 0, one, efn, t.leaf(Tensor::zeros({2, 4})), t.leaf(Tensor::zeros({2}))),
      std::invalid_argument);

  // N=2: message equals the single transformed neighbor term
  std::vector<Tensor> two = {t.leaf({2}, {1, 0}), t.leaf({2}, {0, 1})};
  Tensor w = t.leaf({2, 4}, {1, 0, 0, 0, 0, 1, 0, 0});
  Tensor b = t.leaf(Tensor::zeros({2}));
  Tensor m = aggregate_message(t, 0, two, efn, w, b);
  CHECK(m.data == std::vector<double>{0, 1});

  // identical states everywhere: every node gets the same message
  std::vector<Tensor> same = {t.leaf({2}, {0.3, 0.7}), t.leaf({2}, {0.3, 0.7}),
                              t.leaf({2}, {0.3, 0.7})};
  Tensor ma = aggregate_message(t, 0, same, efn, w, b);
  Tensor mb = aggregate_message(t, 1, same, efn, w, b);
  CHECK(ma.data == mb.data);
}

TEST_CASE("config invariants") {
  ModelConfig cfg = toy_config(Variant::kModelI);
  cfg.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = toy_config(Variant::kModelI);
  cfg.margin = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_graph("s", {"a"}, {Tensor::zeros({2})}, 1), std::invalid_argument);
}

TEST_CASE("propagate with zero GRU weights halves states") {
  CompatibilityModel model(toy_config(Variant::kModelI, 4, 1), 1);
  for (Param& p : model.registry().params())
    if (p.name.rfind("gru.", 0) == 0)
      for (double& v : p.value.data) v = 0.0;
  Tape tape;
  TapeBinding bind(tape, model.registry());
  std::mt19937_64 rng(5);
  std::vector<Tensor> init;
  for (const Tensor& s : random_states(3, 4, rng)) init.push_back(tape.leaf(s));
  auto finals = model_propagate_for_test(model, tape, bind, init);
  for (std::size_t i = 0; i < finals.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(finals[i].data[j] == doctest::Approx(0.5 * init[i].data[j]));
}

TEST_CASE("propagate is equivariant under node permutation") {
  std::mt19937_64 rng(9);
  for (Variant v : {Variant::kModelI, Variant::kModelII}) {
    CompatibilityModel model(toy_config(v), 21);
    SetGraph g = random_graph(4, 5, rng, 1);

    Tape t1;
    TapeBinding b1(t1, model.registry());
    std::vector<Tensor> init1;
    for (const Tensor& s : g.init_states) init1.push_back(t1.leaf(s));
    auto f1 = model_propagate_for_test(model, t1, b1, init1);

    std::vector<std::size_t> perm = {2, 0, 3, 1};
    Tape t2;
    TapeBinding b2(t2, model.registry());
    std::vector<Tensor> init2;
    for (std::size_t p : perm) init2.push_back(t2.leaf(g.init_states[p]));
    auto f2 = model_propagate_for_test(model, t2, b2, init2);

    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = 0; j < 5; ++j)
        CHECK(f2[i].data[j] ==
              doctest::Approx(f1[perm[i]].data[j]).epsilon(1e-9));
  }
}

TEST_CASE("model1 score closed forms") {
  ModelConfig cfg = toy_config(Variant::kModelI, 2, 1);
  cfg.normalize = false;
  CompatibilityModel model(cfg, 1);
  // zero GRU weights halve the inputs; feed doubled values to land on the
  // target final states
  for (Param& p : model.registry().params())
    for (double& v : p.value.data) v = 0.0;

  // identical states -> r = 0, s = 1 - sigma(0) = 0.5
  SetGraph same = make_graph("s", {"a", "b"},
                             {Tensor({2}, {2, 2}), Tensor({2}, {2, 2})}, 1);
  ScoreOut so = model.score(same);
  CHECK(so.raw_stat == doctest::Approx(0.0));
  CHECK(so.score == doctest::Approx(0.5));

  // final states [0,0] and [2,0]: c=[1,0], r=1, s = 1 - sigma(1)
  SetGraph two = make_graph("t", {"a", "b"},
                            {Tensor({2}, {0, 0}), Tensor({2}, {4, 0})}, 1);
  ScoreOut so2 = model.score(two);
  CHECK(so2.raw_stat == doctest::Approx(1.0));
  CHECK(so2.score == doctest::Approx(1.0 - sigmoid(1.0)));
  CHECK(so2.sigma_raw == doctest::Approx(sigmoid(1.0)));

  // monotone: larger r gives smaller s
  CHECK(so2.raw_stat > so.raw_stat);
  CHECK(so2.score < so.score);
}

TEST_CASE("model2 score closed forms") {
  ModelConfig cfg = toy_config(Variant::kModelII, 3, 1);
  CompatibilityModel model(cfg, 2);
  std::string last = std::to_string(cfg.mlp_depth - 1);
  for (double& v : model.registry().value("mlp.W" + last).data) v = 0.0;
  for (double& v : model.registry().value("mlp.b" + last).data) v = 0.0;
  std::mt19937_64 rng(7);
  SetGraph g = random_graph(3, 3, rng, 1);
  CHECK(model.score(g).score == doctest::Approx(0.5));
}

TEST_CASE("score permutation invariance, both models") {
  std::mt19937_64 rng(31);
  for (Variant v : {Variant::kModelI, Variant::kModelII}) {
    CompatibilityModel model(toy_config(v), 77);
    for (int trial = 0; trial < 20; ++trial) {
      int n = 2 + static_cast<int>(rng() % 4);
      SetGraph g = random_graph(n, 5, rng, 1);
      double base = model.score(g).ranking;
      std::vector<std::size_t> perm(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<std::string> ids;
      std::vector<Tensor> states;
      for (std::size_t p : perm) {
        ids.push_back(g.item_ids[p]);
        states.push_back(g.init_states[p]);
      }
      SetGraph gp = make_graph("p", ids, states, 1);
      double permuted = model.score(gp).ranking;
      CHECK(std::fabs(permuted - base) <=
            1e-9 * std::max(1.0, std::fabs(base)));
    }
  }
}

TEST_CASE("contrastive loss closed forms") {
  Tape t;
  // y=1, identical states -> 0
  std::vector<Tensor> same = {t.leaf({2}, {1, 1}), t.leaf({2}, {1, 1})};
  CHECK(loss_generalized_contrastive(t, same, 1, 50.0).item() == 0.0);

  // y=0, all d_i >= m -> hinge inactive
  std::vector<Tensor> far = {t.leaf({2}, {-100, 0}), t.leaf({2}, {100, 0})};
  CHECK(loss_generalized_contrastive(t, far, 0, 50.0).item() == 0.0);

  // y=0, N=2, states (0,0),(2,0), m=50: d_i=1 each,
  // L = (1/2) * 2 * (2500 - 1) = 2499
  std::vector<Tensor> close = {t.leaf({2}, {0, 0}), t.leaf({2}, {2, 0})};
  CHECK(loss_generalized_contrastive(t, close, 0, 50.0).item() == doctest::Approx(2499.0));

  CHECK_THROWS_AS(loss_generalized_contrastive(t, close, 2, 50.0), std::invalid_argument);
}

TEST_CASE("contrastive loss is nonnegative on random states") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    std::vector<Tensor> states;
    for (const Tensor& s : random_states(2 + static_cast<int>(rng() % 4), 3, rng))
      states.push_back(t.leaf(s));
    int y = static_cast<int>(rng() % 2);
    CHECK(loss_generalized_contrastive(t, states, y, 5.0).item() >= 0.0);
  }
}

TEST_CASE("size generality: one parameter set scores any N") {
  std::mt19937_64 rng(17);
  for (Variant v : {Variant::kModelI, Variant::kModelII}) {
    CompatibilityModel model(toy_config(v), 3);
    for (int n : {2, 3, 5, 8}) {
      SetGraph g = random_graph(n, 5, rng, 1);
      CHECK(std::isfinite(model.score(g).score));
    }
  }
}

TEST_CASE("end-to-end gradients match finite differences, both models") {
  std::mt19937_64 rng(23);
  for (Variant v : {Variant::kModelI, Variant::kModelII}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      ModelConfig cfg = toy_config(v);
      CompatibilityModel model(cfg, seed);
      int n = 3 + static_cast<int>(rng() % 3);
      SetGraph g = random_graph(n, 5, rng, static_cast<int>(rng() % 2));

      std::vector<std::vector<double>> input_grads;
      GradOut go = model.loss_and_grads_with_inputs(g, NormMode::kTrain, &input_grads);
      // stay away from relu/abs kinks, where central differences are invalid
      int resamples = 0;
      while (go.min_kink_distance < 1e-3 && resamples++ < 20) {
        g = random_graph(n, 5, rng, *g.label);
        go = model.loss_and_grads_with_inputs(g, NormMode::kTrain, &input_grads);
      }
      REQUIRE(go.min_kink_distance >= 1e-3);

      ParamMap params, analytic;
      for (const Param& p : model.registry().params()) {
        params[p.name] = p.value;
        analytic[p.name] = Tensor(p.value.shape, go.grads.at(p.name));
      }
      for (int i = 0; i < n; ++i) {
        params["input." + std::to_string(i)] = g.init_states[static_cast<std::size_t>(i)];
        analytic["input." + std::to_string(i)] =
            Tensor({5}, input_grads[static_cast<std::size_t>(i)]);
      }
      auto eval = [&](const ParamMap& pm) {
        CompatibilityModel m2(cfg, seed);
        for (Param& p : m2.registry().params()) p.value = pm.at(p.name);
        SetGraph g2 = g;
        for (int i = 0; i < n; ++i)
          g2.init_states[static_cast<std::size_t>(i)] = pm.at("input." + std::to_string(i));
        return m2.loss_and_grads(g2, NormMode::kTrain).loss;
      };
      FiniteDiffReport rep = finite_diff_check(eval, params, analytic, 1e-5, 1e-4);
      CHECK_MESSAGE(rep.pass, "variant=", v == Variant::kModelI ? "I" : "II",
                    " seed=", seed, " worst=", rep.worst);
    }
  }
}

TEST_CASE("pairwise average baseline") {
  std::mt19937_64 rng(41);
  CompatibilityModel model(toy_config(Variant::kModelI), 11);

  SetGraph pair = random_graph(2, 5, rng, 1);
  CHECK(model.score_pairwise_average(pair).ranking ==
        doctest::Approx(model.score(pair).ranking));

  SetGraph three = random_graph(3, 5, rng, 1);
  double expect = 0.0;
  for (auto [a, b] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
    SetGraph p = make_graph("p", {three.item_ids[a], three.item_ids[b]},
                            {three.init_states[a], three.init_states[b]}, 1);
    expect += model.score(p).ranking;
  }
  CHECK(model.score_pairwise_average(three).ranking == doctest::Approx(expect / 3.0));
}

TEST_CASE("one epoch decreases mean training loss on planted clusters") {
  for (Variant v : {Variant::kModelI, Variant::kModelII}) {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      EmbeddingTable table = generate_synthetic(3, 12, 8, 0.1, seed);
      auto samples = sample_style_ensembles(table, 30, 3, 4, seed + 100);
      ModelConfig cfg = toy_config(v, 8, 2);
      CompatibilityModel model(cfg, seed);
      TrainOptions opts;
      opts.lr = v == Variant::kModelI ? 3e-3 : 1e-2;
      opts.epochs = 2;
      opts.batch_size = 16;
      opts.seed = seed;
      TrainResult r = train_model(model, samples, {}, table, opts);
      REQUIRE(r.epochs.size() == 2);
      if (r.epochs[1].mean_loss < r.epochs[0].mean_loss) ++wins;
    }
    CHECK(wins == 5);
  }
}
