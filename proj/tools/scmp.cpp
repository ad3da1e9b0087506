// Command-line front end: synthetic data generation, training, scoring,
// fill-in-the-blank and AUC evaluation, and gradient checking.
//
// Exit codes: 0 success, 2 bad input, 3 failed check.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "scmp/checkpoint.hpp"
#include "scmp/data.hpp"
#include "scmp/eval.hpp"
#include "scmp/train.hpp"

namespace {

struct RunConfig {
  std::string model = "I";
  int embed_dim = 32;
  int msg_dim = 32;
  int edge_dim = 32;
  int steps = 3;
  int mlp_depth = 3;
  double margin = 50.0;
  double lr = 4e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int epochs = 60;
  int batch_size = -1;  // -1: 64 for Model I, 32 for Model II
  std::uint64_t seed = 0;
  bool no_normalize = false;
  int workers = 1;
};

scmp::ModelConfig model_config(const RunConfig& rc) {
  scmp::ModelConfig cfg;
  cfg.variant = rc.model == "II" ? scmp::Variant::kModelII : scmp::Variant::kModelI;
  cfg.embed_dim = rc.embed_dim;
  cfg.msg_dim = rc.msg_dim;
  cfg.edge_dim = rc.edge_dim;
  cfg.steps = rc.steps;
  cfg.mlp_depth = rc.mlp_depth;
  cfg.margin = rc.margin;
  cfg.normalize = !rc.no_normalize && cfg.variant == scmp::Variant::kModelI;
  return cfg;
}

int effective_batch(const RunConfig& rc) {
  if (rc.batch_size > 0) return rc.batch_size;
  return rc.model == "II" ? 32 : 64;
}

// "key = value" config file; flags given on the command line win.
void apply_config_file(CLI::App& app, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("--config", "cannot open " + path);
  std::string line;
  std::vector<std::string> args;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      auto e = s.find_last_not_of(" \t");
      s.erase(e == std::string::npos ? 0 : e + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (!opt) throw CLI::ValidationError("--config", "unknown key '" + key + "'");
    if (opt->count() == 0) {  // flag precedence
      opt->add_result(val);
      opt->run_callback();
    }
  }
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& rc) {
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return {
      {"config.model", rc.model},
      {"config.embed_dim", std::to_string(rc.embed_dim)},
      {"config.msg_dim", std::to_string(rc.msg_dim)},
      {"config.edge_dim", std::to_string(rc.edge_dim)},
      {"config.steps", std::to_string(rc.steps)},
      {"config.mlp_depth", std::to_string(rc.mlp_depth)},
      {"config.margin", fmt(rc.margin)},
      {"config.lr", fmt(rc.lr)},
      {"config.beta1", fmt(rc.beta1)},
      {"config.beta2", fmt(rc.beta2)},
      {"config.epochs", std::to_string(rc.epochs)},
      {"config.batch_size", std::to_string(effective_batch(rc))},
      {"config.seed", std::to_string(rc.seed)},
      {"config.workers", std::to_string(rc.workers)},
      {"build.git_describe", SCMP_GIT_DESCRIBE},
  };
}

void add_model_flags(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--model", rc.model, "Model variant, I or II")
      ->check(CLI::IsMember({"I", "II"}));
  cmd->add_option("--embed-dim", rc.embed_dim, "Node state width L");
  cmd->add_option("--msg-dim", rc.msg_dim, "Message width M");
  cmd->add_option("--edge-dim", rc.edge_dim, "Edge feature width J (Model II)");
  cmd->add_option("--steps", rc.steps, "GRU message-passing steps K");
  cmd->add_option("--mlp-depth", rc.mlp_depth, "MLP layers Q (Model II)");
  cmd->add_option("--margin", rc.margin, "Contrastive margin m (Model I)");
  cmd->add_flag("--no-normalize", rc.no_normalize, "Disable state normalization");
  cmd->add_option("--seed", rc.seed, "RNG seed");
  cmd->add_option("--workers", rc.workers, "Parallel workers for batch kernels");
}

std::string fmtd(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Furniture set compatibility models: training, scoring, evaluation"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (flags win)");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate a planted-style synthetic corpus");
  int gs_styles = 4, gs_per_style = 50, gs_dim = 16, gs_count = 1000;
  int gs_min_len = 3, gs_max_len = 6;
  double gs_sigma = 0.05;
  std::uint64_t gs_seed = 0;
  std::string gs_out = ".";
  gen->add_option("--styles", gs_styles, "Number of planted styles");
  gen->add_option("--per-style", gs_per_style, "Items per style");
  gen->add_option("--dim", gs_dim, "Embedding dimension");
  gen->add_option("--sigma", gs_sigma, "Gaussian noise sigma");
  gen->add_option("--seed", gs_seed, "RNG seed");
  gen->add_option("--count", gs_count, "Positive training ensembles to sample");
  gen->add_option("--min-len", gs_min_len, "Minimum ensemble length");
  gen->add_option("--max-len", gs_max_len, "Maximum ensemble length");
  gen->add_option("--out-dir", gs_out, "Output directory");

  // train
  auto* train = app.add_subcommand("train", "Train a model on an ensemble corpus");
  std::string tr_embeddings, tr_train, tr_val, tr_ckpt = "model.ckpt", tr_report = "train.report";
  add_model_flags(train, rc);
  train->add_option("--lr", rc.lr, "Adam learning rate");
  train->add_option("--beta1", rc.beta1, "Adam beta1");
  train->add_option("--beta2", rc.beta2, "Adam beta2");
  train->add_option("--epochs", rc.epochs, "Training epochs");
  train->add_option("--batch-size", rc.batch_size, "Batch size (default 64 Model I, 32 Model II)");
  train->add_option("--embeddings", tr_embeddings, "Embedding file")->required();
  train->add_option("--train", tr_train, "Training ensemble corpus")->required();
  train->add_option("--val", tr_val, "Validation ensemble corpus");
  train->add_option("--checkpoint", tr_ckpt, "Output checkpoint path");
  train->add_option("--report", tr_report, "Output report path");

  // score
  auto* score = app.add_subcommand("score", "Score one set of item ids");
  std::string sc_ckpt, sc_embeddings, sc_items;
  bool sc_pairwise = false;
  score->add_option("--checkpoint", sc_ckpt, "Checkpoint path")->required();
  score->add_option("--embeddings", sc_embeddings, "Embedding file")->required();
  score->add_option("--items", sc_items, "Comma-separated item ids")->required();
  score->add_flag("--pairwise", sc_pairwise, "Average over all 2-item subsets");

  // eval
  auto* eval = app.add_subcommand("eval", "Compatibility AUC over a labeled corpus");
  std::string ev_ckpt, ev_embeddings, ev_corpus, ev_report;
  bool ev_pairwise = false;
  int ev_workers = 1;
  eval->add_option("--checkpoint", ev_ckpt, "Checkpoint path")->required();
  eval->add_option("--embeddings", ev_embeddings, "Embedding file")->required();
  eval->add_option("--corpus", ev_corpus, "Labeled ensemble corpus")->required();
  eval->add_option("--report", ev_report, "Output report path");
  eval->add_flag("--pairwise", ev_pairwise, "Pairwise-average baseline scoring");
  eval->add_option("--workers", ev_workers, "Parallel scoring workers");

  // fitb
  auto* fitb = app.add_subcommand("fitb", "Fill-in-the-blank accuracy");
  std::string fb_ckpt, fb_embeddings, fb_questions, fb_report;
  bool fb_pairwise = false;
  fitb->add_option("--checkpoint", fb_ckpt, "Checkpoint path")->required();
  fitb->add_option("--embeddings", fb_embeddings, "Embedding file")->required();
  fitb->add_option("--questions", fb_questions, "FITB question file")->required();
  fitb->add_option("--report", fb_report, "Output report path");
  fitb->add_flag("--pairwise", fb_pairwise, "Pairwise-average baseline scoring");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of both models");
  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  gradcheck->add_option("--seed", gc_seed, "RNG seed");
  gradcheck->add_option("--tolerance", gc_tol, "Relative error tolerance");

  try {
    app.parse(argc, argv);
    if (!config_path.empty()) apply_config_file(app, config_path);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      namespace fs = std::filesystem;
      fs::create_directories(gs_out);
      scmp::EmbeddingTable table =
          scmp::generate_synthetic(gs_styles, gs_per_style, gs_dim, gs_sigma, gs_seed);
      scmp::save_embeddings(table, gs_out + "/embeddings.txt");

      // style data: split along items 68:12:20
      auto parts = scmp::split_items_stratified(table, {0.68, 0.12, 0.20}, gs_seed + 1);
      const char* names[3] = {"train", "val", "test"};
      double fractions[3] = {1.0, 0.2, 0.2};
      std::vector<std::vector<std::string>> test_positive_sets;
      for (int p = 0; p < 3; ++p) {
        scmp::EmbeddingTable sub = scmp::subset_table(table, parts[static_cast<std::size_t>(p)]);
        int n = std::max(1, static_cast<int>(gs_count * fractions[p]));
        auto samples = scmp::sample_style_ensembles(sub, n, gs_min_len, gs_max_len,
                                                    gs_seed + 10 + static_cast<std::uint64_t>(p));
        scmp::save_ensembles(samples, gs_out + "/" + names[p] + ".tsv");
        if (p == 2)
          for (const auto& s : samples)
            if (s.label == 1) test_positive_sets.push_back(s.item_ids);
      }
      auto questions = scmp::make_fitb_questions(test_positive_sets, table, gs_seed + 20);
      scmp::save_fitb(questions, gs_out + "/fitb.tsv");
      std::cout << "wrote corpus to " << gs_out << " (" << questions.size()
                << " FITB questions)\n";
      return 0;
    }

    if (*train) {
      scmp::EmbeddingTable table = scmp::load_embeddings(tr_embeddings);
      rc.embed_dim = table.dim;
      if (rc.msg_dim <= 0) rc.msg_dim = table.dim;
      auto train_samples = scmp::load_ensembles(tr_train);
      std::vector<scmp::EnsembleSample> val_samples;
      if (!tr_val.empty()) val_samples = scmp::load_ensembles(tr_val);

      scmp::CompatibilityModel model(model_config(rc), rc.seed);
      scmp::TrainOptions opts;
      opts.lr = rc.lr;
      opts.beta1 = rc.beta1;
      opts.beta2 = rc.beta2;
      opts.epochs = rc.epochs;
      opts.batch_size = effective_batch(rc);
      opts.seed = rc.seed;
      opts.workers = rc.workers;
      scmp::TrainResult result = scmp::train_model(model, train_samples, val_samples, table, opts);
      if (result.diverged) {
        std::cerr << "error: training diverged (non-finite loss); try a lower --lr\n";
        return 3;
      }
      scmp::save_checkpoint(model, tr_ckpt);

      auto report = config_echo(rc);
      for (const scmp::EpochStats& e : result.epochs) {
        report.emplace_back("epoch." + std::to_string(e.epoch) + ".loss", fmtd(e.mean_loss));
        report.emplace_back("epoch." + std::to_string(e.epoch) + ".val_auc", fmtd(e.val_auc));
      }
      report.emplace_back("best_epoch", std::to_string(result.best_epoch));
      report.emplace_back("best_val_auc", fmtd(result.best_val_auc));
      scmp::emit_report(report, tr_report);
      std::cout << "best_epoch=" << result.best_epoch
                << " best_val_auc=" << result.best_val_auc << "\n";
      return 0;
    }

    if (*score) {
      scmp::CompatibilityModel model = scmp::load_checkpoint(sc_ckpt);
      scmp::EmbeddingTable table = scmp::load_embeddings(sc_embeddings);
      std::vector<std::string> items;
      std::stringstream ss(sc_items);
      std::string tok;
      while (std::getline(ss, tok, ',')) items.push_back(tok);
      scmp::SetGraph g = scmp::graph_from_items(items, table, std::nullopt);
      scmp::ScoreOut so = sc_pairwise ? model.score_pairwise_average(g) : model.score(g);
      std::cout << "score=" << so.score << "\n";
      if (model.config().variant == scmp::Variant::kModelI)
        std::cout << "raw_centroid_stat=" << so.raw_stat << "\n";
      return 0;
    }

    if (*eval) {
      scmp::CompatibilityModel model = scmp::load_checkpoint(ev_ckpt);
      scmp::EmbeddingTable table = scmp::load_embeddings(ev_embeddings);
      auto samples = scmp::load_ensembles(ev_corpus);
      double a = scmp::evaluate_auc(model, samples, table, ev_pairwise, ev_workers);
      std::cout << "auc=" << a << "\n";
      if (!ev_report.empty())
        scmp::emit_report({{"auc", fmtd(a)}, {"pairwise", ev_pairwise ? "1" : "0"},
                           {"n_samples", std::to_string(samples.size())}},
                          ev_report);
      return 0;
    }

    if (*fitb) {
      scmp::CompatibilityModel model = scmp::load_checkpoint(fb_ckpt);
      scmp::EmbeddingTable table = scmp::load_embeddings(fb_embeddings);
      auto questions = scmp::load_fitb(fb_questions);
      double acc = scmp::evaluate_fitb(model, questions, table, fb_pairwise);
      std::cout << "fitb_accuracy=" << acc << "\n";
      if (!fb_report.empty())
        scmp::emit_report({{"fitb_accuracy", fmtd(acc)},
                           {"pairwise", fb_pairwise ? "1" : "0"},
                           {"n_questions", std::to_string(questions.size())}},
                          fb_report);
      return 0;
    }

    if (*gradcheck) {
      bool ok = true;
      for (scmp::Variant variant : {scmp::Variant::kModelI, scmp::Variant::kModelII}) {
        scmp::ModelConfig cfg;
        cfg.variant = variant;
        cfg.embed_dim = cfg.msg_dim = cfg.edge_dim = 5;
        cfg.steps = 2;
        cfg.mlp_depth = 2;
        cfg.margin = 5.0;  // keep the hinge loss O(1) for finite differences
        scmp::CompatibilityModel model(cfg, gc_seed);

        std::mt19937_64 rng(gc_seed + 99);
        std::normal_distribution<double> dist(0.0, 1.0);
        std::vector<std::string> ids = {"a", "b", "c"};
        std::vector<scmp::Tensor> states;
        for (int i = 0; i < 3; ++i) {
          scmp::Tensor t = scmp::Tensor::zeros({5});
          for (double& v : t.data) v = dist(rng);
          states.push_back(std::move(t));
        }
        scmp::SetGraph g = scmp::make_graph("gc", ids, states, 1);
        scmp::GradOut go = model.loss_and_grads(g, scmp::NormMode::kTrain);

        scmp::ParamMap params, analytic;
        for (const scmp::Param& p : model.registry().params()) {
          params[p.name] = p.value;
          analytic[p.name] = scmp::Tensor(p.value.shape, go.grads.at(p.name));
        }
        auto eval_fn = [&](const scmp::ParamMap& pm) {
          scmp::CompatibilityModel m2(cfg, gc_seed);
          for (scmp::Param& p : m2.registry().params()) p.value = pm.at(p.name);
          return m2.loss_and_grads(g, scmp::NormMode::kTrain).loss;
        };
        scmp::FiniteDiffReport rep =
            scmp::finite_diff_check(eval_fn, params, analytic, 1e-5, gc_tol);
        const char* name = variant == scmp::Variant::kModelI ? "Model I" : "Model II";
        std::cout << name << ": worst rel err " << rep.worst
                  << (rep.pass ? " PASS" : " FAIL") << "\n";
        ok = ok && rep.pass;
      }
      return ok ? 0 : 3;
    }
  } catch (const scmp::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
