#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "emolign/common.hpp"
#include "emolign/dataset/synth.hpp"
#include "emolign/evalreport/evaluate.hpp"
#include "emolign/train/config.hpp"
#include "emolign/train/train.hpp"
#include "emolign/verify/verify.hpp"

namespace {

struct GenOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  long count = 0;
};

struct TrainOpts {
  std::string config;
  emolign::train::TrainConfig cfg;
  long stop_after = 0;
};

struct EvalOpts {
  std::string checkpoint;
  std::string dataset;
  std::string out;
  std::string labelmap;
};

struct CompareOpts {
  std::string a, b;
  std::string name_a = "a", name_b = "b";
  std::string out;
};

int run_gen(const GenOpts& o, const CLI::App& sub) {
  emolign::dataset::GenParams p;
  if (!o.config.empty()) p = emolign::dataset::GenParams::from_file(o.config);
  if (sub.count("--seed")) p.seed = o.seed;
  if (sub.count("--count")) p.count = o.count;
  auto samples = emolign::dataset::generate_synthetic(p, o.out);
  std::printf("wrote %zu samples to %s\n", samples.size(), o.out.c_str());
  return 0;
}

int run_train(TrainOpts& o, const CLI::App& sub) {
  emolign::train::TrainConfig cfg;
  if (!o.config.empty()) cfg = emolign::train::TrainConfig::from_file(o.config);
  auto take = [&](const char* flag, auto member) {
    if (sub.count(flag)) cfg.*member = o.cfg.*member;
  };
  take("--dataset", &emolign::train::TrainConfig::dataset_dir);
  take("--checkpoint-dir", &emolign::train::TrainConfig::checkpoint_dir);
  take("--log-file", &emolign::train::TrainConfig::log_file);
  take("--resume", &emolign::train::TrainConfig::resume);
  take("--mode", &emolign::train::TrainConfig::mode);
  take("--seed", &emolign::train::TrainConfig::seed);
  take("--epochs-a", &emolign::train::TrainConfig::epochs_a);
  take("--epochs-b", &emolign::train::TrainConfig::epochs_b);
  take("--batch-size", &emolign::train::TrainConfig::batch_size);
  take("--lr", &emolign::train::TrainConfig::lr);
  take("--alpha", &emolign::train::TrainConfig::alpha);
  take("--beta", &emolign::train::TrainConfig::beta);
  take("--patience", &emolign::train::TrainConfig::patience);
  take("--val-fraction", &emolign::train::TrainConfig::val_fraction);
  take("--stop-after", &emolign::train::TrainConfig::stop_after);
  auto result = emolign::train::train(cfg);
  std::printf("trained %ld epochs%s\n", result.epochs_run,
              result.early_stopped ? " (early stop)" : "");
  std::printf("last checkpoint: %s\n", result.last_checkpoint.c_str());
  if (!result.best_checkpoint.empty())
    std::printf("best checkpoint: %s\n", result.best_checkpoint.c_str());
  std::printf("metric log: %s\n", result.log_file.c_str());
  return 0;
}

int run_eval(const EvalOpts& o) {
  auto lm3 = o.labelmap.empty() ? emolign::dataset::LabelMap3::defaults()
                               : emolign::dataset::LabelMap3::parse(o.labelmap);
  auto report = emolign::evalreport::evaluate(o.checkpoint, o.dataset, lm3);
  emolign::evalreport::write_report(report, o.out);
  std::printf("dataset %s  n %ld  acc7 %.4f  acc3 %.4f  nme %.6f\n",
              report.dataset_id.c_str(), report.n, report.acc7, report.acc3, report.nme);
  std::printf("report: %s.csv\n", o.out.c_str());
  return 0;
}

int run_compare(const CompareOpts& o) {
  auto a = emolign::evalreport::read_report_csv(o.a);
  auto b = emolign::evalreport::read_report_csv(o.b);
  auto cmp = emolign::evalreport::compare(a, b, o.name_a, o.name_b);
  std::fputs(cmp.text.c_str(), stdout);
  if (!o.out.empty()) {
    FILE* f = std::fopen(o.out.c_str(), "wb");
    if (!f) throw emolign::RuntimeError("compare: cannot write " + o.out);
    std::fputs(cmp.csv.c_str(), f);
    std::fclose(f);
  }
  return 0;
}

int run_gradcheck() {
  auto results = emolign::verify::run_gradcheck();
  std::fputs(emolign::verify::format_results(results).c_str(), stdout);
  if (!emolign::verify::all_pass(results)) {
    std::fprintf(stderr, "gradient check failed\n");
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascaded facial landmark alignment with a joint emotion head"};
  app.require_subcommand(1);

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "synthesize a labeled face dataset");
  gen_cmd->add_option("--config", gen.config, "generator key=value file");
  gen_cmd->add_option("--out", gen.out, "output dataset directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "override generator seed");
  gen_cmd->add_option("--count", gen.count, "override sample count");

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "train from a config file plus overrides");
  train_cmd->add_option("--config", tr.config, "training key=value file");
  train_cmd->add_option("--dataset", tr.cfg.dataset_dir, "dataset directory");
  train_cmd->add_option("--checkpoint-dir", tr.cfg.checkpoint_dir, "checkpoint directory");
  train_cmd->add_option("--log-file", tr.cfg.log_file, "metric log path");
  train_cmd->add_option("--resume", tr.cfg.resume, "checkpoint to continue from");
  train_cmd->add_option("--mode", tr.cfg.mode, "joint | emotion_only | landmark_only");
  train_cmd->add_option("--seed", tr.cfg.seed, "training seed");
  train_cmd->add_option("--epochs-a", tr.cfg.epochs_a, "phase A epochs");
  train_cmd->add_option("--epochs-b", tr.cfg.epochs_b, "phase B epochs");
  train_cmd->add_option("--batch-size", tr.cfg.batch_size, "minibatch size");
  train_cmd->add_option("--lr", tr.cfg.lr, "learning rate");
  train_cmd->add_option("--alpha", tr.cfg.alpha, "landmark loss weight");
  train_cmd->add_option("--beta", tr.cfg.beta, "emotion loss weight");
  train_cmd->add_option("--patience", tr.cfg.patience, "early-stop patience, 0 disables");
  train_cmd->add_option("--val-fraction", tr.cfg.val_fraction, "validation split fraction");
  train_cmd->add_option("--stop-after", tr.cfg.stop_after, "pause after this global epoch");

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--dataset", ev.dataset, "dataset directory")->required();
  eval_cmd->add_option("--out", ev.out, "report base path (writes .csv/.txt/...)")->required();
  eval_cmd->add_option("--labelmap", ev.labelmap, "7->3 map, e.g. pos,neg,neg,pos,neg,neg,neu");

  CompareOpts cm;
  auto* compare_cmd = app.add_subcommand("compare", "compare two report CSVs");
  compare_cmd->add_option("--a", cm.a, "first report CSV")->required();
  compare_cmd->add_option("--b", cm.b, "second report CSV")->required();
  compare_cmd->add_option("--name-a", cm.name_a, "label for the first report");
  compare_cmd->add_option("--name-b", cm.name_b, "label for the second report");
  compare_cmd->add_option("--out", cm.out, "also write the comparison as CSV");

  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of every operation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen, *gen_cmd);
    if (train_cmd->parsed()) return run_train(tr, *train_cmd);
    if (eval_cmd->parsed()) return run_eval(ev);
    if (compare_cmd->parsed()) return run_compare(cm);
    if (gradcheck_cmd->parsed()) return run_gradcheck();
  } catch (const emolign::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const emolign::RuntimeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
