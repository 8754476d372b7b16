#include "emolign/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "emolign/dataset/split.hpp"
#include "emolign/model/network.hpp"
#include "emolign/numgrad/adam.hpp"
#include "emolign/numgrad/ops.hpp"
#include "emolign/train/checkpoint.hpp"

namespace emolign::train {

namespace fs = std::filesystem;
using dataset::Sample;
using model::BatchForward;
using model::ForwardScope;
using model::LossTerms;
using model::ModelParams;
using numgrad::AdamParams;
using numgrad::AdamSlot;

namespace {

LossTerms terms_for(bool phase_a, const std::string& mode) {
  if (phase_a) return {true, false};
  if (mode == "emotion_only") return {false, true};
  if (mode == "landmark_only") return {true, false};
  return {true, true};
}

struct Batch {
  std::vector<geometry::Image> images;
  std::vector<geometry::Shape> gts;
  std::vector<int> labels;
};

Batch gather(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
             std::size_t begin, std::size_t end) {
  Batch b;
  b.images.reserve(end - begin);
  b.gts.reserve(end - begin);
  b.labels.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const Sample& s = samples[order[i]];
    b.images.push_back(dataset::to_unit(s.image));
    b.gts.push_back(s.shape);
    b.labels.push_back(static_cast<int>(s.label));
  }
  return b;
}

// stable per-sample cross entropy from raw logits
double cross_entropy(const numgrad::Array& logits, Eigen::Index base, int K, int label) {
  double m = logits[base];
  for (int k = 1; k < K; ++k) m = std::max(m, logits[base + k]);
  double denom = 0.0;
  for (int k = 0; k < K; ++k) denom += std::exp(logits[base + k] - m);
  return std::log(denom) - (logits[base + label] - m);
}

SplitMetrics eval_split(const ModelParams& params, const std::vector<Sample>& samples,
                        bool phase_a, const TrainConfig& cfg,
                        const dataset::LabelMap3& lm3) {
  SplitMetrics m;
  if (samples.empty()) return m;
  const int K = params.config.n_classes;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  double nme_sum = 0.0, ce_sum = 0.0;
  long correct7 = 0, correct3 = 0;
  for (std::size_t at = 0; at < samples.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(samples.size(), at + static_cast<std::size_t>(cfg.batch_size));
    Batch b = gather(samples, order, at, end);
    BatchForward bf = model::forward_batch(
        params, b.images, phase_a ? ForwardScope::stage1_only : ForwardScope::full);
    const int B = static_cast<int>(b.images.size());
    for (int i = 0; i < B; ++i) {
      geometry::Shape pred;
      const Eigen::Index base = static_cast<Eigen::Index>(i) * 2 * geometry::kLandmarkCount;
      for (int k = 0; k < geometry::kLandmarkCount; ++k) {
        pred(k, 0) = bf.s_final.values()[base + 2 * k];
        pred(k, 1) = bf.s_final.values()[base + 2 * k + 1];
      }
      nme_sum += geometry::normalized_landmark_error(pred, b.gts[static_cast<std::size_t>(i)]);
      if (!phase_a) {
        const Eigen::Index lbase = static_cast<Eigen::Index>(i) * K;
        ce_sum += cross_entropy(bf.logits.values(), lbase, K, b.labels[static_cast<std::size_t>(i)]);
        int pred_cls = 0;
        for (int k = 1; k < K; ++k) {
          if (bf.logits.values()[lbase + k] > bf.logits.values()[lbase + pred_cls]) pred_cls = k;
        }
        const int truth = b.labels[static_cast<std::size_t>(i)];
        if (pred_cls == truth) ++correct7;
        if (lm3.map(static_cast<dataset::Emotion7>(pred_cls)) ==
            lm3.map(static_cast<dataset::Emotion7>(truth))) {
          ++correct3;
        }
      }
    }
  }

  const double n = static_cast<double>(samples.size());
  m.nme = nme_sum / n;
  const LossTerms terms = terms_for(phase_a, cfg.mode);
  m.landmark_term = terms.landmark ? m.nme : 0.0;
  m.emotion_term = terms.emotion ? ce_sum / n : 0.0;
  m.total = cfg.alpha * m.landmark_term + cfg.beta * m.emotion_term;
  if (!phase_a) {
    m.acc7 = static_cast<double>(correct7) / n;
    m.acc3 = static_cast<double>(correct3) / n;
  }
  return m;
}

const char* kLogHeader = "epoch,phase,split,landmark_term,emotion_term,total,acc7,acc3,nme";

void log_row(std::ofstream& out, long epoch, char phase, const char* split,
             const SplitMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%ld,%c,%s,%.9g,%.9g,%.9g,%.6f,%.6f,%.9g",
                epoch, phase, split, m.landmark_term, m.emotion_term, m.total,
                m.acc7, m.acc3, m.nme);
  out << buf << '\n';
  out.flush();
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s) {
  std::istringstream ss(s);
  ss >> rng;
  if (ss.fail()) throw ValidationError("checkpoint: unreadable RNG state");
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  const model::ModelConfig mcfg = cfg.model_config();
  const dataset::LabelMap3 lm3 = dataset::LabelMap3::parse(cfg.label_map_3);

  std::vector<Sample> all = dataset::load_annotations(cfg.dataset_dir);
  if (all.empty()) throw ValidationError("train: dataset " + cfg.dataset_dir + " is empty");

  // deterministic split: seeded shuffle, tail becomes validation
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_val = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(all.size())));
  if (n_val >= all.size()) throw ValidationError("train: validation split leaves no training data");
  std::vector<Sample> train_set, val_set;
  for (std::size_t i = 0; i < all.size() - n_val; ++i) train_set.push_back(all[idx[i]]);
  for (std::size_t i = all.size() - n_val; i < all.size(); ++i) val_set.push_back(all[idx[i]]);

  ModelParams params;
  std::vector<std::pair<std::string, AdamSlot>> slots;
  auto slot_of = [&slots](const std::string& name) -> AdamSlot& {
    for (auto& [n, s] : slots) {
      if (n == name) return s;
    }
    slots.emplace_back(name, AdamSlot{});
    return slots.back().second;
  };

  long epoch_start = 0;  // completed epochs
  long best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();

  if (!cfg.resume.empty()) {
    Checkpoint ckpt = load_checkpoint(cfg.resume);
    if (ckpt.config_digest != cfg.digest()) {
      throw ValidationError("resume: checkpoint config digest " + hex64(ckpt.config_digest) +
                            " does not match this config's " + hex64(cfg.digest()));
    }
    params = params_from_checkpoint(ckpt);
    for (const auto& rec : ckpt.adam) {
      AdamSlot& s = slot_of(rec.name);
      s.t = rec.t;
      s.m = rec.m;
      s.v = rec.v;
    }
    rng_from_string(rng, ckpt.rng_state);
    epoch_start = ckpt.epoch;
    best_epoch = ckpt.best_epoch;
    best_val = ckpt.best_val_total;
  } else {
    std::vector<geometry::Shape> shapes;
    shapes.reserve(train_set.size());
    for (const auto& s : train_set) shapes.push_back(s.shape);
    params = model::init_params(mcfg, cfg.seed, shapes);
  }

  fs::create_directories(cfg.checkpoint_dir);
  const std::string log_path = cfg.resolved_log_file();
  const bool append = !cfg.resume.empty() && fs::exists(log_path) && fs::file_size(log_path) > 0;
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw RuntimeError("cannot open log file " + log_path);
  if (!append) log << kLogHeader << '\n';

  const AdamParams adamp{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  const long phase_a = cfg.phase_a_epochs();
  const long total = cfg.total_epochs();

  auto snapshot = [&](long epoch) {
    Checkpoint ckpt = checkpoint_from_params(params);
    ckpt.config_digest = cfg.digest();
    ckpt.epoch = epoch;
    ckpt.best_epoch = best_epoch;
    ckpt.best_val_total = best_val;
    ckpt.rng_state = rng_to_string(rng);
    for (const auto& [name, slot] : slots) {
      if (slot.t > 0) ckpt.adam.push_back({name, slot.t, slot.m, slot.v});
    }
    return ckpt;
  };

  TrainResult res;
  res.log_file = log_path;
  res.last_checkpoint = cfg.checkpoint_dir + "/last.ckpt";
  const std::string best_path = cfg.checkpoint_dir + "/best.ckpt";

  std::vector<std::size_t> order(train_set.size());

  for (long epoch = epoch_start + 1; epoch <= total; ++epoch) {
    const bool in_a = epoch <= phase_a;
    const LossTerms terms = terms_for(in_a, cfg.mode);
    const ForwardScope scope = in_a ? ForwardScope::stage1_only : ForwardScope::full;

    // shuffle from identity so the epoch's batch order is a pure function of
    // the checkpointed RNG state; a resumed run then matches the straight one
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    long batch_no = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      Batch b = gather(train_set, order, at, end);
      BatchForward bf = model::forward_batch(params, b.images, scope);
      model::LossBreakdown lb = model::joint_loss(bf, b.gts, b.labels, mcfg, terms);
      if (!std::isfinite(lb.total.item())) {
        throw RuntimeError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_no));
      }
      params.zero_grad();
      lb.total.backward();

      numgrad::Graph g = numgrad::Graph::reachable(lb.total);
      std::set<const numgrad::Node*> in_graph;
      for (const auto& n : g.order) in_graph.insert(n.get());
      for (auto& [name, t] : params.tensors) {
        if (in_graph.count(t.node().get()) && t.node()->has_grad()) {
          AdamSlot& slot = slot_of(name);
          numgrad::adam_step(t, t.grad(), slot, adamp, slot.t + 1);
        }
      }
    }

    const SplitMetrics train_m = eval_split(params, train_set, in_a, cfg, lm3);
    const char phase_c = in_a ? 'A' : 'B';
    log_row(log, epoch, phase_c, "train", train_m);
    SplitMetrics gate_m = train_m;
    if (!val_set.empty()) {
      const SplitMetrics val_m = eval_split(params, val_set, in_a, cfg, lm3);
      log_row(log, epoch, phase_c, "val", val_m);
      gate_m = val_m;
    }

    if (!in_a && gate_m.total < best_val) {
      best_val = gate_m.total;
      best_epoch = epoch;
      save_checkpoint(snapshot(epoch), best_path);
      res.best_checkpoint = best_path;
    }
    save_checkpoint(snapshot(epoch), res.last_checkpoint);
    res.epochs_run = epoch;

    if (!in_a && cfg.patience > 0) {
      const long anchor = std::max(best_epoch, phase_a);
      if (epoch - anchor >= cfg.patience) {
        res.early_stopped = true;
        break;
      }
    }
    if (cfg.stop_after > 0 && epoch >= cfg.stop_after) break;
  }

  if (res.best_checkpoint.empty() && fs::exists(best_path)) {
    res.best_checkpoint = best_path;  // resumed run that never improved further
  }
  return res;
}

}  // namespace emolign::train
