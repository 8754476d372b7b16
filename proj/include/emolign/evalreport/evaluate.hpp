#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emolign/dataset/labels.hpp"
#include "emolign/dataset/sample.hpp"
#include "emolign/model/network.hpp"

namespace emolign::evalreport {

// Accuracy at both label granularities, mean NME and the confusion matrices
// (rows = truth). The label-map convention and checkpoint digest travel with
// the numbers so comparisons cannot silently mix setups.
struct EvalReport {
  std::string dataset_id;
  long n = 0;
  double acc7 = 0.0;
  double acc3 = 0.0;
  double nme = 0.0;
  Eigen::Matrix<long, 7, 7> confusion7 = Eigen::Matrix<long, 7, 7>::Zero();
  Eigen::Matrix<long, 3, 3> confusion3 = Eigen::Matrix<long, 3, 3>::Zero();
  std::array<double, 7> recall7{};
  std::array<double, 3> recall3{};
  std::string labelmap3;
  std::string checkpoint_digest;
};

using PredictFn = std::function<model::Prediction(const dataset::Sample&)>;

// Core metric computation with an injectable predictor (tests swap in
// oracles); samples are visited in order.
EvalReport evaluate_with(const PredictFn& fn,
                         const std::vector<dataset::Sample>& samples,
                         const dataset::LabelMap3& lm3,
                         const std::string& dataset_id,
                         const std::string& checkpoint_digest);

// Loads the checkpoint, validates the dataset, runs the model on every
// sample. The digest is FNV-1a over the checkpoint file bytes.
EvalReport evaluate(const std::string& checkpoint_path,
                    const std::string& dataset_dir,
                    const dataset::LabelMap3& lm3);

// <out_base>.csv, .txt, .confusion7.csv, .confusion3.csv
void write_report(const EvalReport& r, const std::string& out_base);

// Reads back the single-row summary CSV written by write_report.
EvalReport read_report_csv(const std::string& path);

struct Comparison {
  std::string text;  // aligned table
  std::string csv;   // metric,<name_a>,<name_b>,delta
};

// Side-by-side accuracies and NME, deltas signed a minus b. Rejects reports
// from different datasets or label-map conventions.
Comparison compare(const EvalReport& a, const EvalReport& b,
                   const std::string& name_a = "a", const std::string& name_b = "b");

}  // namespace emolign::evalreport
