#include "emolign/evalreport/evaluate.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emolign/common.hpp"
#include "emolign/train/checkpoint.hpp"

namespace emolign::evalreport {

namespace {

const char* kReportHeader = "dataset,n,acc7,acc3,nme,labelmap3,checkpoint_digest";

std::string csv_field(const std::string& v) {
  if (v.find(',') == std::string::npos) return v;
  return '"' + v + '"';
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (quoted) {
      if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

EvalReport evaluate_with(const PredictFn& fn,
                         const std::vector<dataset::Sample>& samples,
                         const dataset::LabelMap3& lm3,
                         const std::string& dataset_id,
                         const std::string& checkpoint_digest) {
  if (samples.empty()) throw ValidationError("evaluate: empty dataset");
  EvalReport r;
  r.dataset_id = dataset_id;
  r.labelmap3 = lm3.describe();
  r.checkpoint_digest = checkpoint_digest;
  r.n = static_cast<long>(samples.size());

  double nme_sum = 0.0;
  for (const auto& s : samples) {
    model::Prediction p = fn(s);
    const int truth = static_cast<int>(s.label);
    const int pred = static_cast<int>(p.label);
    r.confusion7(truth, pred) += 1;
    const int truth3 = static_cast<int>(lm3.map(s.label));
    const int pred3 = static_cast<int>(lm3.map(p.label));
    r.confusion3(truth3, pred3) += 1;
    nme_sum += geometry::normalized_landmark_error(p.S, s.shape);
  }

  r.nme = nme_sum / static_cast<double>(r.n);
  r.acc7 = static_cast<double>(r.confusion7.trace()) / static_cast<double>(r.n);
  r.acc3 = static_cast<double>(r.confusion3.trace()) / static_cast<double>(r.n);
  for (int i = 0; i < 7; ++i) {
    const long row = r.confusion7.row(i).sum();
    r.recall7[static_cast<std::size_t>(i)] =
        row > 0 ? static_cast<double>(r.confusion7(i, i)) / static_cast<double>(row) : 0.0;
  }
  for (int i = 0; i < 3; ++i) {
    const long row = r.confusion3.row(i).sum();
    r.recall3[static_cast<std::size_t>(i)] =
        row > 0 ? static_cast<double>(r.confusion3(i, i)) / static_cast<double>(row) : 0.0;
  }

  if (r.confusion7.sum() != r.n || r.confusion3.sum() != r.n) {
    throw RuntimeError("evaluate: confusion matrix counts do not sum to n");
  }
  if (r.acc3 + 1e-12 < r.acc7) {
    throw RuntimeError("evaluate: coarsening inequality violated (acc3 < acc7)");
  }
  return r;
}

EvalReport evaluate(const std::string& checkpoint_path,
                    const std::string& dataset_dir,
                    const dataset::LabelMap3& lm3) {
  std::ifstream in(checkpoint_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + checkpoint_path);
  std::ostringstream raw;
  raw << in.rdbuf();
  const std::string digest = hex64(fnv1a64(raw.str()));

  train::Checkpoint ckpt = train::load_checkpoint(checkpoint_path);
  if (ckpt.config.n_classes != dataset::kNumClasses7) {
    throw ValidationError("evaluate: checkpoint has " +
                          std::to_string(ckpt.config.n_classes) +
                          " classes, dataset labels have 7");
  }
  model::ModelParams params = train::params_from_checkpoint(ckpt);
  std::vector<dataset::Sample> samples = dataset::load_annotations(dataset_dir);

  std::string id = std::filesystem::path(dataset_dir).filename().string();
  if (id.empty()) {
    id = std::filesystem::path(dataset_dir).parent_path().filename().string();
  }

  return evaluate_with(
      [&params](const dataset::Sample& s) {
        return model::predict(params, dataset::to_unit(s.image));
      },
      samples, lm3, id, digest);
}

void write_report(const EvalReport& r, const std::string& out_base) {
  {
    std::ofstream csv(out_base + ".csv", std::ios::trunc);
    if (!csv) throw RuntimeError("cannot write " + out_base + ".csv");
    csv << kReportHeader << '\n';
    csv << csv_field(r.dataset_id) << ',' << r.n << ',' << fmt("%.6f", r.acc7)
        << ',' << fmt("%.6f", r.acc3) << ',' << fmt("%.9g", r.nme) << ','
        << csv_field(r.labelmap3) << ',' << r.checkpoint_digest << '\n';
  }
  {
    std::ofstream txt(out_base + ".txt", std::ios::trunc);
    if (!txt) throw RuntimeError("cannot write " + out_base + ".txt");
    txt << "dataset:            " << r.dataset_id << '\n';
    txt << "samples:            " << r.n << '\n';
    txt << "accuracy (7-class): " << fmt("%.6f", r.acc7) << '\n';
    txt << "accuracy (3-class): " << fmt("%.6f", r.acc3) << '\n';
    txt << "mean NME:           " << fmt("%.9g", r.nme) << '\n';
    txt << "label map (3):      " << r.labelmap3 << '\n';
    txt << "checkpoint digest:  " << r.checkpoint_digest << '\n';
    txt << '\n' << "confusion (7-class, rows = truth):" << '\n';
    txt << "            ";
    for (int j = 0; j < 7; ++j) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%10s", dataset::to_string(static_cast<dataset::Emotion7>(j)));
      txt << buf;
    }
    txt << '\n';
    for (int i = 0; i < 7; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%-12s", dataset::to_string(static_cast<dataset::Emotion7>(i)));
      txt << buf;
      for (int j = 0; j < 7; ++j) {
        std::snprintf(buf, sizeof(buf), "%10ld", r.confusion7(i, j));
        txt << buf;
      }
      std::snprintf(buf, sizeof(buf), "%10.6f", r.recall7[static_cast<std::size_t>(i)]);
      txt << "  recall " << buf << '\n';
    }
    txt << '\n' << "confusion (3-class, rows = truth):" << '\n';
    txt << "            ";
    for (int j = 0; j < 3; ++j) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%10s", dataset::to_string(static_cast<dataset::Emotion3>(j)));
      txt << buf;
    }
    txt << '\n';
    for (int i = 0; i < 3; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%-12s", dataset::to_string(static_cast<dataset::Emotion3>(i)));
      txt << buf;
      for (int j = 0; j < 3; ++j) {
        std::snprintf(buf, sizeof(buf), "%10ld", r.confusion3(i, j));
        txt << buf;
      }
      std::snprintf(buf, sizeof(buf), "%10.6f", r.recall3[static_cast<std::size_t>(i)]);
      txt << "  recall " << buf << '\n';
    }
  }
  auto write_confusion = [&](const std::string& path, int k, auto getter,
                             auto name_of) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + path);
    out << "truth\\pred";
    for (int j = 0; j < k; ++j) out << ',' << name_of(j);
    out << '\n';
    for (int i = 0; i < k; ++i) {
      out << name_of(i);
      for (int j = 0; j < k; ++j) out << ',' << getter(i, j);
      out << '\n';
    }
  };
  write_confusion(
      out_base + ".confusion7.csv", 7,
      [&r](int i, int j) { return r.confusion7(i, j); },
      [](int i) { return dataset::to_string(static_cast<dataset::Emotion7>(i)); });
  write_confusion(
      out_base + ".confusion3.csv", 3,
      [&r](int i, int j) { return r.confusion3(i, j); },
      [](int i) { return dataset::to_string(static_cast<dataset::Emotion3>(i)); });
}

EvalReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open report " + path);
  std::string header, row;
  if (!std::getline(in, header) || header != kReportHeader) {
    throw ValidationError(path + ": not a report CSV (unexpected header)");
  }
  if (!std::getline(in, row)) throw ValidationError(path + ": missing report row");
  auto f = split_csv_row(row);
  if (f.size() != 7) {
    throw ValidationError(path + ": expected 7 report fields, got " + std::to_string(f.size()));
  }
  EvalReport r;
  r.dataset_id = f[0];
  try {
    r.n = std::stol(f[1]);
    r.acc7 = std::stod(f[2]);
    r.acc3 = std::stod(f[3]);
    r.nme = std::stod(f[4]);
  } catch (const std::exception&) {
    throw ValidationError(path + ": malformed numeric field in report row");
  }
  r.labelmap3 = f[5];
  r.checkpoint_digest = f[6];
  return r;
}

Comparison compare(const EvalReport& a, const EvalReport& b,
                   const std::string& name_a, const std::string& name_b) {
  if (a.dataset_id != b.dataset_id) {
    throw ValidationError("compare: dataset mismatch ('" + a.dataset_id + "' vs '" +
                          b.dataset_id + "')");
  }
  if (a.labelmap3 != b.labelmap3) {
    throw ValidationError("compare: label-map mismatch ('" + a.labelmap3 + "' vs '" +
                          b.labelmap3 + "')");
  }

  struct Row {
    const char* metric;
    double va, vb;
    const char* format;
  };
  const Row rows[] = {
      {"acc7", a.acc7, b.acc7, "%.6f"},
      {"acc3", a.acc3, b.acc3, "%.6f"},
      {"nme", a.nme, b.nme, "%.9g"},
  };

  Comparison c;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "dataset %s  (n=%ld, labelmap3 %s)\n",
                a.dataset_id.c_str(), a.n, a.labelmap3.c_str());
  c.text = buf;
  std::snprintf(buf, sizeof(buf), "%-8s%16s%16s%16s\n", "metric", name_a.c_str(),
                name_b.c_str(), "delta");
  c.text += buf;
  c.csv = "metric," + name_a + "," + name_b + ",delta\n";
  for (const Row& r : rows) {
    const double d = r.va - r.vb;
    std::string va = fmt(r.format, r.va), vb = fmt(r.format, r.vb);
    std::string vd = (d >= 0.0 ? "+" : "") + fmt(r.format, d);
    std::snprintf(buf, sizeof(buf), "%-8s%16s%16s%16s\n", r.metric, va.c_str(),
                  vb.c_str(), vd.c_str());
    c.text += buf;
    c.csv += std::string(r.metric) + "," + va + "," + vb + "," + vd + "\n";
  }
  return c;
}

}  // namespace emolign::evalreport
