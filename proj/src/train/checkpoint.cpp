#include "emolign/train/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace emolign::train {

namespace {

class Writer {
 public:
  Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw RuntimeError("cannot open " + path + " for writing");
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw RuntimeError("write failed on " + path_);
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i64(std::int64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void doubles(const numgrad::Array& a) {
    bytes(a.data(), static_cast<std::size_t>(a.size()) * 8);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw ValidationError("cannot open checkpoint " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw ValidationError(path_ + ": truncated checkpoint at byte " +
                            std::to_string(offset_ + in_.gcount()));
    }
    offset_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  std::string str(std::uint32_t max_len) {
    std::uint32_t n = u32();
    if (n > max_len) {
      throw ValidationError(path_ + ": implausible string length " +
                            std::to_string(n) + " at byte " + std::to_string(offset_ - 4));
    }
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  numgrad::Array doubles(Eigen::Index n) {
    numgrad::Array a(n);
    bytes(a.data(), static_cast<std::size_t>(n) * 8);
    return a;
  }
  std::uint64_t offset() const { return offset_; }
  const std::string& path() const { return path_; }
  bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w(path);
  w.bytes(kCheckpointMagic, 8);
  w.u32(ckpt.version);
  w.u64(ckpt.config_digest);

  const model::ModelConfig& c = ckpt.config;
  w.u32(static_cast<std::uint32_t>(c.input_size));
  w.u32(static_cast<std::uint32_t>(c.n_landmarks));
  w.u32(static_cast<std::uint32_t>(c.n_stages));
  w.u32(static_cast<std::uint32_t>(c.n_classes));
  w.f64(c.heatmap_sigma);
  w.u32(static_cast<std::uint32_t>(c.conv1_channels));
  w.u32(static_cast<std::uint32_t>(c.conv2_channels));
  w.u32(static_cast<std::uint32_t>(c.fc_width));
  w.f64(c.alpha);
  w.f64(c.beta);

  w.i64(ckpt.epoch);
  w.i64(ckpt.best_epoch);
  w.f64(ckpt.best_val_total);
  w.str(ckpt.rng_state);

  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    w.doubles(t.values);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.adam.size()));
  for (const auto& a : ckpt.adam) {
    w.str(a.name);
    w.i64(a.t);
    w.u64(static_cast<std::uint64_t>(a.m.size()));
    w.doubles(a.m);
    w.doubles(a.v);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[9] = {0};
  r.bytes(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw ValidationError(path + ": not a checkpoint file (bad magic)");
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw ValidationError(path + ": unsupported checkpoint version " +
                          std::to_string(ckpt.version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  ckpt.config_digest = r.u64();

  model::ModelConfig& c = ckpt.config;
  c.input_size = static_cast<int>(r.u32());
  c.n_landmarks = static_cast<int>(r.u32());
  c.n_stages = static_cast<int>(r.u32());
  c.n_classes = static_cast<int>(r.u32());
  c.heatmap_sigma = r.f64();
  c.conv1_channels = static_cast<int>(r.u32());
  c.conv2_channels = static_cast<int>(r.u32());
  c.fc_width = static_cast<int>(r.u32());
  c.alpha = r.f64();
  c.beta = r.f64();
  c.validate();

  ckpt.epoch = static_cast<long>(r.i64());
  ckpt.best_epoch = static_cast<long>(r.i64());
  ckpt.best_val_total = r.f64();
  ckpt.rng_state = r.str(1u << 16);

  const std::uint32_t n_tensors = r.u32();
  if (n_tensors > 1024) {
    throw ValidationError(path + ": implausible tensor count " + std::to_string(n_tensors));
  }
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    TensorRecord t;
    t.name = r.str(256);
    const std::uint32_t rank = r.u32();
    if (rank > 8) {
      throw ValidationError(path + ": implausible tensor rank at byte " +
                            std::to_string(r.offset() - 4));
    }
    Eigen::Index numel = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint32_t d = r.u32();
      if (d == 0 || d > (1u << 24)) {
        throw ValidationError(path + ": implausible dimension at byte " +
                              std::to_string(r.offset() - 4));
      }
      t.shape.push_back(static_cast<int>(d));
      numel *= d;
    }
    t.values = r.doubles(numel);
    ckpt.tensors.push_back(std::move(t));
  }

  const std::uint32_t n_adam = r.u32();
  if (n_adam > 1024) {
    throw ValidationError(path + ": implausible adam record count " + std::to_string(n_adam));
  }
  for (std::uint32_t i = 0; i < n_adam; ++i) {
    AdamRecord a;
    a.name = r.str(256);
    a.t = static_cast<long>(r.i64());
    const std::uint64_t numel = r.u64();
    if (numel > (1u << 28)) {
      throw ValidationError(path + ": implausible adam state size at byte " +
                            std::to_string(r.offset() - 8));
    }
    a.m = r.doubles(static_cast<Eigen::Index>(numel));
    a.v = r.doubles(static_cast<Eigen::Index>(numel));
    ckpt.adam.push_back(std::move(a));
  }
  if (!r.at_eof()) {
    throw ValidationError(path + ": trailing bytes after checkpoint payload at byte " +
                          std::to_string(r.offset()));
  }
  return ckpt;
}

Checkpoint checkpoint_from_params(const model::ModelParams& params) {
  Checkpoint ckpt;
  ckpt.config = params.config;
  for (const auto& [name, t] : params.tensors) {
    ckpt.tensors.push_back({name, t.shape(), t.values()});
  }
  TensorRecord canon;
  canon.name = "canonical";
  canon.shape = {geometry::kLandmarkCount, 2};
  canon.values = numgrad::Array(2 * geometry::kLandmarkCount);
  for (int k = 0; k < geometry::kLandmarkCount; ++k) {
    canon.values[2 * k] = params.canonical(k, 0);
    canon.values[2 * k + 1] = params.canonical(k, 1);
  }
  ckpt.tensors.push_back(std::move(canon));
  return ckpt;
}

model::ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  const auto layout = model::tensor_layout(ckpt.config);
  model::ModelParams p;
  p.config = ckpt.config;

  bool have_canonical = false;
  std::size_t next = 0;
  for (const auto& rec : ckpt.tensors) {
    if (rec.name == "canonical") {
      if (rec.shape != std::vector<int>({geometry::kLandmarkCount, 2})) {
        throw ValidationError("checkpoint: canonical record has wrong shape");
      }
      for (int k = 0; k < geometry::kLandmarkCount; ++k) {
        p.canonical(k, 0) = rec.values[2 * k];
        p.canonical(k, 1) = rec.values[2 * k + 1];
      }
      have_canonical = true;
      continue;
    }
    if (next >= layout.size() || layout[next].first != rec.name ||
        layout[next].second != rec.shape) {
      throw ValidationError("checkpoint: tensor '" + rec.name +
                            "' does not match the echoed config's layout");
    }
    ++next;
    p.tensors.emplace_back(
        rec.name, numgrad::Tensor::variable(rec.shape, rec.values, rec.name));
  }
  if (!have_canonical) {
    throw ValidationError("checkpoint: missing canonical shape record");
  }
  if (next != layout.size()) {
    throw ValidationError("checkpoint: parameter tensor set does not match the echoed config");
  }
  if (!p.all_finite()) throw ValidationError("checkpoint: non-finite parameter values");
  return p;
}

}  // namespace emolign::train
