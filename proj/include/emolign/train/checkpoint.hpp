#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "emolign/model/params.hpp"
#include "emolign/numgrad/adam.hpp"

namespace emolign::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[9] = "EMOLCKPT";

struct TensorRecord {
  std::string name;
  std::vector<int> shape;
  numgrad::Array values;
};

struct AdamRecord {
  std::string name;
  long t = 0;
  numgrad::Array m, v;
};

// Everything needed to continue training bit-exactly: parameters, optimizer
// moments, the global epoch counter, best-validation bookkeeping and the
// serialized RNG stream.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_digest = 0;
  model::ModelConfig config;
  long epoch = 0;
  long best_epoch = 0;
  double best_val_total = std::numeric_limits<double>::infinity();
  std::string rng_state;  // mt19937_64 stream text
  std::vector<TensorRecord> tensors;
  std::vector<AdamRecord> adam;
};

// Little-endian binary: magic, version, digest, config echo, counters, RNG
// blob, tensor records (name, rank, dims, doubles), Adam records. Truncation
// errors carry the byte offset; unknown versions are refused.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds ModelParams from the records; shape/name mismatches against the
// echoed config are rejected.
model::ModelParams params_from_checkpoint(const Checkpoint& ckpt);

Checkpoint checkpoint_from_params(const model::ModelParams& params);

}  // namespace emolign::train
