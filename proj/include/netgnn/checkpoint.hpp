#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "netgnn/autodiff/params.hpp"
#include "netgnn/model.hpp"

namespace netgnn {

inline constexpr int kCheckpointVersion = 1;

enum class Target { delay, jitter };
std::string to_string(Target t);
Target target_from_string(const std::string& s);

// z-score applied to labels before the loss.
struct LabelNorm {
  double mean = 0.0;
  double stddev = 1.0;

  double forward(double y) const { return (y - mean) / stddev; }
  double inverse(double z) const { return z * stddev + mean; }
  bool operator==(const LabelNorm&) const = default;
};

struct Checkpoint {
  ModelConfig config;
  ad::ParamStore<float> params;
  LabelNorm label_norm;
  Target target = Target::delay;
  std::int64_t step = 0;
};

// File layout: magic "NETGNNCK", u32 LE manifest length, UTF-8 JSON manifest
// (format version, config, tensor names/shapes, payload CRC-32), then the
// payload: every tensor's values followed by its two Adam moments as
// little-endian float32, row-major, in manifest order.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws MissingFileError, DataError (corrupt/truncated/CRC mismatch) or
// VersionError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Serialized bytes, as written by save_checkpoint.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

// MC-dropout prediction in label units (z-score undone).
PredictiveDistribution predict_labels(const Checkpoint& ckpt, const InstanceEncoding& enc, int n_samples,
                                      std::uint64_t seed);
std::vector<double> predict_labels(const Checkpoint& ckpt, const InstanceEncoding& enc);

}  // namespace netgnn
