#include "netgnn/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "netgnn/dataset.hpp"
#include "netgnn/error.hpp"

namespace netgnn {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'N', 'E', 'T', 'G', 'N', 'N', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void append_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void append_floats(std::string& out, const std::vector<float>& values) {
  const auto* bytes = reinterpret_cast<const char*>(values.data());
  out.append(bytes, values.size() * sizeof(float));
}

std::uint32_t crc32_of(const std::string& bytes, std::size_t offset) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + offset),
              static_cast<uInt>(bytes.size() - offset));
  return static_cast<std::uint32_t>(crc);
}

json config_to_json(const ModelConfig& c) {
  return {{"dim_hp", c.dim_hp},           {"dim_hl", c.dim_hl},
          {"iterations", c.iterations},   {"readout_width", c.readout_width},
          {"dropout", c.dropout},         {"feature_scale", c.feature_scale}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.dim_hp = j.at("dim_hp").get<int>();
  c.dim_hl = j.at("dim_hl").get<int>();
  c.iterations = j.at("iterations").get<int>();
  c.readout_width = j.at("readout_width").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.feature_scale = j.at("feature_scale").get<double>();
  c.validate();
  return c;
}

}  // namespace

std::string to_string(Target t) { return t == Target::delay ? "delay" : "jitter"; }

Target target_from_string(const std::string& s) {
  if (s == "delay") return Target::delay;
  if (s == "jitter") return Target::jitter;
  throw ConfigError("unknown target '" + s + "' (expected delay or jitter)");
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string payload;
  json tensors = json::array();
  for (const auto& p : ckpt.params) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"regularized", p.regularized}});
    append_floats(payload, p.value.values());
    append_floats(payload, p.first_moment.values());
    append_floats(payload, p.second_moment.values());
  }
  json manifest = {{"format_version", kCheckpointVersion},
                   {"config", config_to_json(ckpt.config)},
                   {"target", to_string(ckpt.target)},
                   {"label_mean", ckpt.label_norm.mean},
                   {"label_std", ckpt.label_norm.stddev},
                   {"step", ckpt.step},
                   {"adam_step", ckpt.params.step},
                   {"tensors", tensors},
                   {"payload_bytes", payload.size()},
                   {"payload_crc32", crc32_of(payload, 0)}};
  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof kMagic);
  append_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) {
    len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[sizeof kMagic + i])) << (8 * i);
  }
  const std::size_t header_end = sizeof kMagic + 4 + len;
  if (header_end > bytes.size()) throw DataError("corrupt checkpoint: truncated manifest");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(sizeof kMagic + 4, len));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint manifest: ") + e.what());
  }
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw VersionError("checkpoint format version " + std::to_string(version) + " unsupported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
    }
    const auto payload_bytes = manifest.at("payload_bytes").get<std::size_t>();
    if (bytes.size() - header_end != payload_bytes) throw DataError("corrupt checkpoint: payload size mismatch");
    if (crc32_of(bytes, header_end) != manifest.at("payload_crc32").get<std::uint32_t>()) {
      throw DataError("corrupt checkpoint: payload CRC mismatch");
    }
    Checkpoint ckpt;
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.target = target_from_string(manifest.at("target").get<std::string>());
    ckpt.label_norm = {manifest.at("label_mean").get<double>(), manifest.at("label_std").get<double>()};
    ckpt.step = manifest.at("step").get<std::int64_t>();
    std::size_t at = header_end;
    auto read = [&](const ad::Shape& shape) {
      ad::Tensor<float> t(shape);
      const std::size_t n = t.size() * sizeof(float);
      if (at + n > bytes.size()) throw DataError("corrupt checkpoint: payload shorter than manifest");
      std::memcpy(t.data(), bytes.data() + at, n);
      at += n;
      return t;
    };
    for (const json& t : manifest.at("tensors")) {
      auto shape = t.at("shape").get<ad::Shape>();
      std::size_t i = ckpt.params.add(t.at("name").get<std::string>(), read(shape), t.at("regularized").get<bool>());
      ckpt.params[i].first_moment = read(shape);
      ckpt.params[i].second_moment = read(shape);
    }
    ckpt.params.step = manifest.at("adam_step").get<std::int64_t>();
    // Structural check: every tensor the model needs is present with the right shape.
    auto reference = init_params<float>(ckpt.config, 0);
    if (reference.size() != ckpt.params.size()) throw DataError("checkpoint tensor set does not match config");
    for (const auto& p : reference) {
      if (!ckpt.params.value(p.name).same_shape(p.value)) {
        throw DataError("checkpoint tensor '" + p.name + "' has the wrong shape");
      }
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint manifest: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  AtomicFileWriter w(path, true);
  w.stream() << serialize_checkpoint(ckpt);
  w.commit();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

PredictiveDistribution predict_labels(const Checkpoint& ckpt, const InstanceEncoding& enc, int n_samples,
                                      std::uint64_t seed) {
  auto dist = predict_mc(ckpt.params, ckpt.config, enc, n_samples, seed);
  auto undo = [&](std::vector<double>& v) {
    for (double& x : v) x = ckpt.label_norm.inverse(x);
  };
  for (auto& s : dist.samples) undo(s);
  undo(dist.median);
  undo(dist.lower);
  undo(dist.upper);
  return dist;
}

std::vector<double> predict_labels(const Checkpoint& ckpt, const InstanceEncoding& enc) {
  auto y = predict(ckpt.params, ckpt.config, enc);
  for (double& x : y) x = ckpt.label_norm.inverse(x);
  return y;
}

}  // namespace netgnn
