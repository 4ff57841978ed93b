#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "checks.hpp"
#include "doctest.h"
#include "json.hpp"
#include "netgnn/checkpoint.hpp"
#include "netgnn/error.hpp"
#include "oracles.hpp"

using namespace netgnn;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.config.feature_scale = 2.5;
  c.params = init_params<float>(c.config, 4);
  c.params[0].first_moment[3] = 0.125f;
  c.params[1].second_moment[0] = 7.0f;
  c.params.step = 17;
  c.label_norm = {0.75, 0.3};
  c.target = Target::jitter;
  c.step = 1234;
  return c;
}

// Payload starts after magic, length prefix and manifest.
std::size_t payload_offset(const std::string& bytes) {
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  return 12 + len;
}

}  // namespace

TEST_CASE("library CRC-32 agrees with the bitwise oracle") {
  const std::string text = "123456789";
  CHECK(oracle::crc32(reinterpret_cast<const unsigned char*>(text.data()), text.size()) == 0xCBF43926u);
  Rng rng(1);
  std::string blob(4097, '\0');
  for (char& c : blob) c = static_cast<char>(rng() & 0xff);
  const auto z = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(blob.data()), static_cast<uInt>(blob.size()));
  CHECK(oracle::crc32(reinterpret_cast<const unsigned char*>(blob.data()), blob.size()) == z);
}

TEST_CASE("checkpoints round-trip byte for byte") {
  Checkpoint c = sample_checkpoint();
  const std::string bytes = serialize_checkpoint(c);
  CHECK(bytes.substr(0, 8) == "NETGNNCK");
  Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(back.config == c.config);
  CHECK(back.label_norm == c.label_norm);
  CHECK(back.target == c.target);
  CHECK(back.step == c.step);
  CHECK(back.params.step == 17);
  REQUIRE(back.params.size() == c.params.size());
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    CHECK(back.params[i].name == c.params[i].name);
    CHECK(back.params[i].regularized == c.params[i].regularized);
    CHECK(back.params[i].value == c.params[i].value);
    CHECK(back.params[i].first_moment == c.params[i].first_moment);
    CHECK(back.params[i].second_moment == c.params[i].second_moment);
  }
  CHECK(serialize_checkpoint(back) == bytes);

  // The stored CRC covers exactly the payload.
  const std::size_t off = payload_offset(bytes);
  const auto manifest = nlohmann::json::parse(bytes.substr(12, off - 12));
  CHECK(manifest.at("payload_crc32").get<std::uint32_t>() ==
        oracle::crc32(reinterpret_cast<const unsigned char*>(bytes.data()) + off, bytes.size() - off));
}

TEST_CASE("damaged checkpoints are rejected") {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  std::string flipped = bytes;
  flipped[flipped.size() - 5] ^= 0x10;
  CHECK_THROWS_AS(deserialize_checkpoint(flipped), DataError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 4)), DataError);
  CHECK_THROWS_AS(deserialize_checkpoint("NETGNNXX" + bytes.substr(8)), DataError);
  CHECK_THROWS_AS(deserialize_checkpoint(""), DataError);
}

TEST_CASE("a different format version is a version error") {
  const std::string bytes = serialize_checkpoint(sample_checkpoint());
  const std::size_t off = payload_offset(bytes);
  auto manifest = nlohmann::json::parse(bytes.substr(12, off - 12));
  manifest["format_version"] = kCheckpointVersion + 1;
  const std::string text = manifest.dump();
  std::string out = bytes.substr(0, 8);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
  out += text + bytes.substr(off);
  CHECK_THROWS_AS(deserialize_checkpoint(out), VersionError);
}

TEST_CASE("checkpoint files") {
  auto dir = fs::temp_directory_path() / "netgnn_test_ckpt";
  fs::remove_all(dir);
  Checkpoint c = sample_checkpoint();
  save_checkpoint(c, dir / "m.ckpt");
  CHECK(load_checkpoint(dir / "m.ckpt").params.value("readout.w1") == c.params.value("readout.w1"));
  CHECK_THROWS_AS(load_checkpoint(dir / "none.ckpt"), MissingFileError);
}

TEST_CASE("label predictions undo the standardization") {
  Checkpoint c = sample_checkpoint();
  auto inst = checks::random_instance(3);
  auto enc = InstanceEncoding::from_network(inst.topology, inst.routing, inst.tm, c.config.feature_scale);
  auto raw = predict(c.params, c.config, enc);
  auto y = predict_labels(c, enc);
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(y[i] == doctest::Approx(raw[i] * 0.3 + 0.75));
  auto mc = predict_labels(c, enc, 10, 1);
  auto mraw = predict_mc(c.params, c.config, enc, 10, 1);
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(mc.median[i] == doctest::Approx(mraw.median[i] * 0.3 + 0.75));
}
