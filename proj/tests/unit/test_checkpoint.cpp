// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "linpfn/checkpoint.hpp"

namespace linpfn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ModelConfig tiny() {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.feature_capacity = 3;
  c.class_capacity = 2;
  c.max_prompt = 32;
  return c;
}

Checkpoint sample_checkpoint(bool with_optimizer) {
  Checkpoint ck;
  ck.config = tiny();
  ck.tensors = init_parameters(ck.config, 11);
  if (with_optimizer) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (const auto& s : parameter_specs(ck.config)) {
      Matrix m(s.rows, s.cols), v(s.rows, s.cols);
      for (auto& x : m.values()) x = n(rng);
      for (auto& x : v.values()) x = std::abs(n(rng));
      round_to_f32(m);
      round_to_f32(v);
      ck.optimizer.emplace("adam.m." + s.name, std::move(m));
      ck.optimizer.emplace("adam.v." + s.name, std::move(v));
    }
  }
  ck.provenance.prior_seed = 42;
  ck.provenance.steps = 3;
  ck.provenance.loss_curve = {0.7, 0.65, 0.125};
  ck.provenance.info = json{{"learning_rate", 3e-4}};
  return ck;
}

// Splits a serialized checkpoint into its JSON header and data section.
std::pair<json, std::string> split(const std::string& bytes) {
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[5 + i])) << (8 * i);
  return {json::parse(bytes.substr(13, len)), bytes.substr(13 + len)};
}

std::string join(const json& header, const std::string& data) {
  const std::string h = header.dump();
  std::string out(kCheckpointMagic);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((h.size() >> (8 * i)) & 0xff));
  return out + h + data;
}

std::string field_of(const std::string& bytes) {
  try {
    parse_checkpoint(bytes);
  } catch (const FormatError& e) {
    return e.field();
  }
  return "<no error>";
}

class CheckpointFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("linpfn_ckpt_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string read_all(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

TEST_F(CheckpointFile, SaveLoadSaveIsByteIdentical) {
  for (bool opt : {false, true}) {
    const Checkpoint ck = sample_checkpoint(opt);
    save_checkpoint(ck, dir_ / "a.tflx");
    const Checkpoint back = load_checkpoint(dir_ / "a.tflx");
    save_checkpoint(back, dir_ / "b.tflx");
    EXPECT_EQ(read_all(dir_ / "a.tflx"), read_all(dir_ / "b.tflx"));
    EXPECT_TRUE(back.config == ck.config);
    EXPECT_EQ(back.provenance, ck.provenance);
    EXPECT_EQ(back.optimizer.size(), ck.optimizer.size());
    for (const auto& [name, m] : ck.tensors) EXPECT_TRUE(back.tensors.at(name) == m) << name;
  }
}

TEST_F(CheckpointFile, MissingFileIsAnError) {
  EXPECT_THROW(load_checkpoint(dir_ / "nope.tflx"), Error);
}

TEST(Checkpoint, LayoutStartsWithMagicAndLength) {
  const std::string bytes = serialize_checkpoint(sample_checkpoint(false));
  EXPECT_EQ(bytes.substr(0, 5), "TFLX1");
  const auto [header, data] = split(bytes);
  EXPECT_EQ(header["data_bytes"].get<std::size_t>(), data.size());
  std::size_t floats = 0;
  for (const auto& s : parameter_specs(tiny())) floats += s.rows * s.cols;
  EXPECT_EQ(data.size(), 4 * floats);
}

TEST(Checkpoint, F64ValuesAreStoredAsF32) {
  Checkpoint ck = sample_checkpoint(false);
  ck.tensors.begin()->second[0] = 0.1;
  const Checkpoint back = parse_checkpoint(serialize_checkpoint(ck));
  EXPECT_EQ(back.tensors.begin()->second[0], static_cast<double>(0.1f));
}

TEST(Checkpoint, TruncationIsRejectedAtEveryLength) {
  const std::string bytes = serialize_checkpoint(sample_checkpoint(true));
  for (std::size_t len = 0; len < bytes.size(); len += std::max<std::size_t>(1, bytes.size() / 97)) {
    EXPECT_THROW(parse_checkpoint(std::string_view(bytes).substr(0, len)), FormatError) << len;
  }
  EXPECT_EQ(field_of(bytes.substr(0, 3)), "magic");
  EXPECT_EQ(field_of(bytes.substr(0, 9)), "header_length");
  EXPECT_EQ(field_of(bytes.substr(0, bytes.size() - 4)), "data");
}

TEST(Checkpoint, BadMagicNamesTheField) {
  std::string bytes = serialize_checkpoint(sample_checkpoint(false));
  bytes[4] = '2';
  EXPECT_EQ(field_of(bytes), "magic");
}

TEST(Checkpoint, ManifestShapeMismatchNamesTheTensor) {
  const auto [header, data] = split(serialize_checkpoint(sample_checkpoint(false)));
  json h = header;
  h["config"]["d_model"] = 10;
  h["config"]["n_heads"] = 2;
  const std::string f = field_of(join(h, data));
  EXPECT_EQ(f.rfind("manifest.", 0), 0u) << f;
  EXPECT_NE(f.find(".shape"), std::string::npos) << f;

  Checkpoint ck = sample_checkpoint(false);
  ck.tensors.begin()->second = Matrix(1, 1);
  try {
    ck.validate();
    FAIL() << "validate accepted a bad shape";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.field(), "manifest." + ck.tensors.begin()->first + ".shape");
  }
}

TEST(Checkpoint, MissingAndUnknownTensors) {
  auto [header, data] = split(serialize_checkpoint(sample_checkpoint(false)));
  json h = header;
  const std::string first = h["tensors"][0]["name"];
  h["tensors"][0]["name"] = "bogus";
  EXPECT_EQ(field_of(join(h, data)).rfind("manifest.", 0), 0u);

  Checkpoint ck = sample_checkpoint(false);
  ck.tensors.erase(first);
  try {
    ck.validate();
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.field(), "manifest." + first);
  }
}

TEST(Checkpoint, HeaderCorruption) {
  auto [header, data] = split(serialize_checkpoint(sample_checkpoint(false)));
  json h = header;
  h["format"] = 7;
  EXPECT_EQ(field_of(join(h, data)), "header.format");
  h = header;
  h["tensors"][1]["offset"] = 0;
  EXPECT_NE(field_of(join(h, data)).find(".offset"), std::string::npos);
  h = header;
  h.erase("tensors");
  EXPECT_EQ(field_of(join(h, data)), "tensors");
  EXPECT_EQ(field_of(join(json::array(), data)), "header");
  std::string bad = join(header, data);
  bad[14] = '#';
  EXPECT_EQ(field_of(bad), "header");
  EXPECT_EQ(field_of(join(header, data + "xxxx")), "data");
}

}  // namespace
}  // namespace linpfn
