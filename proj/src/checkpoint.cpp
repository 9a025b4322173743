// Copyright 2026 The linpfn Authors
// SPDX-License-Identifier: Apache-2.0

#include "linpfn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "linpfn/serialization.hpp"

namespace linpfn {

using nlohmann::json;

namespace {

constexpr std::size_t kPrefix = kCheckpointMagic.size() + 8;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

bool is_optimizer_name(const std::string& name) { return name.rfind("adam.", 0) == 0; }

json provenance_json(const Provenance& p) {
  return json{{"prior_seed", p.prior_seed}, {"steps", p.steps}, {"loss_curve", p.loss_curve}, {"info", p.info}};
}

}  // namespace

void Checkpoint::validate() const {
  config.validate();
  for (const auto& spec : parameter_specs(config)) {
    auto it = tensors.find(spec.name);
    if (it == tensors.end()) throw FormatError("manifest." + spec.name, "tensor missing");
    if (it->second.rows() != spec.rows || it->second.cols() != spec.cols)
      throw FormatError("manifest." + spec.name + ".shape",
                        "expected " + Matrix::shape_string(spec.rows, spec.cols) + ", got " + it->second.shape());
  }
  if (tensors.size() != parameter_specs(config).size()) {
    for (const auto& [name, m] : tensors) {
      bool known = false;
      for (const auto& spec : parameter_specs(config)) known = known || spec.name == name;
      if (!known) throw FormatError("manifest." + name, "tensor not part of the architecture");
    }
  }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ckpt.validate();
  json manifest = json::array();
  std::uint64_t offset = 0;
  std::vector<const Matrix*> order;
  auto add = [&](const std::string& name, const Matrix& m) {
    manifest.push_back(json{{"name", name}, {"shape", {m.rows(), m.cols()}}, {"offset", offset}});
    offset += 4 * m.size();
    order.push_back(&m);
  };
  for (const auto& spec : parameter_specs(ckpt.config)) add(spec.name, ckpt.tensors.at(spec.name));
  for (const auto& [name, m] : ckpt.optimizer) {
    if (!is_optimizer_name(name)) throw FormatError("manifest." + name, "optimizer tensors must start with 'adam.'");
    add(name, m);
  }
  const json header{{"format", 1},
                    {"config", to_json(ckpt.config)},
                    {"tensors", manifest},
                    {"data_bytes", offset},
                    {"provenance", provenance_json(ckpt.provenance)}};
  const std::string text = header.dump();
  std::string out(kCheckpointMagic);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const Matrix* m : order)
    for (double v : m->values()) put_f32(out, v);
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
    throw FormatError("magic", "file does not start with TFLX1");
  if (bytes.size() < kPrefix) throw FormatError("header_length", "file truncated before header length");
  const std::uint64_t header_len = get_u64(bytes.substr(kCheckpointMagic.size(), 8));
  if (header_len > bytes.size() - kPrefix) throw FormatError("header_length", "header extends past end of file");
  json header;
  try {
    header = json::parse(bytes.substr(kPrefix, header_len));
  } catch (const json::exception& e) {
    throw FormatError("header", e.what());
  }
  if (!header.is_object()) throw FormatError("header", "expected a JSON object");
  using json_detail::field;
  if (field<int>(header, "format", "header") != 1) throw FormatError("header.format", "unsupported version");

  Checkpoint ckpt;
  ckpt.config = model_config_from_json(header.contains("config") ? header["config"] : json(), "config");

  const std::string_view data = bytes.substr(kPrefix + header_len);
  const auto data_bytes = field<std::uint64_t>(header, "data_bytes", "header");
  if (data.size() != data_bytes)
    throw FormatError("data", "expected " + std::to_string(data_bytes) + " data bytes, found " +
                                  std::to_string(data.size()));

  if (!header.contains("tensors") || !header["tensors"].is_array()) throw FormatError("tensors", "manifest missing");
  std::uint64_t expected_offset = 0;
  std::size_t index = 0;
  for (const auto& entry : header["tensors"]) {
    const std::string at = "tensors[" + std::to_string(index++) + "]";
    const auto name = field<std::string>(entry, "name", at);
    const auto shape = field<std::vector<std::size_t>>(entry, "shape", at);
    const auto off = field<std::uint64_t>(entry, "offset", at);
    if (shape.size() != 2) throw FormatError("manifest." + name + ".shape", "expected [rows, cols]");
    if (off != expected_offset)
      throw FormatError("manifest." + name + ".offset", "expected " + std::to_string(expected_offset));
    const std::uint64_t count = static_cast<std::uint64_t>(shape[0]) * shape[1];
    if (off + 4 * count > data.size()) throw FormatError("manifest." + name + ".offset", "tensor extends past data");
    Matrix m(shape[0], shape[1]);
    for (std::uint64_t i = 0; i < count; ++i) m[i] = get_f32(data.data() + off + 4 * i);
    expected_offset = off + 4 * count;
    TensorMap& dst = is_optimizer_name(name) ? ckpt.optimizer : ckpt.tensors;
    if (!dst.emplace(name, std::move(m)).second) throw FormatError("manifest." + name, "duplicate tensor");
  }
  if (expected_offset != data.size()) throw FormatError("data", "trailing bytes after last tensor");
  ckpt.validate();

  const json prov = header.contains("provenance") ? header["provenance"] : json();
  ckpt.provenance.prior_seed = field<std::uint64_t>(prov, "prior_seed", "provenance");
  ckpt.provenance.steps = field<std::size_t>(prov, "steps", "provenance");
  ckpt.provenance.loss_curve = field<std::vector<double>>(prov, "loss_curve", "provenance");
  ckpt.provenance.info = prov.contains("info") ? prov["info"] : json::object();
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace linpfn
