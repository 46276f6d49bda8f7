// Copyright 2026 The FastDoc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fastdoc/encoder/model.hpp"
#include "fastdoc/errors.hpp"
#include "fastdoc/io.hpp"
#include "fastdoc/numcore/optim.hpp"

namespace fastdoc {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr std::string_view kCheckpointMagic{"FDOCCKPT", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// One named parameter tensor as stored on disk.
struct TensorBlob {
  std::string name;
  std::string group;
  bool frozen = false;
  Shape shape;
  std::vector<float> values;

  bool operator==(const TensorBlob&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  /// Always holds "model"; callers may echo further run configuration.
  nlohmann::json config;
  std::vector<TensorBlob> tensors;
  std::optional<AdamWState<float>> optimizer;
  std::uint64_t digest = 0;

  const TensorBlob* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["d_model"] = c.d_model;
  j["num_heads"] = c.num_heads;
  j["num_layers"] = c.num_layers;
  j["d_ff"] = c.d_ff;
  j["lower_layers"] = c.lower_layers;
  j["vocab_size"] = c.vocab_size;
  j["max_positions"] = c.max_positions;
  j["max_sentences"] = c.max_sentences;
  j["seed"] = c.seed;
  j["upper_seed"] = c.upper_seed ? nlohmann::json(*c.upper_seed) : nlohmann::json(nullptr);
  j["level_classes"] = c.level_classes;
  j["lora"] = {{"rank", c.lora.rank}, {"targets", c.lora.targets}};
  return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.d_model = j.at("d_model").get<std::size_t>();
    c.num_heads = j.at("num_heads").get<std::size_t>();
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.lower_layers = j.at("lower_layers").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_positions = j.at("max_positions").get<std::size_t>();
    c.max_sentences = j.at("max_sentences").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("upper_seed").is_null()) c.upper_seed = j.at("upper_seed").get<std::uint64_t>();
    c.level_classes = j.at("level_classes").get<std::vector<std::size_t>>();
    c.lora.rank = j.at("lora").at("rank").get<std::size_t>();
    c.lora.targets = j.at("lora").at("targets").get<std::vector<std::string>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint model config is malformed: ") + e.what());
  }
}

/// Current values of every model parameter, in named_parameters() order.
template <class T>
std::vector<TensorBlob> snapshot(const FastDocModel<T>& model) {
  std::vector<TensorBlob> out;
  for (const auto& p : model.named_parameters()) {
    TensorBlob b{p.name, p.group, !p.tensor.requires_grad(), p.tensor.shape(), {}};
    b.values.reserve(p.tensor.numel());
    for (T v : p.tensor.data()) b.values.push_back(static_cast<float>(v));
    out.push_back(std::move(b));
  }
  return out;
}

template <class T>
Checkpoint make_checkpoint(const FastDocModel<T>& model, const AdamWState<float>* optimizer = nullptr,
                           const nlohmann::json& run_config = nlohmann::json::object()) {
  Checkpoint c;
  c.config = run_config.is_object() ? run_config : nlohmann::json::object();
  c.config["model"] = model_config_to_json(model.config());
  c.tensors = snapshot(model);
  if (optimizer) c.optimizer = *optimizer;
  return c;
}

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void floats(const std::vector<float>& v) { raw(v.data(), v.size() * sizeof(float)); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  void raw(void* p, std::size_t n) {
    if (n > bytes_.size() - pos_) throw CorruptionError("checkpoint is truncated");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  std::int64_t i64() { std::int64_t v; raw(&v, 8); return v; }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > bytes_.size() - pos_) throw CorruptionError("checkpoint is truncated");
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<float> floats(std::uint64_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(float)) throw CorruptionError("checkpoint is truncated");
    std::vector<float> v(n);
    raw(v.data(), n * sizeof(float));
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Layout: magic, u32 version, config JSON, tensors (name, group, frozen flag,
/// shape, float32 payload), optional optimizer moments, then a u64 FNV-1a
/// digest of every preceding byte. All integers little-endian.
inline std::string serialize_checkpoint(const Checkpoint& c) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(c.version);
  w.str(c.config.dump());
  w.u64(c.tensors.size());
  for (const auto& t : c.tensors) {
    w.str(t.name);
    w.str(t.group);
    w.u8(t.frozen ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    w.floats(t.values);
  }
  w.u8(c.optimizer ? 1 : 0);
  if (c.optimizer) {
    w.i64(c.optimizer->step);
    w.u64(c.optimizer->first_moment.size());
    for (const auto& [name, m] : c.optimizer->first_moment) {
      const auto it = c.optimizer->second_moment.find(name);
      const std::vector<float> empty;
      const auto& v = it == c.optimizer->second_moment.end() ? empty : it->second;
      w.str(name);
      w.u64(m.size());
      w.floats(m);
      w.floats(v.size() == m.size() ? v : std::vector<float>(m.size(), 0.0f));
    }
  }
  const std::uint64_t digest = fnv1a64(w.bytes());
  w.u64(digest);
  return std::move(w.bytes());
}

inline Checkpoint parse_checkpoint(std::string_view bytes) {
  const std::size_t header = kCheckpointMagic.size() + 4;
  if (bytes.size() < header || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw CorruptionError("not a FastDoc checkpoint (bad magic bytes)");
  }
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + kCheckpointMagic.size(), 4);
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("checkpoint format version " + std::to_string(version) +
                                  " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < header + 8) throw CorruptionError("checkpoint is truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);
  if (fnv1a64(body) != stored) throw CorruptionError("checkpoint digest mismatch (file is truncated or corrupt)");

  detail::ByteReader r(body.substr(header));
  Checkpoint c;
  c.version = version;
  c.digest = stored;
  try {
    c.config = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    TensorBlob t;
    t.name = r.str();
    t.group = r.str();
    t.frozen = r.u8() != 0;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw CorruptionError("tensor '" + t.name + "' has implausible rank " + std::to_string(rank));
    for (std::uint32_t k = 0; k < rank; ++k) t.shape.push_back(r.u64());
    t.values = r.floats(shape_numel(t.shape));
    c.tensors.push_back(std::move(t));
  }
  if (r.u8()) {
    AdamWState<float> s;
    s.step = r.i64();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::string name = r.str();
      const std::uint64_t len = r.u64();
      s.first_moment[name] = r.floats(len);
      s.second_moment[name] = r.floats(len);
    }
    c.optimizer = std::move(s);
  }
  if (!r.done()) throw CorruptionError("checkpoint has trailing bytes");
  if (!c.config.contains("model")) throw CorruptionError("checkpoint config has no model section");
  return c;
}

/// Returns the digest of the written file.
inline std::uint64_t save_checkpoint(const Checkpoint& c, const std::string& path) {
  const std::string bytes = serialize_checkpoint(c);
  write_file_atomic(path, bytes);
  std::uint64_t digest;
  std::memcpy(&digest, bytes.data() + bytes.size() - 8, 8);
  return digest;
}

template <class T>
std::uint64_t save_checkpoint(const FastDocModel<T>& model, const AdamWState<float>* optimizer,
                              const std::string& path, const nlohmann::json& run_config = nlohmann::json::object()) {
  return save_checkpoint(make_checkpoint(model, optimizer, run_config), path);
}

inline Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

/// Rebuilds the model from its configuration and restores every tensor. The
/// stored lower encoder must match the one regenerated from its seed.
inline FastDocModel<float> model_from_checkpoint(const Checkpoint& c) {
  FastDocModel<float> model(model_config_from_json(c.config.at("model")));
  auto params = model.named_parameters();
  if (params.size() != c.tensors.size()) {
    throw CorruptionError("checkpoint holds " + std::to_string(c.tensors.size()) + " tensors, model expects " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& blob = c.tensors[i];
    auto& p = params[i];
    if (blob.name != p.name || blob.shape != p.tensor.shape()) {
      throw CorruptionError("checkpoint tensor '" + blob.name + "' " + shape_str(blob.shape) +
                            " does not match model tensor '" + p.name + "' " + shape_str(p.tensor.shape()));
    }
    if (p.group.rfind("lower.", 0) == 0) {
      if (!std::equal(blob.values.begin(), blob.values.end(), p.tensor.data().begin())) {
        throw CorruptionError("lower encoder tensor '" + p.name + "' differs from its seeded construction");
      }
      continue;
    }
    auto dst = p.tensor.mutable_data();
    std::copy(blob.values.begin(), blob.values.end(), dst.begin());
    p.tensor.set_requires_grad(!blob.frozen);
  }
  return model;
}

}  // namespace fastdoc
