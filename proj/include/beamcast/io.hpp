// SPDX-License-Identifier: Apache-2.0
//
// Dataset and checkpoint files.
//
// Layout of both:
//   magic line ("BEAMCAST-DATASET\n" or "BEAMCAST-CHECKPOINT\n")
//   u64 little-endian length of the JSON header
//   JSON header (UTF-8), including "header_hash" (FNV-1a of the header serialized without that
//   key) and "payload_checksum" (FNV-1a of the payload bytes)
//   payload
//
// Dataset payload: per sample, H_real, H_low, V_real, V_low as little-endian f64, each matrix
// row-major with interleaved (re, im). Unlabeled datasets store zero beamformers.
// Checkpoint payload: generator parameters, critic parameters, generator optimizer
// accumulators, critic optimizer accumulators, each in parameter order, in the declared
// precision.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "beamcast/config_json.hpp"
#include "beamcast/trainer.hpp"

namespace beamcast {

static_assert(std::endian::native == std::endian::little, "payloads are written in host order");

constexpr int kDatasetSchemaVersion = 1;
constexpr int kCheckpointSchemaVersion = 1;

/// Parsed container: header JSON plus raw payload bytes, both integrity-checked.
struct RawFile {
  Json header;
  std::vector<unsigned char> payload;
};

/// Writes atomically (temporary file in the same directory, then rename).
void write_container(const std::string& path, const std::string& magic, Json header,
                     std::span<const unsigned char> payload);
/// Throws CorruptFileError on magic/hash/length problems and VersionError on a schema mismatch.
RawFile read_container(const std::string& path, const std::string& magic, int schema_version);

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

template <typename T>
struct Checkpoint {
  TrainState<T> state;
  TrainConfig train;
  GanShape shape;
};

namespace detail {

template <typename T>
void append_tensor(std::vector<unsigned char>& out, const Tensor<T>& t) {
  const auto bytes = std::as_bytes(t.data());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  out.insert(out.end(), p, p + bytes.size());
}

template <typename T>
void read_tensor(const std::vector<unsigned char>& in, std::size_t& offset, Tensor<T>& t) {
  const std::size_t n = t.size() * sizeof(T);
  if (offset + n > in.size()) throw CorruptFileError("checkpoint payload is truncated");
  std::memcpy(t.data().data(), in.data() + offset, n);
  offset += n;
}

}  // namespace detail

template <typename T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
void save_checkpoint(const std::string& path, const TrainState<T>& st, const TrainConfig& cfg) {
  std::vector<unsigned char> payload;
  Json tensors = Json::array();
  auto add_set = [&](const ParameterSet<T>& ps, const char* group) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      tensors.push_back({{"group", group}, {"name", ps.name(i)}, {"shape", ps.var(i).shape()}});
      detail::append_tensor(payload, ps.var(i).value());
    }
  };
  auto add_acc = [&](const ParameterSet<T>& ps, const RmsProp<T>& opt, const char* group) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      tensors.push_back(
          {{"group", group}, {"name", ps.name(i)}, {"shape", opt.accumulators()[i].shape()}});
      detail::append_tensor(payload, opt.accumulators()[i]);
    }
  };
  add_set(st.gen, "gen");
  add_set(st.disc, "disc");
  add_acc(st.gen, st.gen_opt, "gen_rms");
  add_acc(st.disc, st.disc_opt, "disc_rms");
  Json header = {{"kind", "checkpoint"},
                 {"schema_version", kCheckpointSchemaVersion},
                 {"precision", precision_name<T>()},
                 {"gan", to_json(st.gen_arch.shape)},
                 {"train", to_json(cfg)},
                 {"gen_fingerprint", st.gen.layout_fingerprint()},
                 {"disc_fingerprint", st.disc.layout_fingerprint()},
                 {"epoch", st.epoch},
                 {"step", st.step},
                 {"rng_state", st.rng_state()},
                 {"tensors", tensors}};
  write_container(path, "BEAMCAST-CHECKPOINT\n", std::move(header), payload);
}

/// Reads the precision recorded in a checkpoint without loading tensors.
Precision checkpoint_precision(const std::string& path);

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  const RawFile f = read_container(path, "BEAMCAST-CHECKPOINT\n", kCheckpointSchemaVersion);
  const Json& h = f.header;
  try {
    if (h.at("precision").get<std::string>() != precision_name<T>())
      throw ConfigError("checkpoint precision is " + h.at("precision").get<std::string>() +
                        ", requested " + precision_name<T>());
    Checkpoint<T> ck;
    merge_json(h.at("gan"), ck.shape);
    merge_json(h.at("train"), ck.train);
    ck.state = init_train_state<T>(ck.shape, ck.train);
    auto& st = ck.state;
    if (st.gen.layout_fingerprint() != h.at("gen_fingerprint").get<std::uint64_t>() ||
        st.disc.layout_fingerprint() != h.at("disc_fingerprint").get<std::uint64_t>())
      throw CorruptFileError("checkpoint architecture fingerprint does not match its description");
    const Json& tensors = h.at("tensors");
    if (tensors.size() != 2 * (st.gen.size() + st.disc.size()))
      throw CorruptFileError("checkpoint tensor count does not match the architecture");
    std::size_t offset = 0;
    std::size_t k = 0;
    auto read_set = [&](ParameterSet<T>& ps, std::vector<Tensor<T>>* acc) {
      for (std::size_t i = 0; i < ps.size(); ++i, ++k) {
        if (tensors[k].at("name").get<std::string>() != ps.name(i) ||
            tensors[k].at("shape").get<Shape>() != ps.var(i).shape())
          throw CorruptFileError("checkpoint tensor " + std::to_string(k) +
                                 " does not match parameter " + ps.name(i));
        detail::read_tensor(f.payload, offset, acc ? (*acc)[i] : ps.var(i).mutable_value());
      }
    };
    read_set(st.gen, nullptr);
    read_set(st.disc, nullptr);
    read_set(st.gen, &st.gen_opt.accumulators());
    read_set(st.disc, &st.disc_opt.accumulators());
    if (offset != f.payload.size()) throw CorruptFileError("checkpoint payload has trailing bytes");
    st.epoch = h.at("epoch").get<std::size_t>();
    st.step = h.at("step").get<std::size_t>();
    st.set_rng_state(h.at("rng_state").get<std::string>());
    return ck;
  } catch (const Json::exception& e) {
    throw CorruptFileError(std::string("malformed checkpoint header: ") + e.what());
  }
}

/// Copies a loaded checkpoint into an existing state; rejects a different architecture.
template <typename T>
void restore(TrainState<T>& dst, const Checkpoint<T>& ck) {
  if (dst.gen.layout_fingerprint() != ck.state.gen.layout_fingerprint() ||
      dst.disc.layout_fingerprint() != ck.state.disc.layout_fingerprint())
    throw ConfigError("checkpoint architecture does not match the configured networks");
  const auto& src = ck.state;
  dst.gen = src.gen.clone();
  dst.disc = src.disc.clone();
  dst.gen_opt = src.gen_opt;
  dst.disc_opt = src.disc_opt;
  dst.rng = src.rng;
  dst.epoch = src.epoch;
  dst.step = src.step;
}

}  // namespace beamcast
