// SPDX-License-Identifier: Apache-2.0
#include "beamcast/io.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>

namespace beamcast {

namespace {

std::uint64_t header_hash(Json header) {
  header.erase("header_hash");
  return fnv1a(header.dump());
}

std::uint64_t payload_hash(std::span<const unsigned char> payload) { return fnv1a(payload); }

void append_matrix(std::vector<unsigned char>& out, const ComplexMatrix& m, Eigen::Index rows,
                   Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const cdouble z = m.size() ? m(r, c) : cdouble(0, 0);
      const double parts[2] = {z.real(), z.imag()};
      const auto* p = reinterpret_cast<const unsigned char*>(parts);
      out.insert(out.end(), p, p + sizeof(parts));
    }
}

ComplexMatrix read_matrix(const unsigned char*& p, Eigen::Index rows, Eigen::Index cols) {
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double parts[2];
      std::memcpy(parts, p, sizeof(parts));
      p += sizeof(parts);
      m(r, c) = cdouble(parts[0], parts[1]);
    }
  return m;
}

}  // namespace

void write_container(const std::string& path, const std::string& magic, Json header,
                     std::span<const unsigned char> payload) {
  header["payload_checksum"] = payload_hash(payload);
  header["payload_bytes"] = payload.size();
  header["header_hash"] = header_hash(header);
  const std::string text = header.dump();
  const std::uint64_t len = text.size();

  const std::filesystem::path target(path);
  const std::filesystem::path tmp =
      target.string() + ".tmp." + std::to_string(static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw IoError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, target);
}

RawFile read_container(const std::string& path, const std::string& magic, int schema_version) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < magic.size() + sizeof(std::uint64_t) ||
      !std::equal(magic.begin(), magic.end(), bytes.begin()))
    throw CorruptFileError(path + ": not a " + magic.substr(0, magic.size() - 1) + " file");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + magic.size(), sizeof(len));
  const std::size_t start = magic.size() + sizeof(len);
  if (len > bytes.size() - start) throw CorruptFileError(path + ": header is truncated");

  RawFile f;
  try {
    f.header = Json::parse(bytes.begin() + static_cast<long>(start),
                           bytes.begin() + static_cast<long>(start + len));
  } catch (const Json::exception& e) {
    throw CorruptFileError(path + ": unreadable header: " + e.what());
  }
  try {
    if (f.header.at("header_hash").get<std::uint64_t>() != header_hash(f.header))
      throw CorruptFileError(path + ": header hash mismatch");
    const int version = f.header.at("schema_version").get<int>();
    if (version != schema_version)
      throw VersionError(path + ": schema version " + std::to_string(version) +
                         " is not supported (expected " + std::to_string(schema_version) +
                         "); files are not migrated automatically");
    const std::size_t expected = f.header.at("payload_bytes").get<std::size_t>();
    const std::size_t actual = bytes.size() - start - len;
    if (actual != expected)
      throw CorruptFileError(path + ": payload is " + std::to_string(actual) + " bytes, header says " +
                             std::to_string(expected));
    f.payload.assign(bytes.begin() + static_cast<long>(start + len), bytes.end());
    if (payload_hash(f.payload) != f.header.at("payload_checksum").get<std::uint64_t>())
      throw CorruptFileError(path + ": payload checksum mismatch");
  } catch (const Json::exception& e) {
    throw CorruptFileError(path + ": malformed header: " + e.what());
  }
  return f;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  const auto& c = ds.config;
  const auto hi = static_cast<Eigen::Index>(c.n_high);
  const auto lo = static_cast<Eigen::Index>(c.n_low);
  const auto k = static_cast<Eigen::Index>(c.n_users);
  std::vector<unsigned char> payload;
  Json meta = Json::array();
  for (const auto& s : ds.samples) {
    if (s.h_real.rows() != hi || s.h_real.cols() != k || s.h_low.rows() != lo)
      throw DimensionError("sample " + std::to_string(s.index) + " does not match the scenario");
    append_matrix(payload, s.h_real, hi, k);
    append_matrix(payload, s.h_low, lo, k);
    append_matrix(payload, ds.labeled ? s.v_real : ComplexMatrix(), hi, k);
    append_matrix(payload, ds.labeled ? s.v_low : ComplexMatrix(), lo, k);
    meta.push_back({{"seed", s.seed}, {"index", s.index}, {"path_loss", s.path_loss}});
  }
  Json header = {{"kind", "dataset"},
                 {"schema_version", kDatasetSchemaVersion},
                 {"scenario", to_json(c)},
                 {"count", ds.samples.size()},
                 {"seed", ds.seed},
                 {"labeled", ds.labeled},
                 {"train", ds.train},
                 {"test", ds.test},
                 {"record_doubles", 4 * (hi + lo) * k},
                 {"samples", meta}};
  write_container(path, "BEAMCAST-DATASET\n", std::move(header), payload);
}

Dataset load_dataset(const std::string& path) {
  const RawFile f = read_container(path, "BEAMCAST-DATASET\n", kDatasetSchemaVersion);
  const Json& h = f.header;
  Dataset ds;
  try {
    merge_json(h.at("scenario"), ds.config);
    const std::size_t count = h.at("count").get<std::size_t>();
    ds.seed = h.at("seed").get<std::uint64_t>();
    ds.labeled = h.at("labeled").get<bool>();
    ds.train = h.at("train").get<std::vector<std::size_t>>();
    ds.test = h.at("test").get<std::vector<std::size_t>>();
    const auto hi = static_cast<Eigen::Index>(ds.config.n_high);
    const auto lo = static_cast<Eigen::Index>(ds.config.n_low);
    const auto k = static_cast<Eigen::Index>(ds.config.n_users);
    const std::size_t record = static_cast<std::size_t>(4 * (hi + lo) * k);
    if (h.at("record_doubles").get<std::size_t>() != record)
      throw CorruptFileError(path + ": record size does not match the scenario dimensions");
    if (f.payload.size() != count * record * sizeof(double))
      throw CorruptFileError(path + ": payload length does not match sample count");
    const Json& meta = h.at("samples");
    if (meta.size() != count) throw CorruptFileError(path + ": sample metadata count mismatch");
    for (std::size_t i : ds.train)
      if (i >= count) throw CorruptFileError(path + ": split index out of range");
    for (std::size_t i : ds.test)
      if (i >= count) throw CorruptFileError(path + ": split index out of range");
    const unsigned char* p = f.payload.data();
    ds.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto& s = ds.samples[i];
      s.h_real = read_matrix(p, hi, k);
      s.h_low = read_matrix(p, lo, k);
      s.v_real = read_matrix(p, hi, k);
      s.v_low = read_matrix(p, lo, k);
      if (!ds.labeled) {
        s.v_real.resize(0, 0);
        s.v_low.resize(0, 0);
      }
      s.seed = meta[i].at("seed").get<std::uint64_t>();
      s.index = meta[i].at("index").get<std::size_t>();
      s.path_loss = meta[i].at("path_loss").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    throw CorruptFileError(path + ": malformed dataset header: " + e.what());
  }
  return ds;
}

Precision checkpoint_precision(const std::string& path) {
  const RawFile f = read_container(path, "BEAMCAST-CHECKPOINT\n", kCheckpointSchemaVersion);
  try {
    return parse_precision(f.header.at("precision").get<std::string>());
  } catch (const Json::exception& e) {
    throw CorruptFileError(path + ": malformed checkpoint header: " + e.what());
  }
}

}  // namespace beamcast
