#pragma once

// On-disk formats.
//
// Dataset: JSON Lines. First line is a header
//   {"classes":[...],"format":"plabel-v1","provenance":"..."}
// followed by one object per sample
//   {"candidates":[2,5],"id":"s000042","payload":{"row":42},"true_label":5}
// Candidates are stored sorted ascending; payload is either a string path
// or {"row": n}; true_label is null when unknown.
//
// Embeddings: a directory holding meta.json
//   {"dim":D,"dtype":"f32le","normalized":true,"rows":N}
// plus data.bin with N*D little-endian 32-bit floats, row-major.

#include <bit>
#include <filesystem>
#include <fstream>
#include <string>

#include "plabel/types.hpp"

namespace plabel {

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian; big-endian hosts unsupported");

inline constexpr const char* kDatasetFormat = "plabel-v1";

namespace detail {

inline nlohmann::json payload_to_json(const Payload& p) {
  if (payload_is_row(p)) return nlohmann::json{{"row", payload_row(p)}};
  return nlohmann::json(std::get<std::string>(p));
}

inline Payload payload_from_json(const nlohmann::json& j) {
  if (j.is_string()) return Payload(j.get<std::string>());
  if (j.is_object() && j.contains("row") && j["row"].is_number_integer()) {
    return Payload(j["row"].get<std::int64_t>());
  }
  throw DataError("payload must be a string or {\"row\": n}");
}

}  // namespace detail

inline void save_dataset(const PartialLabelDataset& ds,
                         const std::filesystem::path& path) {
  validate_dataset(ds);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());

  nlohmann::json header{{"format", kDatasetFormat},
                        {"classes", ds.label_space.class_names},
                        {"provenance", to_string(ds.provenance)}};
  if (!ds.meta.is_null() && !ds.meta.empty()) header["meta"] = ds.meta;
  out << header.dump() << '\n';

  for (const auto& s : ds.samples) {
    nlohmann::json line{{"id", s.id},
                        {"payload", detail::payload_to_json(s.payload)},
                        {"candidates", s.candidates.indices()}};
    if (s.true_label) {
      line["true_label"] = *s.true_label;
    } else {
      line["true_label"] = nullptr;
    }
    out << line.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

inline PartialLabelDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());

  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty()) return true;
    }
    return false;
  };

  auto parse = [&](const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
      throw DataError("parse error at line " + std::to_string(lineno) +
                      " of " + path.string());
    }
    return j;
  };

  if (!next_line()) throw DataError("empty dataset file: " + path.string());
  nlohmann::json header = parse(line);
  if (!header.is_object() || header.value("format", "") != kDatasetFormat) {
    throw DataError("line 1: missing or unknown format header (want \"" +
                    std::string(kDatasetFormat) + "\")");
  }

  PartialLabelDataset ds;
  ds.label_space =
      LabelSpace::make(header.at("classes").get<std::vector<std::string>>());
  ds.provenance =
      provenance_from_string(header.at("provenance").get<std::string>());
  if (header.contains("meta")) ds.meta = header["meta"];
  const int C = ds.label_space.num_classes();

  while (next_line()) {
    nlohmann::json j = parse(line);
    Sample s;
    try {
      s.id = j.at("id").get<std::string>();
      s.payload = detail::payload_from_json(j.at("payload"));
      s.candidates = CandidateSet::from_indices(
          j.at("candidates").get<std::vector<int>>(), C);
      const auto& tl = j.at("true_label");
      if (!tl.is_null()) s.true_label = tl.get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    ds.samples.push_back(std::move(s));
  }

  validate_dataset(ds);
  return ds;
}

inline void save_embeddings(const EmbeddingMatrix& m,
                            const std::filesystem::path& dir) {
  validate_embeddings(m);
  std::filesystem::create_directories(dir);

  nlohmann::json meta{{"rows", m.rows()},
                      {"dim", m.dim()},
                      {"dtype", "f32le"},
                      {"normalized", m.normalized}};
  std::ofstream mo(dir / "meta.json");
  if (!mo) throw DataError("cannot write " + (dir / "meta.json").string());
  mo << meta.dump(2) << '\n';

  std::ofstream bo(dir / "data.bin", std::ios::binary);
  if (!bo) throw DataError("cannot write " + (dir / "data.bin").string());
  bo.write(reinterpret_cast<const char*>(m.data.data()),
           static_cast<std::streamsize>(sizeof(float) * m.data.size()));
  if (!bo) throw DataError("write failed: " + (dir / "data.bin").string());
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& dir) {
  std::ifstream mi(dir / "meta.json");
  if (!mi) throw DataError("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta = nlohmann::json::parse(mi, nullptr, false);
  if (meta.is_discarded()) {
    throw DataError("parse error in " + (dir / "meta.json").string());
  }
  if (meta.value("dtype", "") != "f32le") {
    throw DataError("unsupported dtype in " + (dir / "meta.json").string());
  }
  const auto rows = meta.at("rows").get<Eigen::Index>();
  const auto dim = meta.at("dim").get<Eigen::Index>();
  if (rows < 0 || dim <= 0) throw DataError("bad rows/dim in meta.json");

  EmbeddingMatrix m;
  m.normalized = meta.value("normalized", false);
  m.data.resize(rows, dim);

  std::ifstream bi(dir / "data.bin", std::ios::binary);
  if (!bi) throw DataError("cannot open " + (dir / "data.bin").string());
  bi.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::uint64_t>(bi.tellg());
  const auto want = sizeof(float) * static_cast<std::uint64_t>(rows) *
                    static_cast<std::uint64_t>(dim);
  if (bytes != want) {
    throw DataError("data.bin has " + std::to_string(bytes) +
                    " bytes, expected " + std::to_string(want));
  }
  bi.seekg(0);
  bi.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(want));
  if (!bi) throw DataError("read failed: " + (dir / "data.bin").string());

  validate_embeddings(m);
  return m;
}

}  // namespace plabel
