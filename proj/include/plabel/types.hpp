#pragma once

// Domain types shared by every module: label spaces, candidate sets,
// samples, datasets and embedding matrices.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace plabel {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using MatF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Config / validation problems. The CLI maps these to exit code 2,
// everything else to 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent data files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LabelSpace {
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }

  static LabelSpace make(std::vector<std::string> names) {
    if (names.size() < 2) {
      throw ConfigError("label space needs at least 2 classes, got " +
                        std::to_string(names.size()));
    }
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (n.empty()) throw ConfigError("empty class name");
      if (!seen.insert(n).second) {
        throw ConfigError("duplicate class name: " + n);
      }
    }
    return LabelSpace{std::move(names)};
  }

  bool operator==(const LabelSpace&) const = default;
};

// Candidate label set Y: stored as sorted ascending unique indices,
// expanded to bit vectors on demand.
class CandidateSet {
 public:
  CandidateSet() = default;

  static CandidateSet from_indices(std::vector<int> idx, int num_classes) {
    if (idx.empty()) throw DataError("candidate set must be non-empty");
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (int j : idx) {
      if (j < 0 || j >= num_classes) {
        throw DataError("candidate index " + std::to_string(j) +
                        " out of range [0, " + std::to_string(num_classes) +
                        ")");
      }
    }
    CandidateSet s;
    s.indices_ = std::move(idx);
    return s;
  }

  static CandidateSet from_bits(const std::vector<std::uint8_t>& bits) {
    std::vector<int> idx;
    for (int j = 0; j < static_cast<int>(bits.size()); ++j) {
      if (bits[j]) idx.push_back(j);
    }
    return from_indices(std::move(idx), static_cast<int>(bits.size()));
  }

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }

  bool contains(int j) const {
    return std::binary_search(indices_.begin(), indices_.end(), j);
  }

  std::vector<std::uint8_t> bits(int num_classes) const {
    std::vector<std::uint8_t> b(num_classes, 0);
    for (int j : indices_) b[j] = 1;
    return b;
  }

  bool operator==(const CandidateSet&) const = default;

 private:
  std::vector<int> indices_;
};

// Locator of the raw input: either an external path or a row in a
// feature/embedding matrix.
using Payload = std::variant<std::string, std::int64_t>;

inline bool payload_is_row(const Payload& p) {
  return std::holds_alternative<std::int64_t>(p);
}
inline std::int64_t payload_row(const Payload& p) {
  return std::get<std::int64_t>(p);
}

struct Sample {
  std::string id;
  Payload payload;
  CandidateSet candidates;
  std::optional<int> true_label;  // evaluation only

  bool operator==(const Sample&) const = default;
};

enum class Provenance { clip_annotated, synthetic, manual };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::clip_annotated: return "clip_annotated";
    case Provenance::synthetic: return "synthetic";
    case Provenance::manual: return "manual";
  }
  throw std::logic_error("bad provenance");
}

inline Provenance provenance_from_string(const std::string& s) {
  if (s == "clip_annotated") return Provenance::clip_annotated;
  if (s == "synthetic") return Provenance::synthetic;
  if (s == "manual") return Provenance::manual;
  throw DataError("unknown provenance: " + s);
}

struct PartialLabelDataset {
  LabelSpace label_space;
  std::vector<Sample> samples;
  Provenance provenance = Provenance::manual;
  nlohmann::json meta;  // optional free-form header extras, round-tripped

  std::size_t size() const { return samples.size(); }

  bool operator==(const PartialLabelDataset& o) const {
    return label_space == o.label_space && samples == o.samples &&
           provenance == o.provenance && meta == o.meta;
  }
};

inline void validate_dataset(const PartialLabelDataset& ds) {
  const int C = ds.label_space.num_classes();
  std::set<std::string> ids;
  for (const auto& s : ds.samples) {
    if (s.id.empty()) throw DataError("sample with empty id");
    if (!ids.insert(s.id).second) throw DataError("duplicate sample id: " + s.id);
    if (s.candidates.size() == 0) {
      throw DataError("sample " + s.id + ": empty candidate set");
    }
    if (!s.candidates.indices().empty() &&
        s.candidates.indices().back() >= C) {
      throw DataError("sample " + s.id + ": candidate index " +
                      std::to_string(s.candidates.indices().back()) +
                      " out of range [0, " + std::to_string(C) + ")");
    }
    if (s.true_label && (*s.true_label < 0 || *s.true_label >= C)) {
      throw DataError("sample " + s.id + ": true_label " +
                      std::to_string(*s.true_label) + " out of range");
    }
  }
}

inline bool all_true_labels_present(const PartialLabelDataset& ds) {
  return std::all_of(ds.samples.begin(), ds.samples.end(),
                     [](const Sample& s) { return s.true_label.has_value(); });
}

// Read-only dataset view handed to trainers: exposes candidates and payloads
// but not true labels, which belong to evaluation code paths only.
class TrainView {
 public:
  explicit TrainView(const PartialLabelDataset& ds) : ds_(&ds) {}

  std::size_t size() const { return ds_->samples.size(); }
  int num_classes() const { return ds_->label_space.num_classes(); }
  const std::string& id(std::size_t i) const { return ds_->samples[i].id; }
  const Payload& payload(std::size_t i) const { return ds_->samples[i].payload; }
  const CandidateSet& candidates(std::size_t i) const {
    return ds_->samples[i].candidates;
  }

 private:
  const PartialLabelDataset* ds_;
};

struct EmbeddingMatrix {
  MatF data;               // rows × dim, row-major (matches the on-disk layout)
  bool normalized = false; // if set, every row has unit L2 norm within 1e-4

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

inline void validate_embeddings(const EmbeddingMatrix& m) {
  if (!m.data.allFinite()) throw DataError("embedding matrix contains NaN/Inf");
  if (m.normalized) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const float n = m.data.row(i).norm();
      if (std::abs(n - 1.0f) > 1e-4f) {
        throw DataError("row " + std::to_string(i) +
                        " flagged normalized but has norm " +
                        std::to_string(n));
      }
    }
  }
}

// Probability-vector checks: length-C, nonnegative, sums to 1 within 1e-6.
inline bool is_probability(const Vec& v, double tol = 1e-6) {
  if (v.size() == 0 || !v.allFinite()) return false;
  if ((v.array() < 0.0).any()) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

inline void require_probability(const Vec& v, const char* what) {
  if (!is_probability(v)) {
    throw DataError(std::string(what) + " is not a valid probability vector");
  }
}

}  // namespace plabel
