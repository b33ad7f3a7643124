#pragma once

// Turns precomputed image embeddings plus per-template text embeddings into
// single- or partial-label datasets. Per template t_i and image r the class
// distribution is softmax(scale * (r . t_1, ..., r . t_C)); the partial label
// is the set of per-template argmaxes, the single label the argmax of the
// template-averaged distribution.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "plabel/dataset_io.hpp"
#include "plabel/types.hpp"

namespace plabel {

struct PromptTemplateSet {
  std::vector<std::string> templates;  // each contains exactly one "{}"

  int size() const { return static_cast<int>(templates.size()); }

  static PromptTemplateSet make(std::vector<std::string> ts) {
    if (ts.empty()) throw ConfigError("template set must not be empty");
    for (const auto& t : ts) {
      std::size_t first = t.find("{}");
      if (first == std::string::npos || t.find("{}", first + 2) != std::string::npos) {
        throw ConfigError("template must contain exactly one {}: \"" + t + "\"");
      }
    }
    return PromptTemplateSet{std::move(ts)};
  }
};

// One C x D matrix of text embeddings per template, all sharing D.
struct TextEmbeddingBank {
  std::vector<EmbeddingMatrix> per_template;

  int num_templates() const { return static_cast<int>(per_template.size()); }
  Eigen::Index num_classes() const {
    return per_template.empty() ? 0 : per_template.front().rows();
  }
  Eigen::Index dim() const {
    return per_template.empty() ? 0 : per_template.front().dim();
  }
};

inline void validate_bank(const TextEmbeddingBank& bank) {
  if (bank.per_template.empty()) throw DataError("empty text embedding bank");
  for (const auto& m : bank.per_template) {
    if (m.rows() != bank.num_classes() || m.dim() != bank.dim()) {
      throw DataError("text bank matrices disagree on shape");
    }
    validate_embeddings(m);
  }
}

// Ordered template-major: element (i, j) is template i filled with class j.
inline std::vector<std::string> expand_templates(const PromptTemplateSet& ts,
                                                 const LabelSpace& space) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(ts.size()) * space.class_names.size());
  for (const auto& t : ts.templates) {
    const std::size_t pos = t.find("{}");
    for (const auto& name : space.class_names) {
      std::string s = t;
      s.replace(pos, 2, name);
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline Vec class_probabilities(const Vec& image, const EmbeddingMatrix& text,
                               double scale) {
  if (scale <= 0.0) throw ConfigError("logit scale must be positive");
  if (image.size() != text.dim()) {
    throw DataError("image dim " + std::to_string(image.size()) +
                    " != text dim " + std::to_string(text.dim()));
  }
  if (!image.allFinite()) throw DataError("NaN in image embedding");

  Vec logits = scale * (text.data.cast<double>() * image);
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

namespace detail {

// Argmax with ties broken by lowest index.
inline int argmax_lowest(const Vec& v) {
  int best = 0;
  for (int j = 1; j < v.size(); ++j) {
    if (v[j] > v[best]) best = j;
  }
  return best;
}

inline std::string row_id(Eigen::Index row) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%06lld", static_cast<long long>(row));
  return buf;
}

inline void check_dims(const EmbeddingMatrix& images,
                       const TextEmbeddingBank& bank) {
  validate_bank(bank);
  if (images.dim() != bank.dim()) {
    throw DataError("image dim " + std::to_string(images.dim()) +
                    " != text dim " + std::to_string(bank.dim()));
  }
  if (!images.data.allFinite()) throw DataError("NaN in image embeddings");
}

}  // namespace detail

// Candidate set = set of per-template argmax classes. The argmax of a
// softmax is scale-invariant, so no scale parameter here.
inline PartialLabelDataset annotate_partial(const EmbeddingMatrix& images,
                                            const TextEmbeddingBank& bank,
                                            const LabelSpace& space) {
  detail::check_dims(images, bank);
  const int C = space.num_classes();
  if (bank.num_classes() != C) {
    throw DataError("bank rows != label space size");
  }

  PartialLabelDataset ds;
  ds.label_space = space;
  ds.provenance = Provenance::clip_annotated;
  ds.samples.reserve(static_cast<std::size_t>(images.rows()));

  // One dot-product matrix per template, argmax per image row.
  std::vector<std::vector<std::uint8_t>> hit(
      static_cast<std::size_t>(images.rows()),
      std::vector<std::uint8_t>(static_cast<std::size_t>(C), 0));
  for (const auto& text : bank.per_template) {
    for (Eigen::Index i = 0; i < images.rows(); ++i) {
      const Vec logits =
          text.data.cast<double>() * images.data.row(i).transpose().cast<double>();
      hit[static_cast<std::size_t>(i)]
         [static_cast<std::size_t>(detail::argmax_lowest(logits))] = 1;
    }
  }

  for (Eigen::Index i = 0; i < images.rows(); ++i) {
    Sample s;
    s.id = detail::row_id(i);
    s.payload = Payload(static_cast<std::int64_t>(i));
    s.candidates = CandidateSet::from_bits(hit[static_cast<std::size_t>(i)]);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Singleton label = argmax of the template-averaged softmax probabilities.
inline PartialLabelDataset annotate_single(const EmbeddingMatrix& images,
                                           const TextEmbeddingBank& bank,
                                           const LabelSpace& space,
                                           double scale = 1.0) {
  detail::check_dims(images, bank);
  const int C = space.num_classes();
  if (bank.num_classes() != C) {
    throw DataError("bank rows != label space size");
  }

  PartialLabelDataset ds;
  ds.label_space = space;
  ds.provenance = Provenance::clip_annotated;
  ds.samples.reserve(static_cast<std::size_t>(images.rows()));

  for (Eigen::Index i = 0; i < images.rows(); ++i) {
    const Vec r = images.data.row(i).transpose().cast<double>();
    Vec mean = Vec::Zero(C);
    for (const auto& text : bank.per_template) {
      mean += class_probabilities(r, text, scale);
    }
    mean /= bank.num_templates();

    Sample s;
    s.id = detail::row_id(i);
    s.payload = Payload(static_cast<std::int64_t>(i));
    s.candidates =
        CandidateSet::from_indices({detail::argmax_lowest(mean)}, C);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Fraction of singleton annotations equal to the given labels (aligned by
// sample order).
inline double zero_shot_accuracy(const PartialLabelDataset& ds,
                                 const std::vector<int>& truth) {
  if (ds.samples.empty()) throw DataError("zero_shot_accuracy: empty dataset");
  if (truth.size() != ds.samples.size()) {
    throw DataError("truth size != dataset size");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& c = ds.samples[i].candidates;
    if (c.size() != 1) {
      throw DataError("sample " + ds.samples[i].id +
                      " has non-singleton candidate set");
    }
    if (c.indices()[0] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.samples.size());
}

// Bank directory: templates.json = {"templates":[...]} plus one embedding
// subdirectory t000, t001, ... per template.
inline std::string template_subdir(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "t%03d", i);
  return buf;
}

inline void save_text_bank(const PromptTemplateSet& ts,
                           const TextEmbeddingBank& bank,
                           const std::filesystem::path& dir) {
  if (ts.size() != bank.num_templates()) {
    throw ConfigError("template count != bank matrix count");
  }
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "templates.json");
  if (!out) throw DataError("cannot write " + (dir / "templates.json").string());
  out << nlohmann::json{{"templates", ts.templates}}.dump(2) << '\n';
  for (int i = 0; i < bank.num_templates(); ++i) {
    save_embeddings(bank.per_template[static_cast<std::size_t>(i)],
                    dir / template_subdir(i));
  }
}

inline std::pair<PromptTemplateSet, TextEmbeddingBank> load_text_bank(
    const std::filesystem::path& dir) {
  std::ifstream in(dir / "templates.json");
  if (!in) throw DataError("cannot open " + (dir / "templates.json").string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw DataError("parse error in " + (dir / "templates.json").string());
  }
  auto ts =
      PromptTemplateSet::make(j.at("templates").get<std::vector<std::string>>());
  TextEmbeddingBank bank;
  for (int i = 0; i < ts.size(); ++i) {
    bank.per_template.push_back(load_embeddings(dir / template_subdir(i)));
  }
  validate_bank(bank);
  return {std::move(ts), std::move(bank)};
}

}  // namespace plabel
