#pragma once

// Synthetic noisy partial-label generation under the (q, eta) protocol:
// first every negative label joins the candidate set independently with
// probability q, then a Bernoulli(eta) fraction of samples have their true
// label swapped for a uniformly-drawn non-candidate (set size preserved).
// Every sample draws from its own id-keyed stream, so generation is
// order-independent and byte-reproducible.

#include <cstdint>
#include <string>
#include <vector>

#include "plabel/rng.hpp"
#include "plabel/types.hpp"

namespace plabel {

struct NpllConfig {
  double q = 0.0;    // false-positive flip probability
  double eta = 0.0;  // noise probability
  std::uint64_t seed = 0;
  bool exact_count = false;  // corrupt exactly round(eta*N) samples

  void validate() const {
    if (q < 0.0 || q > 1.0) throw ConfigError("q must be in [0,1]");
    if (eta < 0.0 || eta > 1.0) throw ConfigError("eta must be in [0,1]");
  }
};

inline std::vector<CandidateSet> generate_partial(
    const std::vector<int>& labels, const std::vector<std::string>& ids, int C,
    double q, std::uint64_t seed) {
  if (ids.size() != labels.size()) throw ConfigError("ids/labels size mismatch");
  std::vector<CandidateSet> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= C) {
      throw DataError("label " + std::to_string(y) + " out of range [0, " +
                      std::to_string(C) + ")");
    }
    Rng rng = Rng::keyed(seed, "flip/" + ids[i]);
    std::vector<int> idx{y};
    for (int j = 0; j < C; ++j) {
      if (j != y && rng.bernoulli(q)) idx.push_back(j);
    }
    out.push_back(CandidateSet::from_indices(std::move(idx), C));
  }
  return out;
}

inline std::vector<CandidateSet> generate_partial(
    const std::vector<int>& labels, int C, double q, std::uint64_t seed) {
  std::vector<std::string> ids(labels.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
  return generate_partial(labels, ids, C, q, seed);
}

struct NoiseResult {
  std::vector<CandidateSet> sets;
  std::size_t skipped = 0;  // samples whose set already covered all C labels
};

inline NoiseResult inject_noise(const std::vector<CandidateSet>& sets,
                                const std::vector<int>& labels,
                                const std::vector<std::string>& ids, int C,
                                double eta, std::uint64_t seed,
                                bool exact_count = false) {
  if (sets.size() != labels.size() || ids.size() != labels.size()) {
    throw ConfigError("sets/labels/ids size mismatch");
  }

  std::vector<std::uint8_t> corrupt(sets.size(), 0);
  if (exact_count) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (sets[i].size() < C) eligible.push_back(i);
    }
    Rng pick = Rng::keyed(seed, "noise/pick");
    pick.shuffle(eligible);
    const auto want = static_cast<std::size_t>(
        std::llround(eta * static_cast<double>(sets.size())));
    for (std::size_t k = 0; k < eligible.size() && k < want; ++k) {
      corrupt[eligible[k]] = 1;
    }
  } else {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      Rng rng = Rng::keyed(seed, "noise/" + ids[i]);
      corrupt[i] = rng.bernoulli(eta) ? 1 : 0;
    }
  }

  NoiseResult res;
  res.sets.reserve(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const int y = labels[i];
    if (!sets[i].contains(y)) {
      throw DataError("sample " + ids[i] +
                      ": candidate set does not contain its true label");
    }
    if (!corrupt[i]) {
      res.sets.push_back(sets[i]);
      continue;
    }
    if (sets[i].size() >= C) {  // nothing outside the set to swap in
      ++res.skipped;
      res.sets.push_back(sets[i]);
      continue;
    }
    std::vector<int> outside;
    outside.reserve(static_cast<std::size_t>(C - sets[i].size()));
    for (int j = 0; j < C; ++j) {
      if (!sets[i].contains(j)) outside.push_back(j);
    }
    Rng rng = Rng::keyed(seed, "swap/" + ids[i]);
    const int repl = outside[rng.uniform_int(outside.size())];
    std::vector<int> idx;
    for (int j : sets[i].indices()) {
      if (j != y) idx.push_back(j);
    }
    idx.push_back(repl);
    res.sets.push_back(CandidateSet::from_indices(std::move(idx), C));
  }
  return res;
}

// Full protocol over a base dataset whose every sample carries a true label.
inline PartialLabelDataset synthesize(const PartialLabelDataset& base,
                                      const NpllConfig& cfg) {
  cfg.validate();
  if (base.samples.empty()) throw DataError("synthesize: empty base dataset");
  if (!all_true_labels_present(base)) {
    throw DataError("synthesize requires true labels on every sample");
  }

  const int C = base.label_space.num_classes();
  std::vector<int> labels;
  std::vector<std::string> ids;
  labels.reserve(base.samples.size());
  ids.reserve(base.samples.size());
  for (const auto& s : base.samples) {
    labels.push_back(*s.true_label);
    ids.push_back(s.id);
  }

  auto sets = generate_partial(labels, ids, C, cfg.q, cfg.seed);
  auto noised =
      inject_noise(sets, labels, ids, C, cfg.eta, cfg.seed, cfg.exact_count);

  PartialLabelDataset out;
  out.label_space = base.label_space;
  out.provenance = Provenance::synthetic;
  out.samples = base.samples;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i].candidates = std::move(noised.sets[i]);
  }
  out.meta = nlohmann::json{{"synth",
                             {{"q", cfg.q},
                              {"eta", cfg.eta},
                              {"seed", cfg.seed},
                              {"exact_count", cfg.exact_count},
                              {"noise_skipped", noised.skipped}}}};
  validate_dataset(out);
  return out;
}

}  // namespace plabel
