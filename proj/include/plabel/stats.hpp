#pragma once

// Dataset statistics: mean candidate-set size, the noise rate
// eta = P(true label not in candidate set), and the |S| histogram.

#include <map>
#include <optional>

#include "plabel/types.hpp"

namespace plabel {

struct DatasetStats {
  double avg_candidates = 0.0;
  std::optional<double> eta;  // only when every sample carries a true label
  std::map<int, std::size_t> candidate_histogram;  // |S| -> count
};

inline DatasetStats dataset_stats(const PartialLabelDataset& ds) {
  if (ds.samples.empty()) throw DataError("dataset_stats: empty dataset");

  DatasetStats st;
  std::size_t total = 0;
  std::size_t noisy = 0;
  for (const auto& s : ds.samples) {
    total += static_cast<std::size_t>(s.candidates.size());
    ++st.candidate_histogram[s.candidates.size()];
  }
  st.avg_candidates =
      static_cast<double>(total) / static_cast<double>(ds.samples.size());

  if (all_true_labels_present(ds)) {
    for (const auto& s : ds.samples) {
      if (!s.candidates.contains(*s.true_label)) ++noisy;
    }
    st.eta = static_cast<double>(noisy) / static_cast<double>(ds.samples.size());
  }
  return st;
}

}  // namespace plabel
