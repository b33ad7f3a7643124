#pragma once

// Loss functions and label transforms of the co-training algorithm, each
// with its analytic gradient. Classifier losses differentiate with respect
// to the pre-softmax logits; representation losses with respect to the
// similarity logits or the projected vector z. Probabilities are clamped to
// kProbEps inside every log.

#include <cmath>
#include <span>
#include <vector>

#include "plabel/types.hpp"

namespace plabel {

inline constexpr double kProbEps = 1e-8;
inline constexpr double kLossClamp = 20.0;

inline Vec softmax(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

// Chain rule through softmax: given f = softmax(l) and g = dL/df,
// dL/dl = f .* g - (f . g) f.
inline Vec softmax_backward(const Vec& f, const Vec& g) {
  return f.cwiseProduct(g) - f.dot(g) * f;
}

inline double clamped_log(double x) { return std::log(std::max(x, kProbEps)); }

// ---------------------------------------------------------------------------
// Warm-up: partial cross-entropy plus negative entropy.
//   L_sup = -log sum_{j in S} f_j,   L_reg = sum_j f_j log f_j
// ---------------------------------------------------------------------------

inline double warmup_loss(const Vec& f, const CandidateSet& Y) {
  double in_set = 0.0;
  for (int j : Y.indices()) in_set += f[j];
  double l_sup = -clamped_log(in_set);
  double l_reg = 0.0;
  for (int j = 0; j < f.size(); ++j) {
    if (f[j] > 0.0) l_reg += f[j] * clamped_log(f[j]);
  }
  return l_sup + l_reg;
}

inline Vec warmup_loss_grad_logits(const Vec& f, const CandidateSet& Y) {
  double in_set = 0.0;
  for (int j : Y.indices()) in_set += f[j];
  in_set = std::max(in_set, kProbEps);

  Vec g = Vec::Zero(f.size());
  for (int j = 0; j < f.size(); ++j) {
    g[j] = clamped_log(f[j]) + 1.0;  // d L_reg / d f_j
  }
  for (int j : Y.indices()) g[j] -= 1.0 / in_set;  // d L_sup / d f_j
  return softmax_backward(f, g);
}

// ---------------------------------------------------------------------------
// Division loss: negative log probability the evaluated network assigns to
// the reference network's best in-candidate class.
// ---------------------------------------------------------------------------

// Argmax over candidates of the reference prediction; ties break to the
// lowest class index.
inline int division_argmax(const Vec& pred_ref, const CandidateSet& Y) {
  int best = Y.indices().front();
  for (int j : Y.indices()) {
    if (pred_ref[j] > pred_ref[best]) best = j;
  }
  return best;
}

inline double division_loss(const Vec& pred_ref, const Vec& pred_eval,
                            const CandidateSet& Y) {
  return -clamped_log(pred_eval[division_argmax(pred_ref, Y)]);
}

inline Vec division_loss_grad_logits(const Vec& pred_ref, const Vec& pred_eval,
                                     const CandidateSet& Y) {
  const int j = division_argmax(pred_ref, Y);
  Vec g = pred_eval;
  g[j] -= 1.0;
  return g;
}

// ---------------------------------------------------------------------------
// Pseudo-label construction: rescale onto the candidate set, fuse with the
// averaged weak predictions, then temperature-sharpen.
// ---------------------------------------------------------------------------

inline Vec rescale(const CandidateSet& Y, const Vec& f) {
  double denom = 0.0;
  for (int j : Y.indices()) denom += f[j];
  Vec p = Vec::Zero(f.size());
  if (denom <= 0.0) {  // no mass on candidates: fall back to uniform over them
    const double u = 1.0 / static_cast<double>(Y.size());
    for (int j : Y.indices()) p[j] = u;
    return p;
  }
  for (int j : Y.indices()) p[j] = f[j] / denom;
  return p;
}

// Partial split: w * p + (1 - w) * own average; unlabeled: mean of both
// networks' averages.
inline Vec fuse_labels(bool partial, double w, const Vec& p,
                       const Vec& pbar_self, const Vec& pbar_peer) {
  if (partial) return w * p + (1.0 - w) * pbar_self;
  return 0.5 * (pbar_peer + pbar_self);
}

inline Vec sharpen(const Vec& p, double T) {
  if (T <= 0.0) throw ConfigError("sharpening temperature must be positive");
  if (T == 1.0) return p;
  Vec q = p.array().pow(1.0 / T);
  const double s = q.sum();
  if (s <= 0.0) return p;
  return q / s;
}

// ---------------------------------------------------------------------------
// Self-training loss: cross-entropy on the partial split, squared L2 on the
// unlabeled split.
// ---------------------------------------------------------------------------

inline double self_loss(const Vec& f, const Vec& ptilde, bool partial) {
  if (partial) {
    double l = 0.0;
    for (int j = 0; j < f.size(); ++j) {
      if (ptilde[j] > 0.0) l -= ptilde[j] * clamped_log(f[j]);
    }
    return l;
  }
  return (ptilde - f).squaredNorm();
}

inline Vec self_loss_grad_logits(const Vec& f, const Vec& ptilde,
                                 bool partial) {
  if (partial) return f * ptilde.sum() - ptilde;  // = f - ptilde for targets summing to 1
  return softmax_backward(f, 2.0 * (f - ptilde));
}

// ---------------------------------------------------------------------------
// Prototypical similarity alignment. s = softmax(z . o_1, ..., z . o_C);
// partial split: KL(sharpen(ptilde, T') || sharpen(s, T')); unlabeled:
// squared L2 between ptilde and s.
// ---------------------------------------------------------------------------

inline Vec prototype_similarity(const Vec& z, const Mat& prototypes) {
  if (z.size() != prototypes.rows()) {
    throw DataError("projection dim != prototype dim");
  }
  return softmax(prototypes.transpose() * z);
}

inline double prot_loss(const Vec& ptilde, const Vec& s, bool partial,
                        double T_prime) {
  if (partial) {
    const Vec a = sharpen(ptilde, T_prime);
    const Vec b = sharpen(s, T_prime);
    double kl = 0.0;
    for (int j = 0; j < a.size(); ++j) {
      if (a[j] > 0.0) kl += a[j] * (clamped_log(a[j]) - clamped_log(b[j]));
    }
    return kl;
  }
  return (ptilde - s).squaredNorm();
}

// Gradient with respect to the similarity logits sim (s = softmax(sim)).
// For the KL branch note sharpen(softmax(sim), T') == softmax(sim / T'),
// so d/dsim = (sharpen(s, T') - sharpen(ptilde, T')) / T'.
inline Vec prot_loss_grad_sim(const Vec& ptilde, const Vec& s, bool partial,
                              double T_prime) {
  if (partial) {
    const Vec a = sharpen(ptilde, T_prime);
    const Vec b = sharpen(s, T_prime);
    return (b - a) / T_prime;
  }
  return softmax_backward(s, 2.0 * (s - ptilde));
}

// ---------------------------------------------------------------------------
// Noisy-tolerant supervised contrastive loss against a queue of momentum
// projections. Positives: confident entries sharing the anchor's pseudo
// class; negatives: confident entries of any other class. Unconfident
// anchors and anchors without positives contribute zero and are counted.
// ---------------------------------------------------------------------------

struct NcontTerm {
  double loss = 0.0;
  bool skipped = true;
};

namespace detail {

// Shared forward/backward over precomputed similarities. Writes per-entry
// gradient coefficients dL/dsim into coeff when non-null.
inline NcontTerm ncont_from_sims(std::span<const double> sims,
                                 std::span<const int> classes,
                                 std::span<const std::uint8_t> confident,
                                 int anchor_class, bool anchor_confident,
                                 double temperature, bool all_confident,
                                 std::vector<double>* coeff) {
  if (coeff) coeff->assign(sims.size(), 0.0);
  if (!anchor_confident && !all_confident) return {};

  std::vector<std::size_t> members;  // confident entries, positives first
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < sims.size(); ++k) {
    if (!all_confident && !confident[k]) continue;
    members.push_back(k);
    if (classes[k] == anchor_class) ++n_pos;
  }
  if (n_pos == 0) return {};

  double max_s = -std::numeric_limits<double>::infinity();
  for (std::size_t k : members) max_s = std::max(max_s, sims[k] / temperature);
  double denom = 0.0;
  for (std::size_t k : members) denom += std::exp(sims[k] / temperature - max_s);
  const double log_denom = max_s + std::log(denom);

  double loss = 0.0;
  for (std::size_t k : members) {
    if (classes[k] == anchor_class) {
      loss -= sims[k] / temperature - log_denom;
    }
  }
  loss /= static_cast<double>(n_pos);

  if (coeff) {
    const double inv_pos = 1.0 / static_cast<double>(n_pos);
    for (std::size_t k : members) {
      const double soft = std::exp(sims[k] / temperature - max_s) / denom;
      double c = soft / temperature;  // from the shared log-denominator
      if (classes[k] == anchor_class) c -= inv_pos / temperature;
      (*coeff)[k] = c;
    }
  }
  return {loss, false};
}

}  // namespace detail

// keys: dim x M matrix of queue projections (one column per entry).
inline NcontTerm ncont_loss(const Vec& z, const Mat& keys,
                            std::span<const int> classes,
                            std::span<const std::uint8_t> confident,
                            int anchor_class, bool anchor_confident,
                            double temperature, bool all_confident = false) {
  if (temperature <= 0.0) throw ConfigError("contrastive temperature must be positive");
  if (keys.cols() == 0) return {};
  const Vec sims = keys.transpose() * z;
  return detail::ncont_from_sims(
      std::span<const double>(sims.data(), static_cast<std::size_t>(sims.size())),
      classes, confident, anchor_class, anchor_confident, temperature,
      all_confident, nullptr);
}

// Gradient with respect to the anchor projection z.
inline Vec ncont_loss_grad_z(const Vec& z, const Mat& keys,
                             std::span<const int> classes,
                             std::span<const std::uint8_t> confident,
                             int anchor_class, bool anchor_confident,
                             double temperature, bool all_confident = false) {
  if (keys.cols() == 0) return Vec::Zero(z.size());
  const Vec sims = keys.transpose() * z;
  std::vector<double> coeff;
  detail::ncont_from_sims(
      std::span<const double>(sims.data(), static_cast<std::size_t>(sims.size())),
      classes, confident, anchor_class, anchor_confident, temperature,
      all_confident, &coeff);
  Vec g = Vec::Zero(z.size());
  for (Eigen::Index k = 0; k < keys.cols(); ++k) {
    if (coeff[static_cast<std::size_t>(k)] != 0.0) {
      g += coeff[static_cast<std::size_t>(k)] * keys.col(k);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Overall objective.
// ---------------------------------------------------------------------------

inline double total_loss(double l_self, double l_prot, double l_ncont,
                         double lambda1, double lambda2) {
  return l_self + lambda1 * l_prot + lambda2 * l_ncont;
}

}  // namespace plabel
