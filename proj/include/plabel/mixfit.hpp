#pragma once

// Two-component one-dimensional Gaussian mixture fitted by EM. Used to
// split per-sample losses into a low-loss (clean) and high-loss (noisy)
// mode; clean_posterior is the responsibility of the low-mean component.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "plabel/types.hpp"

namespace plabel {

// All loss values identical: no mixture to fit. Callers treat every sample
// as clean.
struct GmmDegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Gmm2 {
  double mean[2] = {0.0, 1.0};
  double var[2] = {1.0, 1.0};
  double weight[2] = {0.5, 0.5};
};

struct GmmFit {
  Gmm2 model;
  std::vector<double> ll_history;  // log-likelihood after each EM iteration
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

inline double log_add(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace detail

inline GmmFit fit_gmm2(const std::vector<double>& values, int max_iters = 100,
                       double tol = 1e-6, double var_floor = 1e-6) {
  if (values.size() < 2) {
    throw ConfigError("fit_gmm2 needs at least 2 values");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    throw GmmDegenerateError(
        "all loss values identical; treat every sample as clean");
  }

  const double n = static_cast<double>(values.size());

  // Init: split at the median, component stats from each half.
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  Gmm2 m;
  auto half_stats = [&](std::size_t b, std::size_t e, int k) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      s += sorted[i];
      s2 += sorted[i] * sorted[i];
    }
    const double cnt = static_cast<double>(e - b);
    m.mean[k] = s / cnt;
    m.var[k] = std::max(s2 / cnt - m.mean[k] * m.mean[k], var_floor);
  };
  half_stats(0, mid, 0);
  half_stats(mid, sorted.size(), 1);
  m.weight[0] = m.weight[1] = 0.5;

  GmmFit fit;
  std::vector<double> resp(values.size());  // responsibility of component 0
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int it = 0; it < max_iters; ++it) {
    // E-step in log space.
    double ll = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double l0 = std::log(m.weight[0]) +
                        detail::log_normal_pdf(values[i], m.mean[0], m.var[0]);
      const double l1 = std::log(m.weight[1]) +
                        detail::log_normal_pdf(values[i], m.mean[1], m.var[1]);
      const double lse = detail::log_add(l0, l1);
      resp[i] = std::exp(l0 - lse);
      ll += lse;
    }
    fit.ll_history.push_back(ll);
    fit.iterations = it + 1;

    if (std::abs(ll - prev_ll) < tol) {
      fit.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step with floored variances and mixing weights kept inside (0,1).
    double n0 = 0.0;
    for (double r : resp) n0 += r;
    n0 = std::clamp(n0, 1e-10, n - 1e-10);
    const double n1 = n - n0;

    double mu0 = 0.0, mu1 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      mu0 += resp[i] * values[i];
      mu1 += (1.0 - resp[i]) * values[i];
    }
    mu0 /= n0;
    mu1 /= n1;

    double v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d0 = values[i] - mu0;
      const double d1 = values[i] - mu1;
      v0 += resp[i] * d0 * d0;
      v1 += (1.0 - resp[i]) * d1 * d1;
    }
    m.mean[0] = mu0;
    m.mean[1] = mu1;
    m.var[0] = std::max(v0 / n0, var_floor);
    m.var[1] = std::max(v1 / n1, var_floor);
    m.weight[0] = n0 / n;
    m.weight[1] = n1 / n;
  }

  // Canonical order: low mean first.
  if (m.mean[0] > m.mean[1]) {
    std::swap(m.mean[0], m.mean[1]);
    std::swap(m.var[0], m.var[1]);
    std::swap(m.weight[0], m.weight[1]);
  }
  fit.model = m;
  return fit;
}

// Posterior probability that a loss belongs to the low-mean component.
inline double clean_posterior(const Gmm2& m, double loss) {
  const double l0 =
      std::log(m.weight[0]) + detail::log_normal_pdf(loss, m.mean[0], m.var[0]);
  const double l1 =
      std::log(m.weight[1]) + detail::log_normal_pdf(loss, m.mean[1], m.var[1]);
  return std::exp(l0 - detail::log_add(l0, l1));
}

}  // namespace plabel
