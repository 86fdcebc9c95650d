#pragma once

// Shared helpers for tests: random mixtures and independent oracles.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ndflow/mixture.hpp"

namespace testing {

inline ndflow::GaussianMixture random_mixture(std::mt19937_64& rng, std::size_t k,
                                              double mean_lo = -3.0, double mean_hi = 3.0,
                                              double prec_lo = 0.1, double prec_hi = 10.0) {
  std::uniform_real_distribution<double> um(mean_lo, mean_hi), uw(0.2, 1.0);
  // log-uniform precisions
  std::uniform_real_distribution<double> ul(std::log(prec_lo), std::log(prec_hi));
  std::vector<double> w(k), m(k), l(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = uw(rng);
    total += w[i];
    m[i] = um(rng);
    l[i] = std::exp(ul(rng));
  }
  for (double& x : w) x /= total;
  // renormalising can leave the sum one ulp off; fold the residue into w[0]
  double s = 0.0;
  for (std::size_t i = 1; i < k; ++i) s += w[i];
  w[0] = 1.0 - s;
  return ndflow::GaussianMixture(w, m, l);
}

// Plain sum of weighted normal densities, written independently of the library.
inline double direct_pdf(const ndflow::GaussianMixture& g, double x) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double lam = g.precisions()[k], d = x - g.means()[k];
    s += g.weights()[k] * std::sqrt(lam / (2.0 * M_PI)) * std::exp(-0.5 * lam * d * d);
  }
  return s;
}

// Span covering all mass of both mixtures to well below double precision.
inline std::pair<double, double> joint_support(const ndflow::GaussianMixture& a,
                                               const ndflow::GaussianMixture& b,
                                               double nsd = 15.0) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* g : {&a, &b})
    for (std::size_t k = 0; k < g->size(); ++k) {
      const double sd = 1.0 / std::sqrt(g->precisions()[k]);
      lo = std::min(lo, g->means()[k] - nsd * sd);
      hi = std::max(hi, g->means()[k] + nsd * sd);
    }
  return {lo, hi};
}

// Adaptive Gauss-Kronrod integral of f over [lo, hi], split into pieces so
// narrow components are not stepped over.
template <class F>
double integrate(F f, double lo, double hi, std::size_t pieces = 64) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    const double a = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(pieces);
    const double b = lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(pieces);
    total += gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
  }
  return total;
}

// 0.5 * integral of (q - p)^2 by quadrature.
inline double quadrature_l2(const ndflow::GaussianMixture& q, const ndflow::GaussianMixture& p) {
  const auto [lo, hi] = joint_support(q, p);
  return 0.5 * integrate(
                   [&](double x) {
                     const double d = direct_pdf(q, x) - direct_pdf(p, x);
                     return d * d;
                   },
                   lo, hi);
}

// Sort-and-interpolate quantile with midpoint plotting positions (i + 0.5) / n,
// clamped to the extreme order statistics.
inline double midpoint_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double h = p * n - 0.5;
  if (h <= 0.0) return v.front();
  if (h >= n - 1.0) return v.back();
  const auto i = static_cast<std::size_t>(std::floor(h));
  const double f = h - static_cast<double>(i);
  return v[i] + f * (v[i + 1] - v[i]);
}

}  // namespace testing
