#include "ndflow/l2match.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ndflow {

double gaussian_inner_product(double mu1, double lam1, double mu2, double lam2) {
  if (!(lam1 > 0.0) || !(lam2 > 0.0))
    throw invalid_input("inner product needs positive precisions");
  const double var = 1.0 / lam1 + 1.0 / lam2;
  const double d = mu1 - mu2;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

namespace {

// sum_{a,b} wa_a wb_b <a, b>
double cross_term(const GaussianMixture& a, const GaussianMixture& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      acc += a.weights()[i] * b.weights()[j] *
             gaussian_inner_product(a.means()[i], a.precisions()[i],
                                    b.means()[j], b.precisions()[j]);
  return acc;
}

}  // namespace

double l2_divergence(const GaussianMixture& q, const GaussianMixture& p) {
  const double raw =
      0.5 * cross_term(q, q) + 0.5 * cross_term(p, p) - cross_term(q, p);
  return std::max(0.0, raw);
}

L2Gradients l2_gradients(const GaussianMixture& q, const GaussianMixture& p) {
  const std::size_t K = q.size();
  L2Gradients g{std::vector<double>(K, 0.0), std::vector<double>(K, 0.0)};
  const auto& pi = q.weights();
  const auto& mu = q.means();
  const auto& lam = q.precisions();
  for (std::size_t k = 0; k < K; ++k) {
    double dm = 0.0, dl = 0.0;
    // Self-interaction, w_lk = pi_l pi_k <q_l, q_k>.
    for (std::size_t l = 0; l < K; ++l) {
      const double w = pi[l] * pi[k] *
                       gaussian_inner_product(mu[l], lam[l], mu[k], lam[k]);
      const double d = mu[l] - mu[k];
      dm += w * d / (1.0 / lam[l] + 1.0 / lam[k]);
      const double pull = lam[l] * d / (lam[l] + lam[k]);
      dl += 0.5 * w * (1.0 / lam[k] - 1.0 / (lam[l] + lam[k]) - pull * pull);
    }
    // Interaction with the target, v_mk = tau_m pi_k <p_m, q_k>.
    for (std::size_t m = 0; m < p.size(); ++m) {
      const double nu = p.means()[m];
      const double om = p.precisions()[m];
      const double v = p.weights()[m] * pi[k] *
                       gaussian_inner_product(nu, om, mu[k], lam[k]);
      const double d = nu - mu[k];
      dm -= v * d / (1.0 / om + 1.0 / lam[k]);
      const double pull = om * d / (om + lam[k]);
      dl -= 0.5 * v * (1.0 / lam[k] - 1.0 / (om + lam[k]) - pull * pull);
    }
    g.d_means[k] = dm;
    g.d_precisions[k] = dl;
  }
  return g;
}

void OptimConfig::validate() const {
  if (max_iterations < 1) throw invalid_input("max_iterations must be positive");
  if (!(grad_norm_tolerance > 0.0)) throw invalid_input("gradient tolerance must be positive");
  if (!(initial_step > 0.0)) throw invalid_input("initial step must be positive");
  if (!(backtracking_factor > 0.0 && backtracking_factor < 1.0))
    throw invalid_input("backtracking factor must lie in (0, 1)");
  if (!(armijo_slope > 0.0 && armijo_slope < 1.0))
    throw invalid_input("Armijo slope must lie in (0, 1)");
}

MatchResult match_mixtures(const GaussianMixture& q, const GaussianMixture& p,
                           const OptimConfig& cfg) {
  cfg.validate();
  const std::size_t K = q.size();

  // State vector: means then square-root precisions.
  std::vector<double> theta(2 * K);
  for (std::size_t k = 0; k < K; ++k) {
    theta[k] = q.means()[k];
    theta[K + k] = std::sqrt(q.precisions()[k]);
  }
  auto to_mixture = [&](const std::vector<double>& t) {
    std::vector<double> m(t.begin(), t.begin() + K), l(K);
    for (std::size_t k = 0; k < K; ++k) l[k] = t[K + k] * t[K + k];
    return q.with_parameters(std::move(m), std::move(l));
  };
  auto gradient = [&](const std::vector<double>& t) {
    const L2Gradients g = l2_gradients(to_mixture(t), p);
    std::vector<double> out(2 * K);
    for (std::size_t k = 0; k < K; ++k) {
      out[k] = g.d_means[k];
      out[K + k] = 2.0 * t[K + k] * g.d_precisions[k];  // chain rule for l^2
    }
    return out;
  };

  MatchResult result{q, q.means(), q.precisions(), {}, MatchStop::MaxIterations};
  double value = l2_divergence(q, p);
  if (!std::isfinite(value))
    throw MatchDivergenceError("initial divergence is not finite", {});
  result.divergence_trace.push_back(value);

  double step = cfg.initial_step;
  std::vector<double> trial(2 * K);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const std::vector<double> grad = gradient(theta);
    double inf_norm = 0.0, sq_norm = 0.0;
    for (double g : grad) {
      if (!std::isfinite(g))
        throw MatchDivergenceError("non-finite divergence gradient",
                                   result.divergence_trace);
      inf_norm = std::max(inf_norm, std::abs(g));
      sq_norm += g * g;
    }
    if (inf_norm < cfg.grad_norm_tolerance) {
      result.stop = MatchStop::GradientTolerance;
      break;
    }

    // Backtrack from a step that grows after each success.
    bool accepted = false;
    double next_value = value;
    for (; step > 1e-30; step *= cfg.backtracking_factor) {
      bool usable = true;
      for (std::size_t i = 0; i < 2 * K; ++i) {
        trial[i] = theta[i] - step * grad[i];
        if (i >= K && trial[i] == 0.0) usable = false;  // would zero a precision
      }
      if (!usable) continue;
      next_value = l2_divergence(to_mixture(trial), p);
      if (!std::isfinite(next_value))
        throw MatchDivergenceError("divergence became non-finite",
                                   result.divergence_trace);
      if (next_value <= value - cfg.armijo_slope * step * sq_norm &&
          next_value < value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.stop = MatchStop::LineSearchStalled;
      break;
    }
    theta.swap(trial);
    value = next_value;
    result.divergence_trace.push_back(value);
    step /= cfg.backtracking_factor;
  }

  if (result.accepted_steps() > 0) {
    const GaussianMixture out = to_mixture(theta);
    result.optimized_means = out.means();
    result.optimized_precisions = out.precisions();
  }
  return result;
}

}  // namespace ndflow
