#include "ndflow/dpgmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "ndflow/error.hpp"

namespace ndflow {

void DpgmmConfig::validate() const {
  if (!(concentration > 0.0) || !std::isfinite(concentration))
    throw invalid_input("concentration must be positive");
  if (truncation < 1) throw invalid_input("truncation must be at least 1");
  if (!(prior_mean_strength > 0.0)) throw invalid_input("prior mean strength must be positive");
  if (!(prior_shape > 0.0)) throw invalid_input("prior shape must be positive");
  if (prior_rate && !(*prior_rate > 0.0)) throw invalid_input("prior rate must be positive");
  if (prior_mean && !std::isfinite(*prior_mean)) throw invalid_input("prior mean must be finite");
  if (max_iterations < 1) throw invalid_input("max_iterations must be at least 1");
  if (!(elbo_rel_tolerance > 0.0)) throw invalid_input("ELBO tolerance must be positive");
  if (!(prune_threshold >= 0.0 && prune_threshold < 1.0))
    throw invalid_input("prune threshold must lie in [0, 1)");
}

GaussianMixture prune(const GaussianMixture& g, double threshold) {
  std::vector<double> w, m, p;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.weights()[k] < threshold) continue;
    w.push_back(g.weights()[k]);
    m.push_back(g.means()[k]);
    p.push_back(g.precisions()[k]);
  }
  if (w.empty())
    throw Error(ErrorKind::FitFailure, "no mixture component reaches the prune threshold");
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return GaussianMixture(std::move(w), std::move(m), std::move(p));
}

namespace {

using boost::math::digamma;
constexpr double kLog2Pi = 1.83787706640934548356;

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

struct Prior {
  double alpha, m0, beta0, a0, b0;
};

// Variational state. Responsibilities are stored bin-major: resp[i * T + k].
class VariationalState {
 public:
  VariationalState(const Histogram& h, const Prior& prior, std::size_t T)
      : x_(h.centers()), w_(h.weights()), prior_(prior), T_(T),
        resp_(x_.size() * T, 0.0),
        count_(T), beta_(T), mean_(T), shape_(T), rate_(T),
        stick_a_(T), stick_b_(T), elog_pi_(T) {}

  std::size_t components() const { return T_; }
  std::vector<double>& resp() { return resp_; }
  const std::vector<double>& counts() const { return count_; }

  // Soft assignment of bins to T equal-mass slices of the weighted CDF,
  // with slice boundaries jittered by the seed.
  void init_from_quantile_slices(std::uint64_t seed) {
    std::vector<double> edges(T_ + 1);
    edges.front() = 0.0;
    edges.back() = 1.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);
    for (std::size_t k = 1; k < T_; ++k)
      edges[k] = (static_cast<double>(k) + (seed ? jitter(rng) : 0.0)) /
                 static_cast<double>(T_);
    const double total = std::accumulate(w_.begin(), w_.end(), 0.0);
    double lo = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double hi = lo + w_[i] / total;
      double* r = &resp_[i * T_];
      if (w_[i] <= 0.0) {
        // Zero-weight bins contribute nothing; park them on the nearest slice.
        const auto k = std::min<std::size_t>(
            T_ - 1, static_cast<std::size_t>(lo * static_cast<double>(T_)));
        r[k] = 1.0;
        continue;
      }
      for (std::size_t k = 0; k < T_; ++k) {
        const double overlap = std::min(hi, edges[k + 1]) - std::max(lo, edges[k]);
        if (overlap > 0.0) r[k] = overlap;
      }
      const double s = std::accumulate(r, r + T_, 0.0);
      if (s > 0.0) {
        for (std::size_t k = 0; k < T_; ++k) r[k] /= s;
      } else {
        r[T_ - 1] = 1.0;  // cumulative mass rounded past 1
      }
      lo = hi;
    }
  }

  // Optimal q(v), q(mean, precision) given the responsibilities.
  void update_globals() {
    for (std::size_t k = 0; k < T_; ++k) {
      double n = 0.0, s1 = 0.0;
      for (std::size_t i = 0; i < x_.size(); ++i) {
        const double c = w_[i] * resp_[i * T_ + k];
        n += c;
        s1 += c * x_[i];
      }
      const double xbar = n > 0.0 ? s1 / n : prior_.m0;
      double scatter = 0.0;
      for (std::size_t i = 0; i < x_.size(); ++i) {
        const double d = x_[i] - xbar;
        scatter += w_[i] * resp_[i * T_ + k] * d * d;
      }
      count_[k] = n;
      beta_[k] = prior_.beta0 + n;
      mean_[k] = (prior_.beta0 * prior_.m0 + s1) / beta_[k];
      shape_[k] = prior_.a0 + 0.5 * n;
      const double shift = xbar - prior_.m0;
      rate_[k] = prior_.b0 + 0.5 * (scatter + prior_.beta0 * n * shift * shift / beta_[k]);
    }
    double tail = 0.0;
    for (std::size_t k = T_; k-- > 0;) {
      stick_a_[k] = 1.0 + count_[k];
      stick_b_[k] = prior_.alpha + tail;
      tail += count_[k];
    }
    double acc = 0.0;  // sum of E[log(1 - v_j)] for j < k
    for (std::size_t k = 0; k < T_; ++k) {
      if (k + 1 == T_) {
        elog_pi_[k] = acc;  // last stick is 1
        break;
      }
      const double dsum = digamma(stick_a_[k] + stick_b_[k]);
      elog_pi_[k] = acc + digamma(stick_a_[k]) - dsum;
      acc += digamma(stick_b_[k]) - dsum;
    }
  }

  // Optimal q(z) given the global factors.
  void update_responsibilities() {
    std::vector<double> elog_prec(T_);
    for (std::size_t k = 0; k < T_; ++k)
      elog_prec[k] = digamma(shape_[k]) - std::log(rate_[k]);
    for (std::size_t i = 0; i < x_.size(); ++i) {
      double* r = &resp_[i * T_];
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < T_; ++k) {
        r[k] = elog_pi_[k] + expected_loglik(k, elog_prec[k], x_[i]);
        top = std::max(top, r[k]);
      }
      double s = 0.0;
      for (std::size_t k = 0; k < T_; ++k) {
        r[k] = std::exp(r[k] - top);
        s += r[k];
      }
      for (std::size_t k = 0; k < T_; ++k) r[k] /= s;
    }
  }

  double elbo() const {
    std::vector<double> elog_prec(T_);
    for (std::size_t k = 0; k < T_; ++k)
      elog_prec[k] = digamma(shape_[k]) - std::log(rate_[k]);
    double local = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (w_[i] <= 0.0) continue;
      const double* r = &resp_[i * T_];
      double acc = 0.0;
      for (std::size_t k = 0; k < T_; ++k) {
        if (r[k] <= 0.0) continue;
        acc += r[k] * (elog_pi_[k] + expected_loglik(k, elog_prec[k], x_[i]) -
                       std::log(r[k]));
      }
      local += w_[i] * acc;
    }
    double kl = 0.0;
    for (std::size_t k = 0; k + 1 < T_; ++k) {
      const double a = stick_a_[k], b = stick_b_[k];
      const double dsum = digamma(a + b);
      kl += log_beta(1.0, prior_.alpha) - log_beta(a, b) +
            (a - 1.0) * digamma(a) + (b - prior_.alpha) * digamma(b) +
            (1.0 + prior_.alpha - a - b) * dsum;
    }
    for (std::size_t k = 0; k < T_; ++k) {
      const double a = shape_[k], b = rate_[k];
      kl += (a - prior_.a0) * digamma(a) - std::lgamma(a) + std::lgamma(prior_.a0) +
            prior_.a0 * (std::log(b) - std::log(prior_.b0)) + a * (prior_.b0 - b) / b;
      const double ratio = prior_.beta0 / beta_[k];
      const double d = mean_[k] - prior_.m0;
      kl += 0.5 * (ratio - 1.0 - std::log(ratio) + prior_.beta0 * (a / b) * d * d);
    }
    return local - kl;
  }

  // Reorders the component axis: new component j is old component order[j].
  void permute(const std::vector<std::size_t>& order) {
    std::vector<double> row(T_);
    for (std::size_t i = 0; i < x_.size(); ++i) {
      double* r = &resp_[i * T_];
      for (std::size_t j = 0; j < T_; ++j) row[j] = r[order[j]];
      std::copy(row.begin(), row.end(), r);
    }
  }

  // Moves all of component `from`'s responsibility onto `into`.
  void merge(std::size_t into, std::size_t from) {
    for (std::size_t i = 0; i < x_.size(); ++i) {
      double* r = &resp_[i * T_];
      r[into] += r[from];
      r[from] = 0.0;
    }
  }

  GaussianMixture point_estimate() const {
    // Expected stick-breaking weights; the final stick absorbs the remainder.
    std::vector<double> weights(T_), means(mean_), precisions(T_);
    double rest = 1.0;
    for (std::size_t k = 0; k < T_; ++k) {
      const double v = k + 1 == T_ ? 1.0 : stick_a_[k] / (stick_a_[k] + stick_b_[k]);
      weights[k] = rest * v;
      rest *= 1.0 - v;
      precisions[k] = shape_[k] / rate_[k];
    }
    // Components with vanishing weight are dropped by pruning; clamp so the
    // intermediate mixture stays constructible.
    for (double& w : weights) w = std::max(w, 1e-300);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
    return GaussianMixture(std::move(weights), std::move(means), std::move(precisions));
  }

  const std::vector<double>& means() const { return mean_; }

 private:
  double expected_loglik(std::size_t k, double elog_prec, double x) const {
    const double d = x - mean_[k];
    return 0.5 * (elog_prec - kLog2Pi - 1.0 / beta_[k] - shape_[k] / rate_[k] * d * d);
  }

  const std::vector<double>& x_;
  const std::vector<double>& w_;
  Prior prior_;
  std::size_t T_;
  std::vector<double> resp_;
  std::vector<double> count_, beta_, mean_, shape_, rate_;
  std::vector<double> stick_a_, stick_b_, elog_pi_;
};

void check_finite(double elbo) {
  if (!std::isfinite(elbo))
    throw Error(ErrorKind::Numerical, "variational objective became non-finite");
}

}  // namespace

DpgmmFit fit_dpgmm_detailed(const Histogram& h, const DpgmmConfig& cfg) {
  cfg.validate();
  std::size_t distinct = 0;
  for (double w : h.weights()) distinct += w > 0.0;
  if (distinct < 2)
    throw invalid_input("DPGMM fit needs at least two distinct centres with positive weight");

  const Moments mom = compute_moments(h);
  const Prior prior{cfg.concentration, cfg.prior_mean.value_or(mom.mean),
                    cfg.prior_mean_strength, cfg.prior_shape,
                    cfg.prior_rate.value_or(mom.variance)};
  const std::size_t T = cfg.truncation;

  VariationalState state(h, prior, T);
  state.init_from_quantile_slices(cfg.seed);
  state.update_globals();

  DpgmmFit out{state.point_estimate(), {}, 0, 0, false};
  double current = state.elbo();
  check_finite(current);
  out.elbo_trace.push_back(current);

  auto relative_change = [](double prev, double next) {
    return std::abs(next - prev) / std::max(1.0, std::abs(next));
  };

  // Coordinate ascent to convergence; returns true if converged.
  auto run_vb = [&]() {
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
      state.update_responsibilities();
      state.update_globals();
      const double next = state.elbo();
      check_finite(next);
      out.elbo_trace.push_back(next);
      ++out.iterations;
      const double change = relative_change(current, next);
      current = next;
      if (change < cfg.elbo_rel_tolerance) return true;
    }
    return false;
  };

  // Accepts a candidate state only if, after a short relaxation, its ELBO
  // exceeds the current one. Rejected candidates are rolled back, so the
  // recorded trace stays monotone across structural moves.
  constexpr std::size_t kRelaxIterations = 40;
  auto try_move = [&](auto&& mutate, std::size_t relax) {
    const std::vector<double> saved = state.resp();
    mutate();
    state.update_globals();
    double next = state.elbo();
    for (std::size_t it = 0; it < relax && std::isfinite(next); ++it) {
      state.update_responsibilities();
      state.update_globals();
      const double after = state.elbo();
      const bool settled = relative_change(next, after) < cfg.elbo_rel_tolerance;
      next = after;
      if (settled) break;
    }
    if (std::isfinite(next) && next > current) {
      current = next;
      out.elbo_trace.push_back(next);
      return true;
    }
    state.resp() = saved;
    state.update_globals();
    return false;
  };

  out.converged = run_vb();
  for (std::size_t round = 0; round < 2 * T; ++round) {
    // Heavier components first in stick order.
    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return state.counts()[a] > state.counts()[b];
    });
    if (!std::is_sorted(order.begin(), order.end()))
      try_move([&] { state.permute(order); }, 0);

    // Merge proposals between every pair of components that would survive
    // pruning, closest means first. Near-empty components are left to the
    // pruning step.
    const double floor = std::max(cfg.prune_threshold, 1e-3) * h.total_weight();
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < T; ++k)
      if (state.counts()[k] >= floor) active.push_back(k);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j)
        pairs.emplace_back(active[i], active[j]);
    std::sort(pairs.begin(), pairs.end(), [&](const auto& p, const auto& q) {
      const auto& m = state.means();
      return std::abs(m[p.first] - m[p.second]) < std::abs(m[q.first] - m[q.second]);
    });
    bool merged = false;
    for (auto [a, b] : pairs) {
      if (state.counts()[b] > state.counts()[a]) std::swap(a, b);
      if (try_move([&] { state.merge(a, b); }, kRelaxIterations)) {
        ++out.merges_accepted;
        merged = true;
        break;
      }
    }
    if (!merged) break;
    out.converged = run_vb();
  }

  out.mixture = prune(state.point_estimate(), cfg.prune_threshold);
  return out;
}

}  // namespace ndflow
