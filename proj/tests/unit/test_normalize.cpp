#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ndflow/error.hpp"
#include "ndflow/normalize.hpp"
#include "support.hpp"

using namespace ndflow;

TEST_CASE("match_standardised agrees with match_mixtures on standardised input") {
  const GaussianMixture q({0.4, 0.6}, {-1.0, 1.2}, {2.0, 3.0});
  const GaussianMixture p({0.4, 0.6}, {-0.8, 1.0}, {2.5, 2.0});
  const MatchResult a = match_mixtures(q, p), b = match_standardised(q, p);
  // p is close to standardised already; both reach a near-zero divergence
  CHECK(l2_divergence(a.matched(), p) < 1e-8);
  CHECK(l2_divergence(b.matched(), p) < 1e-8);
  CHECK(b.initial == q);
}

TEST_CASE("match_standardised reports parameters in original units") {
  const GaussianMixture p({0.5, 0.5}, {80.0, 130.0}, {1.0 / 100, 1.0 / 49});
  const GaussianMixture q({0.5, 0.5}, {85.0, 128.0}, {1.0 / 121, 1.0 / 36});
  const MatchResult r = match_standardised(q, p);
  CHECK(r.optimized_means[0] == doctest::Approx(80.0).epsilon(1e-4));
  CHECK(r.optimized_means[1] == doctest::Approx(130.0).epsilon(1e-4));
  CHECK(r.optimized_precisions[0] == doctest::Approx(1.0 / 100).epsilon(1e-3));
  CHECK(l2_divergence(r.matched(), p) < 1e-10);
  for (std::size_t i = 1; i < r.divergence_trace.size(); ++i) CHECK(r.divergence_trace[i] <= r.divergence_trace[i - 1]);
}

TEST_CASE("build_ndflow maps a pure translation exactly") {
  const GaussianMixture target({0.3, 0.7}, {-1, 2}, {1, 0.5});
  const GaussianMixture source = apply_affine(AffineMap::make(1.0, 5.0), target);
  const NdflowTransform t = build_ndflow(source, target, 0.0, 10.0);
  for (double x : {1.0, 4.0, 7.5}) CHECK(t(x) == doctest::Approx(x - 5.0).epsilon(1e-9));
  const auto v = t.apply(std::vector<double>{1.0, 4.0});
  CHECK(v[0] == t(1.0));
}

TEST_CASE("build_ndflow: affine-related mixtures give the affine map") {
  const GaussianMixture target({0.2, 0.5, 0.3}, {-2, 0, 3}, {4, 1, 2});
  const AffineMap g = AffineMap::make(2.5, -7.0);
  const GaussianMixture source = apply_affine(g, target);
  const NdflowTransform t = build_ndflow(source, target, g(-4), g(5));
  for (double x = g(-4); x <= g(5); x += 0.5) CHECK(std::abs(t(x) - g.inverse()(x)) < 1e-6);
}

TEST_CASE("build_ndflow output is monotone and respects the mesh override") {
  std::mt19937_64 rng(9);
  const GaussianMixture s = testing::random_mixture(rng, 3), p = testing::random_mixture(rng, 2);
  FlowSettings fs;
  fs.mesh_points = 50;
  fs.mesh_range = MeshRange{-3.0, 3.0};
  const NdflowTransform t = build_ndflow(s, p, -1, 1, fs);
  CHECK(t.table.size() == 50);
  CHECK(t.table.mesh().front() == -3.0);
  CHECK(t.table.mesh().back() == 3.0);
  for (std::size_t i = 1; i < 50; ++i) CHECK(t.table.mapped()[i] > t.table.mapped()[i - 1]);
  CHECK_THROWS_AS(build_ndflow(s, p, 1, -1), Error);
}
