#include "cdp/metrics.hpp"
#include "cdp/random.hpp"

#include "oracle_helpers.hpp"

#include <doctest.h>

using namespace cdp;

namespace {
CVec<double> random_cvec(Rng& rng, Index n) {
  CVec<double> v(n);
  for (Index k = 0; k < n; ++k) v[k] = rng.cgaussian();
  return v;
}
}  // namespace

TEST_CASE("phase-aligned distance") {
  Rng rng(3);
  const CVec<double> x = random_cvec(rng, 10);

  CHECK(dist(x, x) == 0.0);
  CHECK(dist<double>((std::polar(1.0, 0.9) * x).eval(), x) <= 1e-12 * x.norm());
  CHECK(dist(CVec<double>(CVec<double>::Zero(10)), x) == doctest::Approx(x.norm()).epsilon(1e-14));
  CHECK_THROWS_AS(dist(CVec<double>(CVec<double>::Zero(9)), x), std::invalid_argument);

  SUBCASE("matches a dense grid search") {
    for (int trial = 0; trial < 100; ++trial) {
      const CVec<double> a = random_cvec(rng, 8);
      const CVec<double> b = random_cvec(rng, 8);
      const double closed = dist(a, b);
      const double grid = oracle::dist_grid_search(a, b);
      CHECK(closed <= grid + 1e-12);
      CHECK(grid - closed <= 1e-5 * (b.norm() + 1.0));
    }
  }
  SUBCASE("invariant under simultaneous rotation") {
    const CVec<double> z = random_cvec(rng, 10);
    const Complex rot = std::polar(1.0, 2.2);
    CHECK(std::abs(dist<double>((rot * z).eval(), (rot * x).eval()) - dist(z, x)) <= 1e-12);
  }
}

TEST_CASE("relative error") {
  Rng rng(5);
  const CVec<double> x = random_cvec(rng, 12);
  CHECK(relative_error(x, x) == 0.0);
  CHECK(relative_error(CVec<double>(CVec<double>::Zero(12)), x) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(relative_error<double>((2.0 * x).eval(), x) == doctest::Approx(1.0).epsilon(1e-12));
  const CVec<double> z = random_cvec(rng, 12);
  CHECK(std::abs(relative_error<double>((std::polar(1.0, 1.1) * z).eval(), x) -
                 relative_error(z, x)) <= 1e-12);
  CHECK_THROWS_AS(relative_error(x, CVec<double>(CVec<double>::Zero(12))), std::invalid_argument);
}

TEST_CASE("success rate") {
  std::vector<TrialOutcome> outcomes;
  CHECK_THROWS_AS(success_rate(outcomes), std::invalid_argument);
  for (int k = 0; k < 100; ++k)
    outcomes.push_back(TrialOutcome{k < 95 ? 1e-9 : 1.0, k < 95, static_cast<std::uint64_t>(k), ""});
  CHECK(success_rate(outcomes) == doctest::Approx(0.95));
  for (auto& o : outcomes) o.success = true;
  CHECK(success_rate(outcomes) == 1.0);
  for (auto& o : outcomes) o.success = false;
  CHECK(success_rate(outcomes) == 0.0);
}
