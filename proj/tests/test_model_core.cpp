#include "cdp/aperture.hpp"
#include "cdp/regions.hpp"
#include "cdp/signal.hpp"

#include "oracle_helpers.hpp"

#include <doctest.h>

using namespace cdp;

TEST_CASE("grid shape basics") {
  GridShape s({4, 3, 2});
  CHECK(s.size() == 24);
  CHECK(s.rank() == 3);
  for (Index flat = 0; flat < s.size(); ++flat)
    CHECK(s.flatten(s.unflatten(flat)) == flat);
  CHECK_THROWS_AS(GridShape(std::vector<Index>{}), std::invalid_argument);
  CHECK_THROWS_AS(GridShape({4, 0}), std::invalid_argument);
}

TEST_CASE("unitary dft matches the literal sum and round-trips") {
  for (const GridShape& shape : {GridShape::line(8), GridShape({4, 3}), GridShape({2, 3, 2})}) {
    Dft<double> dft(shape);
    Rng rng(5);
    CVec<double> x(shape.size());
    for (Index k = 0; k < x.size(); ++k) x[k] = rng.cgaussian();
    const CVec<double> ours = dft.forward(x);
    const CVec<double> ref = oracle::dft(shape, x);
    CHECK((ours - ref).norm() / ref.norm() < 1e-12);
    CHECK((dft.inverse(ours) - x).norm() / x.norm() < 1e-12);
    CHECK(std::abs(ours.norm() - x.norm()) < 1e-12 * x.norm());
  }
}

TEST_CASE("dense dft matrix agrees with the oracle") {
  const GridShape shape({3, 4});
  const CMat<double> ours = dense_dft_matrix<double>(shape);
  const CMat<double> ref = oracle::dft_matrix(shape);
  CHECK((ours - ref).norm() < 1e-12 * ref.norm());
}

TEST_CASE("sparse signal generation") {
  SUBCASE("full support when s = n") {
    const auto x = gen_sparse_signal<double>(GridShape::line(8), 8, 0);
    CHECK(fourier_support_count(x) == 8);
  }
  SUBCASE("exact sparsity") {
    const auto x = gen_sparse_signal<double>(GridShape::line(16), 4, 7);
    CHECK(x.sparsity == 4);
    CHECK(fourier_support_count(x) == 4);
  }
  SUBCASE("deterministic") {
    const auto a = gen_sparse_signal<double>(GridShape::line(16), 4, 7);
    const auto b = gen_sparse_signal<double>(GridShape::line(16), 4, 7);
    CHECK(a.values == b.values);
  }
  SUBCASE("dft round trip within 1e-12") {
    const auto x = gen_sparse_signal<double>(GridShape({8, 4}), 5, 3);
    Dft<double> dft(x.shape);
    CHECK((dft.inverse(dft.forward(x.values)) - x.values).norm() < 1e-12 * x.values.norm());
  }
  SUBCASE("invalid sparsity") {
    CHECK_THROWS_AS(gen_sparse_signal<double>(GridShape::line(8), 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_sparse_signal<double>(GridShape::line(8), 9, 0), std::invalid_argument);
  }
}

TEST_CASE("support sampling is uniform within 5 sigma per index") {
  const Index n = 16, s = 4;
  const int draws = 10000;
  std::vector<int> counts(n, 0);
  Rng rng(123);
  for (int d = 0; d < draws; ++d)
    for (Index q : sample_without_replacement(n, s, rng)) ++counts[static_cast<std::size_t>(q)];
  const double p = static_cast<double>(s) / static_cast<double>(n);
  const double mean = draws * p;
  const double bound = 5.0 * std::sqrt(draws * p * (1 - p));
  for (Index q = 0; q < n; ++q)
    CHECK(std::abs(counts[static_cast<std::size_t>(q)] - mean) <= bound);
}

TEST_CASE("coded apertures") {
  SUBCASE("block-unblock ones fraction") {
    const auto a = gen_coded_aperture<double>(GridShape::line(1000), ApertureKind::BlockUnblock, 1);
    Index ones = 0;
    for (Index k = 0; k < 1000; ++k) {
      CHECK((a.values[k] == Complex(0) || a.values[k] == Complex(1)));
      if (a.values[k] == Complex(1)) ++ones;
    }
    const double frac = ones / 1000.0;
    CHECK(frac >= 0.45);
    CHECK(frac <= 0.55);
  }
  SUBCASE("uniform phase unit modulus") {
    const auto a = gen_coded_aperture<double>(GridShape::line(64), ApertureKind::UniformPhase, 2);
    double worst = 0;
    for (Index k = 0; k < 64; ++k) worst = std::max(worst, std::abs(std::abs(a.values[k]) - 1.0));
    CHECK(worst <= 1e-15);
  }
  SUBCASE("identity modulation accepted") {
    CHECK_NOTHROW(make_custom_aperture<double>(GridShape::line(4), CVec<double>::Ones(4)));
  }
  SUBCASE("modulus above one rejected") {
    CVec<double> bad = CVec<double>::Ones(4);
    bad[2] = Complex(1.5, 0);
    CHECK_THROWS_AS(make_custom_aperture<double>(GridShape::line(4), bad), std::invalid_argument);
  }
  SUBCASE("generating a custom kind is an error") {
    CHECK_THROWS_AS(gen_coded_aperture<double>(GridShape::line(4), ApertureKind::Custom, 0),
                    std::invalid_argument);
  }
  SUBCASE("deterministic") {
    const auto a = gen_coded_aperture<double>(GridShape::line(32), ApertureKind::UniformPhase, 9);
    const auto b = gen_coded_aperture<double>(GridShape::line(32), ApertureKind::UniformPhase, 9);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("region partitions") {
  SUBCASE("single region is the identity selector") {
    const auto p = gen_regions(GridShape::line(8), 1);
    for (auto r : p.membership) CHECK(r == 1);
  }
  SUBCASE("equal blocks") {
    const auto p = gen_regions(GridShape::line(8), 4);
    const std::vector<std::int32_t> want{1, 1, 2, 2, 3, 3, 4, 4};
    CHECK(p.membership == want);
  }
  SUBCASE("remainder goes to the last block") {
    const auto p = gen_regions(GridShape::line(7), 2);
    const std::vector<std::int32_t> want{1, 1, 1, 2, 2, 2, 2};
    CHECK(p.membership == want);
  }
  SUBCASE("selectors sum to the identity exactly") {
    const auto p = gen_regions(GridShape::line(11), 3);
    for (Index k = 0; k < 11; ++k) {
      // membership is a total function into 1..R, so the binary selectors
      // hit each index exactly once
      CHECK(p.membership[static_cast<std::size_t>(k)] >= 1);
      CHECK(p.membership[static_cast<std::size_t>(k)] <= 3);
    }
  }
  SUBCASE("bad partitions rejected") {
    CHECK_THROWS_AS(gen_regions(GridShape::line(4), 5), std::invalid_argument);
    CHECK_THROWS_AS(gen_regions(GridShape::line(4), 0), std::invalid_argument);
    CHECK_THROWS_AS(make_custom_partition(GridShape::line(4), 2, {1, 1, 1, 1}),
                    std::invalid_argument);  // region 2 empty
    CHECK_THROWS_AS(make_custom_partition(GridShape::line(4), 2, {1, 2, 3, 1}),
                    std::invalid_argument);  // out of range
  }
}

TEST_CASE("crystal lattices") {
  SUBCASE("period-2 alternating amplitudes have a two-point spectrum") {
    LatticeParams<double> lp;
    lp.period = 2;
    lp.amplitude_a = Complex(1, 0);
    lp.amplitude_b = Complex(0.5, 0);
    const auto x = gen_crystal_lattice<double>(GridShape::line(8), LatticeKind::RockSalt, lp);
    CHECK(x.sparsity == 2);
    const CVec<double> xt = oracle::dft(x.shape, x.values);
    for (Index q = 0; q < 8; ++q) {
      const bool on = (q == 0 || q == 4);
      CHECK((std::abs(xt[q]) > 1e-9) == on);
    }
  }
  SUBCASE("all-zero amplitudes give the zero signal") {
    LatticeParams<double> lp;
    lp.amplitude_a = Complex(0, 0);
    lp.amplitude_b = Complex(0, 0);
    const auto x = gen_crystal_lattice<double>(GridShape::line(8), LatticeKind::RockSalt, lp);
    CHECK(x.sparsity == 0);
    CHECK(x.values.norm() == 0.0);
  }
  SUBCASE("constant signal has a single Fourier coefficient") {
    LatticeParams<double> lp;
    lp.amplitude_a = Complex(1, 0);
    lp.amplitude_b = Complex(1, 0);
    const auto x = gen_crystal_lattice<double>(GridShape::line(8), LatticeKind::RockSalt, lp);
    CHECK(x.sparsity == 1);
    const CVec<double> xt = oracle::dft(x.shape, x.values);
    CHECK(std::abs(xt[0]) > 1e-9);
    for (Index q = 1; q < 8; ++q) CHECK(std::abs(xt[q]) < 1e-9);
  }
  SUBCASE("period must divide the dims") {
    LatticeParams<double> lp;
    lp.period = 3;
    CHECK_THROWS_AS(gen_crystal_lattice<double>(GridShape::line(8), LatticeKind::RockSalt, lp),
                    std::invalid_argument);
  }
  SUBCASE("2d rock salt is sparse and matches the brute-force count") {
    LatticeParams<double> lp;
    lp.period = 4;
    const auto x = gen_crystal_lattice<double>(GridShape({8, 8}), LatticeKind::RockSalt, lp);
    CHECK(x.sparsity > 0);
    CHECK(x.sparsity == count_nonzeros(oracle::dft(x.shape, x.values)));
    CHECK(x.sparsity <= 16);  // periodic with a 4x4 repeat cell
  }
  SUBCASE("custom motif tiles the grid") {
    LatticeParams<double> lp;
    lp.period = 2;
    lp.motif = CVec<double>(2);
    lp.motif << Complex(1, 0), Complex(0, 1);
    const auto x = gen_crystal_lattice<double>(GridShape::line(6), LatticeKind::CustomMotif, lp);
    CHECK(x.values[0] == Complex(1, 0));
    CHECK(x.values[1] == Complex(0, 1));
    CHECK(x.values[4] == Complex(1, 0));
    CHECK(x.sparsity == 2);
  }
}
