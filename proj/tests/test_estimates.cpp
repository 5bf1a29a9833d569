#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include <andersonlab/estimates.hpp>
#include <andersonlab/lattice.hpp>
#include <andersonlab/measures.hpp>

using namespace andersonlab;
using Catch::Approx;

TEST_CASE("first-order eigenvalue count bound", "[estimates]") {
  const auto u = SingleSiteDistribution::uniform(0.0, 1.0);
  HamiltonianSpec none;
  none.hopping = Hopping::none;

  SECTION("decoupled flat model saturates the bound") {
    // Eigenvalues are the couplings themselves, so the mean count in I is
    // exactly sup-density * |I| * volume — the right-hand side.
    const CubeGeometry g(1, 50, explicit_scales(50, 1, 0));
    const InequalityReport rep = wegner_check(none, u, g, {0.4, 0.5}, 400, 61);
    CHECK(rep.rhs == Approx(10.1).epsilon(1e-12));
    CHECK(std::fabs(rep.lhs - 10.1) <= 3.0 * rep.stderr_lhs);
    CHECK(rep.pass());
    CHECK(rep.volume == 101.0);
    CHECK(rep.name == "wegner");
  }

  SECTION("interval covering the whole spectrum counts every state") {
    const CubeGeometry g(1, 50, explicit_scales(50, 1, 0));
    const InequalityReport rep = wegner_check(none, u, g, {-0.1, 1.1}, 50, 62);
    CHECK(rep.lhs == 101.0);
    CHECK(rep.stderr_lhs == 0.0);
    CHECK(rep.pass());
  }

  SECTION("coupled chain stays below the bound") {
    const CubeGeometry g(1, 60, explicit_scales(60, 1, 0));
    HamiltonianSpec spec;  // nearest-neighbor hopping, coupling 1
    const InequalityReport rep =
        wegner_check(spec, SingleSiteDistribution::uniform(-0.5, 0.5), g, {-0.05, 0.05}, 300, 63);
    CHECK(rep.pass());
    CHECK(rep.lhs > 0.0);
  }

  SECTION("two-dimensional box") {
    const CubeGeometry g(2, 5, explicit_scales(5, 1, 0));
    HamiltonianSpec spec;
    const InequalityReport rep =
        wegner_check(spec, SingleSiteDistribution::uniform(-0.5, 0.5), g, {-0.1, 0.1}, 150, 64);
    CHECK(rep.volume == 121.0);
    CHECK(rep.pass());
  }

  SECTION("restriction to one block uses the block volume") {
    const CubeGeometry g(1, 50, explicit_scales(50, 5, 2));
    const InequalityReport rep = wegner_check(none, u, g, {0.4, 0.5}, 300, 65, 2);
    CHECK(rep.volume > 0.0);
    CHECK(rep.volume < 101.0);
    CHECK(rep.rhs == Approx(0.1 * rep.volume).epsilon(1e-12));
    CHECK(std::fabs(rep.lhs - 0.1 * rep.volume) <= 3.0 * rep.stderr_lhs);
    CHECK(rep.pass());
  }

  SECTION("argument validation") {
    const CubeGeometry g(1, 5, explicit_scales(5, 1, 0));
    CHECK_THROWS_AS(wegner_check(none, u, g, {0.2, 0.4}, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("second-order eigenvalue pair bound", "[estimates]") {
  const auto u = SingleSiteDistribution::uniform(0.0, 1.0);
  HamiltonianSpec none;
  none.hopping = Hopping::none;

  SECTION("decoupled flat model: binomial pair count") {
    // Tr P_I is Binomial(101, 0.1), so E[N(N-1)] = 101*100*0.01 = 101 exactly,
    // just under the squared first-order bound 102.01.
    const CubeGeometry g(1, 50, explicit_scales(50, 1, 0));
    const InequalityReport rep = minami_check(none, u, g, {0.4, 0.5}, 400, 71);
    CHECK(rep.rhs == Approx(102.01).epsilon(1e-12));
    CHECK(std::fabs(rep.lhs - 101.0) <= 3.0 * rep.stderr_lhs);
    CHECK(rep.pass());
    CHECK(rep.name == "minami");
  }

  SECTION("coupled chain in a narrow window") {
    const CubeGeometry g(1, 60, explicit_scales(60, 1, 0));
    HamiltonianSpec spec;
    spec.coupling = 2.0;
    const InequalityReport rep =
        minami_check(spec, SingleSiteDistribution::uniform(-0.5, 0.5), g, {-0.05, 0.05}, 300, 72);
    CHECK(rep.pass());
    CHECK(rep.lhs >= 0.0);
  }

  SECTION("block restriction") {
    const CubeGeometry g(1, 50, explicit_scales(50, 5, 2));
    const InequalityReport rep = minami_check(none, u, g, {0.4, 0.5}, 200, 73, 3);
    CHECK(rep.pass());
    CHECK(rep.volume < 101.0);
  }

  SECTION("argument validation") {
    const CubeGeometry g(1, 5, explicit_scales(5, 1, 0));
    CHECK_THROWS_AS(minami_check(none, u, g, {0.2, 0.4}, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("diagonal resolvent moment bound", "[estimates]") {
  const auto u = SingleSiteDistribution::uniform(0.0, 1.0);
  HamiltonianSpec none;
  none.hopping = Hopping::none;

  SECTION("decoupled model matches the arctangent integral") {
    // Im z * E[Im 1/(omega - z)] at z = 0.5 + 0.1i over uniform couplings is
    // 0.1 * 2*atan(5) = 0.274680153389003; the k = 1 envelope is
    // pi * 1.5 * S(0.2) = 0.3*pi = 0.942477796076938.
    const CubeGeometry g(1, 50, explicit_scales(50, 1, 0));
    const InequalityReport rep = diagonal_green_check(none, u, g, {0.5, 0.1}, 200, 81, 1);
    CHECK(rep.rhs == Approx(0.942477796076938).epsilon(1e-12));
    CHECK(std::fabs(rep.lhs - 0.274680153389003) <= 3.0 * rep.stderr_lhs);
    CHECK(rep.pass());
    CHECK(rep.name == "diagonal_green");
  }

  SECTION("coupled chain under the default two-scale envelope") {
    const CubeGeometry g(1, 60, explicit_scales(60, 1, 0));
    HamiltonianSpec spec;
    const InequalityReport rep =
        diagonal_green_check(spec, SingleSiteDistribution::uniform(-0.5, 0.5), g, {0.3, 0.05}, 150, 82);
    CHECK(rep.pass());
    CHECK(rep.lhs > 0.0);
  }

  SECTION("argument validation") {
    const CubeGeometry g(1, 5, explicit_scales(5, 1, 0));
    CHECK_THROWS_AS(diagonal_green_check(none, u, g, {0.5, -0.1}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(diagonal_green_check(none, u, g, {0.5, 0.0}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(diagonal_green_check(none, u, g, {0.5, 0.1}, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(diagonal_green_check(none, u, g, {0.5, 0.1}, 10, 1, 0), std::invalid_argument);
  }
}

TEST_CASE("fractional moment decay scan", "[estimates]") {
  const auto w = SingleSiteDistribution::uniform(-0.5, 0.5);
  HamiltonianSpec strong;
  strong.coupling = 4.0;
  const std::vector<long> dists{2, 4, 6, 8, 10, 12, 14, 16};
  const std::vector<double> ims{1e-3, 1e-4};

  SECTION("decoupled model has exactly zero off-diagonal moments") {
    HamiltonianSpec none;
    none.hopping = Hopping::none;
    const CubeGeometry g(1, 30, explicit_scales(30, 1, 0));
    const DecayScan scan =
        fractional_moment_scan(none, w, g, 0.0, 1.0 / 3.0, {2, 4, 6}, ims, 50, 66);
    CHECK(scan.exact_zero);
    CHECK(scan.gamma_hat == 0.0);
    for (const auto& pt : scan.points) CHECK(pt.mean_moment == 0.0);
  }

  SECTION("strong-disorder chain decays exponentially") {
    const CubeGeometry g(1, 40, explicit_scales(40, 1, 0));
    const DecayScan scan = fractional_moment_scan(strong, w, g, 0.0, 1.0 / 3.0, dists, ims, 300, 67);
    CHECK(!scan.exact_zero);
    CHECK(scan.gamma_hat > 0.02);
    CHECK(scan.r_squared >= 0.95);
    CHECK(scan.c_hat > 0.0);
    CHECK(scan.points.front().mean_moment > scan.points.back().mean_moment);
    CHECK(scan.s == Approx(1.0 / 3.0));
    CHECK(scan.im_grid == ims);
  }

  SECTION("fitted rate is stable under more sampling and a larger box") {
    const CubeGeometry g40(1, 40, explicit_scales(40, 1, 0));
    const CubeGeometry g60(1, 60, explicit_scales(60, 1, 0));
    const double base =
        fractional_moment_scan(strong, w, g40, 0.0, 1.0 / 3.0, dists, ims, 300, 67).gamma_hat;
    const double more =
        fractional_moment_scan(strong, w, g40, 0.0, 1.0 / 3.0, dists, ims, 600, 67).gamma_hat;
    const double bigger =
        fractional_moment_scan(strong, w, g60, 0.0, 1.0 / 3.0, dists, ims, 300, 67).gamma_hat;
    CHECK(std::fabs(more - base) <= 0.3 * base);
    CHECK(std::fabs(bigger - base) <= 0.3 * base);
  }

  SECTION("argument validation") {
    const CubeGeometry g(1, 10, explicit_scales(10, 1, 0));
    CHECK_THROWS_AS(fractional_moment_scan(strong, w, g, 0.0, 0.0, {2}, ims, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fractional_moment_scan(strong, w, g, 0.0, 0.5, {}, ims, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fractional_moment_scan(strong, w, g, 0.0, 0.5, {2}, {}, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fractional_moment_scan(strong, w, g, 0.0, 0.5, {2}, {-0.1}, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fractional_moment_scan(strong, w, g, 0.0, 0.5, {-2}, ims, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fractional_moment_scan(strong, w, g, 0.0, 0.5, {500}, ims, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fractional_moment_scan(strong, w, g, 0.0, 0.5, {2}, ims, 0, 1),
                    std::invalid_argument);
  }
}
