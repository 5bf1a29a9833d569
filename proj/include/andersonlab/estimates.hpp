#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"
#include "lattice.hpp"
#include "measures.hpp"
#include "processes.hpp"
#include "random.hpp"
#include "spectral.hpp"

namespace andersonlab {

// One Monte Carlo inequality check. The pass rule deliberately subtracts the
// sampling noise: lhs - 3*stderr <= rhs, so a true bound fails with
// probability ~1e-3 per check rather than half the time at equality.
struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double stderr_lhs = 0.0;
  double rhs = 0.0;
  Interval interval;
  double volume = 0.0;
  long n_real = 0;
  bool pass() const { return lhs - 3.0 * stderr_lhs <= rhs; }
};

namespace detail {

struct MeanVar {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

inline MeanVar mean_and_stderr(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.empty()) return {};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace detail

// E[Tr P_I(H)] <= Q_mu(|I|) |box|, averaged over realizations. When `block`
// is positive the trace is taken over that sub-box restriction instead.
inline InequalityReport wegner_check(const HamiltonianSpec& spec, const SingleSiteDistribution& dist,
                                     const CubeGeometry& geom, Interval I, long n_real,
                                     std::uint64_t master_seed, long block = 0) {
  if (n_real < 1) throw std::invalid_argument("wegner_check: need n_real >= 1");
  std::vector<double> traces;
  traces.reserve(static_cast<std::size_t>(n_real));
  double volume = 0.0;
  for (long i = 0; i < n_real; ++i) {
    RandomStream stream = RandomStream::for_realization(master_seed, static_cast<std::uint64_t>(i));
    const std::vector<double> omega = dist.sample_iid(geom.n_sites(), stream);
    SparseHamiltonian H = assemble_hamiltonian(spec, geom, omega);
    if (block > 0) H = restrict_to_block(H, geom, block);
    if (i == 0) volume = static_cast<double>(H.n);
    traces.push_back(static_cast<double>(count_in_window(H, I)));
  }
  const auto mv = detail::mean_and_stderr(traces);
  InequalityReport rep;
  rep.name = "wegner";
  rep.lhs = mv.mean;
  rep.stderr_lhs = mv.stderr_mean;
  rep.rhs = dist.q_mu(I.width()) * volume;
  rep.interval = I;
  rep.volume = volume;
  rep.n_real = n_real;
  return rep;
}

// E[Tr P_I (Tr P_I - 1)] <= (Q_mu(|I|) |box|)^2.
inline InequalityReport minami_check(const HamiltonianSpec& spec, const SingleSiteDistribution& dist,
                                     const CubeGeometry& geom, Interval I, long n_real,
                                     std::uint64_t master_seed, long block = 0) {
  if (n_real < 1) throw std::invalid_argument("minami_check: need n_real >= 1");
  std::vector<double> pairs;
  pairs.reserve(static_cast<std::size_t>(n_real));
  double volume = 0.0;
  for (long i = 0; i < n_real; ++i) {
    RandomStream stream = RandomStream::for_realization(master_seed, static_cast<std::uint64_t>(i));
    const std::vector<double> omega = dist.sample_iid(geom.n_sites(), stream);
    SparseHamiltonian H = assemble_hamiltonian(spec, geom, omega);
    if (block > 0) H = restrict_to_block(H, geom, block);
    if (i == 0) volume = static_cast<double>(H.n);
    const double tr = static_cast<double>(count_in_window(H, I));
    pairs.push_back(tr * (tr - 1.0));
  }
  const auto mv = detail::mean_and_stderr(pairs);
  InequalityReport rep;
  rep.name = "minami";
  rep.lhs = mv.mean;
  rep.stderr_lhs = mv.stderr_mean;
  const double q = dist.q_mu(I.width()) * volume;
  rep.rhs = q * q;
  rep.interval = I;
  rep.volume = volume;
  rep.n_real = n_real;
  return rep;
}

// Im z * E[Im G(z; n, n)] <= pi (1 + k/2) S_mu(2 Im z / k) at a spread of
// diagonal sites. k is the number of cylinder scales the bound is optimized
// over; k = 2 matches the form used everywhere here.
inline InequalityReport diagonal_green_check(const HamiltonianSpec& spec,
                                             const SingleSiteDistribution& dist,
                                             const CubeGeometry& geom, std::complex<double> z,
                                             long n_real, std::uint64_t master_seed, int k = 2,
                                             const GreenOptions& opts = {}) {
  if (n_real < 1) throw std::invalid_argument("diagonal_green_check: need n_real >= 1");
  if (!(z.imag() > 0.0)) throw std::invalid_argument("diagonal_green_check: need Im z > 0");
  if (k < 1) throw std::invalid_argument("diagonal_green_check: need k >= 1");

  // Up to 8 evenly strided diagonal sites; every realization uses the same set.
  std::vector<long> sites;
  const long n = geom.n_sites();
  const long m = std::min<long>(8, n);
  for (long j = 0; j < m; ++j) sites.push_back(j * n / m + n / (2 * m));

  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n_real * m));
  for (long i = 0; i < n_real; ++i) {
    RandomStream stream = RandomStream::for_realization(master_seed, static_cast<std::uint64_t>(i));
    const std::vector<double> omega = dist.sample_iid(n, stream);
    const SparseHamiltonian H = assemble_hamiltonian(spec, geom, omega);
    for (long s : sites) {
      const GreenColumn col = green_column(H, z, s, opts);
      vals.push_back(z.imag() * col.values[static_cast<std::size_t>(s)].imag());
    }
  }
  const auto mv = detail::mean_and_stderr(vals);
  InequalityReport rep;
  rep.name = "diagonal_green";
  rep.lhs = mv.mean;
  rep.stderr_lhs = mv.stderr_mean;
  rep.rhs = std::numbers::pi * (1.0 + static_cast<double>(k) / 2.0) *
            dist.s_mu(2.0 * z.imag() / static_cast<double>(k));
  rep.interval = Interval{z.real(), z.real()};
  rep.volume = static_cast<double>(n);
  rep.n_real = n_real;
  return rep;
}

struct DecayPoint {
  long distance = 0;
  double mean_moment = 0.0;  // E |G(z; n0, n0 + distance)|^s, averaged over the z-grid
  double stderr_moment = 0.0;
};

struct DecayScan {
  double s = 0.5;                 // fractional power, in (0, alpha)
  std::vector<double> im_grid;    // Im z ladder the sup is approximated over
  std::vector<DecayPoint> points;
  bool exact_zero = false;        // all sampled moments vanished (decoupled model)
  double gamma_hat = 0.0;         // fitted decay rate of log mean vs distance
  double c_hat = 0.0;             // fitted prefactor
  double r_squared = 0.0;
};

// Samples E|G^box(E + i eta; n0, n0 + r)|^s for r in `distances`, maximizing
// over the Im z grid pointwise, then fits log(moment) ~ log C - gamma r.
inline DecayScan fractional_moment_scan(const HamiltonianSpec& spec, const SingleSiteDistribution& dist,
                                        const CubeGeometry& geom, double E, double s,
                                        const std::vector<long>& distances,
                                        const std::vector<double>& im_grid, long n_real,
                                        std::uint64_t master_seed, const GreenOptions& opts = {}) {
  if (n_real < 1) throw std::invalid_argument("fractional_moment_scan: need n_real >= 1");
  if (!(s > 0.0)) throw std::invalid_argument("fractional_moment_scan: need s > 0");
  if (distances.empty()) throw std::invalid_argument("fractional_moment_scan: empty distance list");
  if (im_grid.empty()) throw std::invalid_argument("fractional_moment_scan: empty Im z grid");
  for (double eta : im_grid)
    if (!(eta > 0.0)) throw std::invalid_argument("fractional_moment_scan: Im z must be positive");

  const long n = geom.n_sites();
  const long r_max = *std::max_element(distances.begin(), distances.end());
  for (long r : distances)
    if (r < 0) throw std::invalid_argument("fractional_moment_scan: distances must be nonnegative");

  // Walk along the first axis, centered, so `distance` is graph distance.
  std::vector<long> c0(static_cast<std::size_t>(geom.dimension()), 0);
  c0[0] = -(r_max / 2);
  if (c0[0] < -geom.half_side() || c0[0] + r_max > geom.half_side())
    throw std::invalid_argument("fractional_moment_scan: max distance does not fit in the box");
  const long n0 = geom.index_of_site(c0);
  auto index_at = [&](long r) {
    std::vector<long> c = c0;
    c[0] += r;
    return geom.index_of_site(c);
  };

  // accum[zi][ri] collects |G|^s samples.
  std::vector<std::vector<std::vector<double>>> accum(
      im_grid.size(), std::vector<std::vector<double>>(distances.size()));
  for (auto& per_z : accum)
    for (auto& cell : per_z) cell.reserve(static_cast<std::size_t>(n_real));

  for (long i = 0; i < n_real; ++i) {
    RandomStream stream = RandomStream::for_realization(master_seed, static_cast<std::uint64_t>(i));
    const std::vector<double> omega = dist.sample_iid(n, stream);
    const SparseHamiltonian H = assemble_hamiltonian(spec, geom, omega);
    for (std::size_t zi = 0; zi < im_grid.size(); ++zi) {
      const GreenColumn col = green_column(H, {E, im_grid[zi]}, n0, opts);
      for (std::size_t ri = 0; ri < distances.size(); ++ri) {
        const long target = index_at(distances[ri]);
        accum[zi][ri].push_back(std::pow(std::abs(col.values[static_cast<std::size_t>(target)]), s));
      }
    }
  }

  DecayScan scan;
  scan.s = s;
  scan.im_grid = im_grid;
  scan.points.resize(distances.size());
  bool any_nonzero = false;
  for (std::size_t ri = 0; ri < distances.size(); ++ri) {
    DecayPoint best;
    best.distance = distances[ri];
    for (std::size_t zi = 0; zi < im_grid.size(); ++zi) {
      const auto mv = detail::mean_and_stderr(accum[zi][ri]);
      if (zi == 0 || mv.mean > best.mean_moment) {
        best.mean_moment = mv.mean;
        best.stderr_moment = mv.stderr_mean;
      }
    }
    if (best.mean_moment >= 1e-300) any_nonzero = true;
    scan.points[ri] = best;
  }
  scan.exact_zero = !any_nonzero;
  if (scan.exact_zero) return scan;

  // Least squares on (r, log moment); zero moments are floored to keep the
  // fit defined, which only happens deep in the localized tail.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double m = static_cast<double>(scan.points.size());
  for (const auto& pt : scan.points) {
    const double x = static_cast<double>(pt.distance);
    const double y = std::log(std::max(pt.mean_moment, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double denom = m * sxx - sx * sx;
  if (denom <= 0.0) throw NumericalError("fractional_moment_scan: degenerate distance grid");
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;
  scan.gamma_hat = -slope;
  scan.c_hat = std::exp(intercept);
  const double ss_tot = syy - sy * sy / m;
  double ss_res = 0.0;
  for (const auto& pt : scan.points) {
    const double y = std::log(std::max(pt.mean_moment, 1e-300));
    const double fit = intercept + slope * static_cast<double>(pt.distance);
    ss_res += (y - fit) * (y - fit);
  }
  scan.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return scan;
}

}  // namespace andersonlab
