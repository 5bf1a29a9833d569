#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"
#include "lattice.hpp"
#include "measures.hpp"
#include "random.hpp"
#include "spectral.hpp"

namespace andersonlab {

// Anomalous rescaling (2L+1)^(d/alpha): the factor that maps the macroscopic
// interval I to the microscopic window around E whose eigenvalue count has a
// nontrivial limit.
inline double beta_scale(long L, int d, double alpha) {
  if (L < 1 || d < 1) throw std::invalid_argument("beta_scale: need L >= 1 and d >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("beta_scale: alpha outside (0,1]");
  return std::pow(static_cast<double>(2 * L + 1), static_cast<double>(d) / alpha);
}

// Reference measure of an interval: alpha*2^(alpha-1)*Integral_I |y|^(alpha-1) dy
// in closed form, 2^(alpha-1) * (sgn(b)|b|^alpha - sgn(a)|a|^alpha).
// Reduces to Lebesgue length at alpha = 1.
inline double l_alpha(double alpha, Interval I) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("l_alpha: alpha outside (0,1]");
  if (I.a > I.b) throw std::invalid_argument("l_alpha: need a <= b");
  auto signed_pow = [alpha](double y) {
    if (y == 0.0) return 0.0;
    return std::copysign(std::pow(std::fabs(y), alpha), y);
  };
  return std::pow(2.0, alpha - 1.0) * (signed_pow(I.b) - signed_pow(I.a));
}

struct RescaledWindow {
  double E = 0.0;
  Interval I;
  long L = 0;
  double beta = 1.0;
  Interval J;  // E + I/beta
};

inline RescaledWindow rescaled_window(double E, Interval I, long L, int d, double alpha) {
  RescaledWindow w;
  w.E = E;
  w.I = I;
  w.L = L;
  w.beta = beta_scale(L, d, alpha);
  if (!I.empty() && !(I.width() / w.beta > 1e-300))
    throw NumericalError("rescaled window underflows: |I|/beta below 1e-300");
  w.J = Interval{E + I.a / w.beta, E + I.b / w.beta};
  return w;
}

// Eigenvalue count of H in the microscopic window E + I/beta.
inline long xi_count(const SparseHamiltonian& H, double E, Interval I, long L, double alpha, int d,
                     CountStats* stats = nullptr) {
  const RescaledWindow w = rescaled_window(E, I, L, d, alpha);
  return count_in_window(H, w.J, stats);
}

// Per-block counts of the restrictions H|C_p in the same microscopic window.
inline std::vector<long> eta_counts(const SparseHamiltonian& H, const CubeGeometry& geom, double E,
                                    Interval I, long L, double alpha, int d, CountStats* stats = nullptr) {
  const RescaledWindow w = rescaled_window(E, I, L, d, alpha);
  std::vector<long> out;
  out.reserve(static_cast<std::size_t>(geom.n_blocks()));
  for (long p = 1; p <= geom.n_blocks(); ++p)
    out.push_back(count_in_window(restrict_to_block(H, geom, p), w.J, stats));
  return out;
}

struct EnsembleOptions {
  int workers = 1;
  bool per_block = true;        // also record block counts
  bool collect_micro = false;   // keep microscopic eigenvalues near I for spacing work
  double micro_buffer = 0.0;    // extension of I on both ends (microscopic units)
};

// One Monte Carlo pass: realization i draws its couplings from the stream
// derived from (master_seed, i), so the resulting vectors are identical for
// any worker count and scheduling order.
struct CountEnsemble {
  std::vector<long> xi;
  std::vector<std::vector<long>> eta;      // [realization][block]; empty when disabled
  std::vector<std::vector<double>> micro;  // sorted microscopic eigenvalues per realization
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  CountStats stats;
};

inline CountEnsemble run_ensemble(const HamiltonianSpec& spec, const SingleSiteDistribution& dist,
                                  const CubeGeometry& geom, double E, Interval I, long n_real,
                                  std::uint64_t master_seed, double alpha,
                                  const EnsembleOptions& opts = {}) {
  if (n_real < 1) throw std::invalid_argument("run_ensemble: need n_real >= 1");
  const RescaledWindow w = rescaled_window(E, I, geom.half_side(), geom.dimension(), alpha);

  CountEnsemble ens;
  ens.master_seed = master_seed;
  ens.xi.assign(static_cast<std::size_t>(n_real), 0);
  const bool per_block = opts.per_block;
  if (per_block) ens.eta.assign(static_cast<std::size_t>(n_real), {});
  if (opts.collect_micro) ens.micro.assign(static_cast<std::size_t>(n_real), {});

  const Interval micro_window{w.J.a - opts.micro_buffer / w.beta, w.J.b + opts.micro_buffer / w.beta};
  const double micro_tol = std::max(1e-13, 1e-11 / w.beta);

  const int workers = std::max(1, opts.workers);
  std::atomic<long> next{0};
  std::vector<CountStats> worker_stats(static_cast<std::size_t>(workers));

  auto work = [&](int wid) {
    CountStats& st = worker_stats[static_cast<std::size_t>(wid)];
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= n_real) break;
      RandomStream stream = RandomStream::for_realization(master_seed, static_cast<std::uint64_t>(i));
      const std::vector<double> omega = dist.sample_iid(geom.n_sites(), stream);
      const SparseHamiltonian H = assemble_hamiltonian(spec, geom, omega);
      const WindowCounter counter(H);
      ens.xi[static_cast<std::size_t>(i)] = counter.count(w.J, &st);
      if (per_block) {
        auto& row = ens.eta[static_cast<std::size_t>(i)];
        if (geom.n_blocks() == 1) {
          row = {ens.xi[static_cast<std::size_t>(i)]};
        } else {
          row.reserve(static_cast<std::size_t>(geom.n_blocks()));
          for (long p = 1; p <= geom.n_blocks(); ++p)
            row.push_back(count_in_window(restrict_to_block(H, geom, p), w.J, &st));
        }
      }
      if (opts.collect_micro) {
        auto evals = counter.eigenvalues_in_window(micro_window, micro_tol, &st);
        auto& slot = ens.micro[static_cast<std::size_t>(i)];
        slot.reserve(evals.size());
        for (double lam : evals) slot.push_back((lam - E) * w.beta);
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& st : worker_stats) ens.stats.merge(st);
  return ens;
}

struct IdsEstimate {
  std::vector<double> energies;
  std::vector<double> values;   // estimated spectral fraction at or below E
  std::vector<double> stderrs;  // Monte Carlo standard errors
};

// Finite-volume spectral distribution estimator: mean over realizations of
// #\{eigenvalues <= E\} / |box|.
inline IdsEstimate ids_estimate(const HamiltonianSpec& spec, const SingleSiteDistribution& dist, int d,
                                long L, const std::vector<double>& energy_grid, long n_real,
                                std::uint64_t master_seed) {
  if (n_real < 1) throw std::invalid_argument("ids_estimate: need n_real >= 1");
  for (std::size_t j = 1; j < energy_grid.size(); ++j)
    if (energy_grid[j] < energy_grid[j - 1]) throw std::invalid_argument("ids_estimate: grid must be sorted");
  const CubeGeometry geom(d, L, explicit_scales(L, 1, 0));
  const double vol = static_cast<double>(geom.n_sites());

  std::vector<double> sum(energy_grid.size(), 0.0), sumsq(energy_grid.size(), 0.0);
  for (long i = 0; i < n_real; ++i) {
    RandomStream stream = RandomStream::for_realization(master_seed, static_cast<std::uint64_t>(i));
    const std::vector<double> omega = dist.sample_iid(geom.n_sites(), stream);
    const SparseHamiltonian H = assemble_hamiltonian(spec, geom, omega);
    const WindowCounter counter(H);
    for (std::size_t j = 0; j < energy_grid.size(); ++j) {
      const double frac = static_cast<double>(counter.count_leq(energy_grid[j])) / vol;
      sum[j] += frac;
      sumsq[j] += frac * frac;
    }
  }
  IdsEstimate ids;
  ids.energies = energy_grid;
  ids.values.resize(energy_grid.size());
  ids.stderrs.resize(energy_grid.size());
  const double n = static_cast<double>(n_real);
  for (std::size_t j = 0; j < energy_grid.size(); ++j) {
    const double mean = sum[j] / n;
    ids.values[j] = mean;
    const double var = n > 1 ? std::max(0.0, (sumsq[j] - n * mean * mean) / (n - 1.0)) : 0.0;
    ids.stderrs[j] = std::sqrt(var / n);
  }
  return ids;
}

struct AlphaDerivative {
  double E = 0.0;
  double alpha = 1.0;
  std::vector<double> epsilons;
  std::vector<double> ratios;  // nu((E-eps, E+eps]) / (2 eps)^alpha
  double d_lower = 0.0;
  double d_upper = 0.0;  // finite-resolution stand-in for the upper derivative
};

namespace detail {

template <typename MassFn>
AlphaDerivative derivative_ladder(MassFn mass, double E, double alpha, double eps_min, double eps_max,
                                  double grid_factor) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha_upper_derivative: alpha outside (0,1]");
  if (!(eps_min > 0.0 && eps_min <= eps_max))
    throw std::invalid_argument("alpha_upper_derivative: need 0 < eps_min <= eps_max");
  if (!(grid_factor > 1.0)) throw std::invalid_argument("alpha_upper_derivative: grid factor must exceed 1");
  AlphaDerivative out;
  out.E = E;
  out.alpha = alpha;
  out.d_lower = std::numeric_limits<double>::infinity();
  out.d_upper = 0.0;
  for (double eps = eps_max; eps >= eps_min * (1.0 - 1e-12); eps /= grid_factor) {
    const double ratio = mass(eps) / std::pow(2.0 * eps, alpha);
    out.epsilons.push_back(eps);
    out.ratios.push_back(ratio);
    out.d_lower = std::min(out.d_lower, ratio);
    out.d_upper = std::max(out.d_upper, ratio);
  }
  if (out.ratios.empty()) out.d_lower = 0.0;
  return out;
}

}  // namespace detail

// Exact-CDF ladder (valid whenever the spectral distribution is the coupling
// distribution itself, i.e. the hopping-free model).
inline AlphaDerivative alpha_upper_derivative(const SingleSiteDistribution& mu, double E, double alpha,
                                              double eps_min, double eps_max, double grid_factor = 2.0) {
  return detail::derivative_ladder(
      [&](double eps) { return mu.cdf(E + eps) - mu.cdf(E - eps); }, E, alpha, eps_min, eps_max,
      grid_factor);
}

// Monte Carlo ladder on an estimated spectral distribution curve.
inline AlphaDerivative alpha_upper_derivative(const IdsEstimate& ids, double E, double alpha,
                                              double eps_min, double eps_max, double grid_factor = 2.0) {
  if (ids.energies.size() < 2) throw std::invalid_argument("alpha_upper_derivative: curve too short");
  double resolution = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < ids.energies.size(); ++j)
    resolution = std::min(resolution, ids.energies[j] - ids.energies[j - 1]);
  if (eps_min < resolution)
    throw std::invalid_argument(
        "alpha_upper_derivative: eps_min below the curve resolution " + std::to_string(resolution));
  auto value_at = [&](double x) {
    if (x <= ids.energies.front()) return ids.values.front();
    if (x >= ids.energies.back()) return ids.values.back();
    const auto it = std::upper_bound(ids.energies.begin(), ids.energies.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - ids.energies.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - ids.energies[lo]) / (ids.energies[hi] - ids.energies[lo]);
    return ids.values[lo] + t * (ids.values[hi] - ids.values[lo]);
  };
  return detail::derivative_ladder([&](double eps) { return value_at(E + eps) - value_at(E - eps); }, E,
                                   alpha, eps_min, eps_max, grid_factor);
}

struct GammaParameter {
  double value = 0.0;
  bool symmetric_interval = true;  // the limit statement assumes I = -I
};

inline GammaParameter gamma_parameter(double d_upper, double alpha, Interval I) {
  if (d_upper < 0.0) throw std::invalid_argument("gamma_parameter: derivative must be nonnegative");
  GammaParameter g;
  g.value = d_upper * l_alpha(alpha, I);
  g.symmetric_interval = std::fabs(I.a + I.b) <= 1e-12 * std::max(1.0, I.width());
  return g;
}

}  // namespace andersonlab
