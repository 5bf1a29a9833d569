#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "random.hpp"

namespace andersonlab {

// Probability mass function on {0, 1, ..., p.size()-1}.
struct Pmf {
  std::vector<double> p;
  double mass() const {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
  }
};

inline Pmf empirical_pmf(const std::vector<long>& counts) {
  if (counts.empty()) throw std::invalid_argument("empirical_pmf: no samples");
  long kmax = 0;
  for (long k : counts) {
    if (k < 0) throw std::invalid_argument("empirical_pmf: negative count");
    kmax = std::max(kmax, k);
  }
  Pmf pmf;
  pmf.p.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
  const double w = 1.0 / static_cast<double>(counts.size());
  for (long k : counts) pmf.p[static_cast<std::size_t>(k)] += w;
  return pmf;
}

// Poisson(lambda) restricted to {0..kmax}; the forward recursion
// p_{k+1} = p_k * lambda / (k+1) is stable for the lambdas in play here.
inline Pmf poisson_pmf(double lambda, long kmax) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson_pmf: lambda must be >= 0");
  if (kmax < 0) throw std::invalid_argument("poisson_pmf: kmax must be >= 0");
  Pmf pmf;
  pmf.p.resize(static_cast<std::size_t>(kmax) + 1);
  pmf.p[0] = std::exp(-lambda);
  for (long k = 0; k < kmax; ++k)
    pmf.p[static_cast<std::size_t>(k) + 1] = pmf.p[static_cast<std::size_t>(k)] * lambda / static_cast<double>(k + 1);
  return pmf;
}

// Truncation point beyond which Poisson(lambda) mass is < 1e-15 for any
// lambda <= ~1e3 (40 sigma plus a flat floor for small lambda).
inline long poisson_tail_cutoff(double lambda) {
  return static_cast<long>(std::ceil(lambda + 40.0 * std::sqrt(std::max(lambda, 1.0)) + 30.0));
}

// Total variation distance, supports of different lengths are zero-padded.
// Any mass the inputs leave off the grid is treated as matching worst-case
// (it simply never appears in the sum), so feed pmfs truncated where their
// remaining tails are negligible.
inline double tv_distance(const Pmf& a, const Pmf& b) {
  const std::size_t n = std::max(a.p.size(), b.p.size());
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pa = k < a.p.size() ? a.p[k] : 0.0;
    const double pb = k < b.p.size() ? b.p[k] : 0.0;
    s += std::fabs(pa - pb);
  }
  // Unaccounted tail mass on either side still separates the laws.
  const double ta = std::max(0.0, 1.0 - a.mass());
  const double tb = std::max(0.0, 1.0 - b.mass());
  return 0.5 * (s + std::fabs(ta - tb));
}

// TV between the empirical law of `counts` and Poisson(lambda); the Poisson
// grid extends far enough that the ignored tail is < 1e-15.
inline double tv_to_poisson(const std::vector<long>& counts, double lambda) {
  const Pmf emp = empirical_pmf(counts);
  const long kmax = std::max<long>(static_cast<long>(emp.p.size()) - 1, poisson_tail_cutoff(lambda));
  return tv_distance(emp, poisson_pmf(lambda, kmax));
}

// Mean of k(k-1)...(k-r+1): equals lambda^r exactly under Poisson(lambda).
inline double factorial_moment(const std::vector<long>& counts, int r) {
  if (counts.empty()) throw std::invalid_argument("factorial_moment: no samples");
  if (r < 1) throw std::invalid_argument("factorial_moment: need r >= 1");
  double s = 0.0;
  for (long k : counts) {
    double term = 1.0;
    for (int j = 0; j < r; ++j) term *= static_cast<double>(k - j);
    s += term;
  }
  return s / static_cast<double>(counts.size());
}

struct PoissonFitReport {
  double lambda_hat = 0.0;
  bool has_theory = false;
  double lambda_theory = 0.0;
  double tv_vs_hat = 0.0;
  double tv_vs_theory = 0.0;  // meaningful only when has_theory
  double chi2 = 0.0;
  long chi2_dof = 0;
  double chi2_pvalue = 1.0;
  long chi2_bins = 0;
  bool chi2_skipped = false;  // degenerate (all-equal) samples: no test possible
  double fm2 = 0.0;
  double fm2_poisson_gap = 0.0;  // |fm2 - lambda_hat^2|; zero in expectation under Poisson
};

namespace detail {

// Pearson chi-square of `counts` against Poisson(lambda). Cells with expected
// count < 5 are merged rightward (the final cell absorbs the entire tail),
// dof = bins - 1 - 1 since lambda was fit from the same data.
inline void chi_square_vs_poisson(const std::vector<long>& counts, double lambda,
                                  PoissonFitReport& res) {
  const double n = static_cast<double>(counts.size());
  long kmax = poisson_tail_cutoff(lambda);
  for (long k : counts) kmax = std::max(kmax, k);
  const Pmf q = poisson_pmf(lambda, kmax);

  std::vector<double> observed(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (long k : counts) observed[static_cast<std::size_t>(k)] += 1.0;
  std::vector<double> expected(q.p.size());
  for (std::size_t k = 0; k < q.p.size(); ++k) expected[k] = n * q.p[k];
  // Fold everything beyond the grid into the last expected cell.
  double tail = n;
  for (double e : expected) tail -= e;
  expected.back() += std::max(0.0, tail);

  // Merge low-expectation cells left to right.
  std::vector<double> obs_m, exp_m;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    o_acc += observed[k];
    e_acc += expected[k];
    if (e_acc >= 5.0) {
      obs_m.push_back(o_acc);
      exp_m.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (!exp_m.empty()) {
      obs_m.back() += o_acc;
      exp_m.back() += e_acc;
    } else {
      obs_m.push_back(o_acc);
      exp_m.push_back(e_acc);
    }
  }
  res.chi2_bins = static_cast<long>(exp_m.size());
  for (std::size_t b = 0; b < exp_m.size(); ++b) {
    const double d = obs_m[b] - exp_m[b];
    res.chi2 += d * d / exp_m[b];
  }
  res.chi2_dof = res.chi2_bins - 2;
  if (res.chi2_dof < 1) {
    res.chi2_dof = 0;
    res.chi2_pvalue = 1.0;
    return;
  }
  res.chi2_pvalue = boost::math::gamma_q(static_cast<double>(res.chi2_dof) / 2.0, res.chi2 / 2.0);
}

}  // namespace detail

// Fits lambda_hat = sample mean, then measures the sample's distance from the
// fitted Poisson law three ways: total variation, Pearson chi-square (skipped
// with a flag when all samples coincide), and the second factorial moment
// (which equals lambda^2 exactly under a Poisson law). An externally supplied
// reference intensity adds a second TV distance.
inline PoissonFitReport poisson_gof(const std::vector<long>& counts,
                                    double lambda_theory = std::numeric_limits<double>::quiet_NaN()) {
  if (counts.size() < 100) throw std::invalid_argument("poisson_gof: need at least 100 samples");
  PoissonFitReport res;
  double s = 0.0;
  for (long k : counts) s += static_cast<double>(k);
  res.lambda_hat = s / static_cast<double>(counts.size());
  res.tv_vs_hat = tv_to_poisson(counts, res.lambda_hat);
  if (!std::isnan(lambda_theory)) {
    res.has_theory = true;
    res.lambda_theory = lambda_theory;
    res.tv_vs_theory = tv_to_poisson(counts, lambda_theory);
  }
  res.fm2 = factorial_moment(counts, 2);
  res.fm2_poisson_gap = std::fabs(res.fm2 - res.lambda_hat * res.lambda_hat);
  const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  if (*mn == *mx) {
    res.chi2_skipped = true;
    return res;
  }
  detail::chi_square_vs_poisson(counts, res.lambda_hat, res);
  return res;
}

struct SampleSummary {
  double mean = 0.0;
  double stderr_mean = 0.0;
  long n = 0;
};

inline SampleSummary summarize(const std::vector<long>& counts) {
  SampleSummary s;
  s.n = static_cast<long>(counts.size());
  if (counts.empty()) return s;
  double sum = 0.0;
  for (long k : counts) sum += static_cast<double>(k);
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (long k : counts) {
    const double d = static_cast<double>(k) - s.mean;
    ss += d * d;
  }
  s.stderr_mean = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
  return s;
}

struct ProcessComparison {
  double tv = 0.0;
  double bootstrap_sigma = 0.0;
  double mean_gap = 0.0;  // |mean(a) - mean(b)|
  long n = 0;
  long n_boot = 0;
};

// TV between the empirical laws of two count sequences observed on the same
// realizations, with a paired nonparametric bootstrap for its sampling noise.
inline ProcessComparison compare_count_processes(const std::vector<long>& a, const std::vector<long>& b,
                                                 long n_boot, std::uint64_t seed) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("compare_count_processes: need equal-length nonempty sequences");
  if (n_boot < 0) throw std::invalid_argument("compare_count_processes: n_boot must be >= 0");
  ProcessComparison cmp;
  cmp.n = static_cast<long>(a.size());
  cmp.n_boot = n_boot;
  cmp.tv = tv_distance(empirical_pmf(a), empirical_pmf(b));
  cmp.mean_gap = std::fabs(summarize(a).mean - summarize(b).mean);
  if (n_boot == 0) return cmp;

  RandomStream stream(seed);
  std::vector<long> ra(a.size()), rb(b.size());
  std::vector<double> tvs;
  tvs.reserve(static_cast<std::size_t>(n_boot));
  const std::uint64_t n = a.size();
  for (long rep = 0; rep < n_boot; ++rep) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = static_cast<std::size_t>(stream.bits() % n);
      ra[i] = a[j];
      rb[i] = b[j];
    }
    tvs.push_back(tv_distance(empirical_pmf(ra), empirical_pmf(rb)));
  }
  double mean = 0.0;
  for (double t : tvs) mean += t;
  mean /= static_cast<double>(tvs.size());
  double ss = 0.0;
  for (double t : tvs) ss += (t - mean) * (t - mean);
  cmp.bootstrap_sigma = tvs.size() > 1 ? std::sqrt(ss / static_cast<double>(tvs.size() - 1)) : 0.0;
  return cmp;
}

struct SpacingOptions {
  double core_lo = 0.0;   // pool gaps whose left endpoint lies in [core_lo, core_hi)
  double core_hi = 0.0;
  long min_gaps = 500;
};

struct SpacingReport {
  long n_gaps = 0;
  double mean_gap = 0.0;
  double ks_exp1 = 1.0;  // KS distance of mean-normalized gaps to Exp(1)
  std::vector<double> normalized_gaps;
};

// Pools nearest-neighbor gaps across realizations of a (microscopic-scale)
// point set. Only gaps with left endpoint inside the core window enter, so
// edge effects from the sampling buffer stay out of the statistic.
inline SpacingReport spacing_statistics(const std::vector<std::vector<double>>& micro,
                                        const SpacingOptions& opts) {
  if (!(opts.core_lo < opts.core_hi))
    throw std::invalid_argument("spacing_statistics: need core_lo < core_hi");
  std::vector<double> gaps;
  for (const auto& pts : micro) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (pts[i + 1] < pts[i]) throw std::invalid_argument("spacing_statistics: point sets must be sorted");
      if (pts[i] >= opts.core_lo && pts[i] < opts.core_hi) gaps.push_back(pts[i + 1] - pts[i]);
    }
  }
  SpacingReport rep;
  rep.n_gaps = static_cast<long>(gaps.size());
  if (rep.n_gaps < std::max<long>(opts.min_gaps, 1))
    throw NumericalError("spacing_statistics: pooled too few gaps (" + std::to_string(rep.n_gaps) + ")");
  double sum = 0.0;
  for (double g : gaps) sum += g;
  rep.mean_gap = sum / static_cast<double>(rep.n_gaps);
  if (!(rep.mean_gap > 0.0)) throw NumericalError("spacing_statistics: degenerate mean gap");
  rep.normalized_gaps.reserve(gaps.size());
  for (double g : gaps) rep.normalized_gaps.push_back(g / rep.mean_gap);
  std::sort(rep.normalized_gaps.begin(), rep.normalized_gaps.end());
  const double n = static_cast<double>(rep.n_gaps);
  double d = 0.0;
  for (std::size_t i = 0; i < rep.normalized_gaps.size(); ++i) {
    const double f = 1.0 - std::exp(-rep.normalized_gaps[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::fabs(f - lo), std::fabs(f - hi)});
  }
  rep.ks_exp1 = d;
  return rep;
}

}  // namespace andersonlab
