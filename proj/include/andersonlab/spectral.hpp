#pragma once

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"
#include "lattice.hpp"

namespace andersonlab {

using SpectralWindow = Interval;

struct GreenQuery {
  std::complex<double> z;  // Im z > 0
  long n = 0;
  long m = 0;
};

// Tie-handling bookkeeping for window counting: how many shifts had to be
// nudged off an exact eigenvalue and how many fell back to the guarded pivot.
struct CountStats {
  long jitter_events = 0;
  long tie_fallbacks = 0;

  void merge(const CountStats& o) {
    jitter_events += o.jitter_events;
    tie_fallbacks += o.tie_fallbacks;
  }
};

namespace detail {

// One factorization pass on a tridiagonal (d, e): the sign count of the
// pivots t_i = d_i - sigma - e_{i-1}^2 / t_{i-1} gives the number of
// eigenvalues <= sigma (Sylvester inertia).  Vanishing pivots are replaced by
// -pivmin, which counts an exact tie as "<=".  Returns {count, sawExactZero}.
inline std::pair<long, bool> sturm_pass(const std::vector<double>& d, const std::vector<double>& e,
                                        double sigma, double pivmin) {
  long count = 0;
  bool saw_zero = false;
  double t = 1.0;
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double esq = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
    t = d[i] - sigma - esq / t;
    if (t == 0.0) {
      saw_zero = true;
      t = -pivmin;
    }
    if (t < 0.0) ++count;
  }
  return {count, saw_zero};
}

}  // namespace detail

// Eigenvalue counting backend.  d = 1 Hamiltonians are counted directly on
// their tridiagonal; anything else is Householder-reduced to a similar
// tridiagonal once (dense, capped) and every shift after that costs O(n).
class WindowCounter {
public:
  explicit WindowCounter(const SparseHamiltonian& H, long dense_cap = 4000) {
    norm_ = std::max(1.0, H.inf_norm());
    if (H.tridiagonal) {
      d_ = H.diag;
      e_ = H.offdiag;
    } else {
      if (H.n > dense_cap)
        throw NumericalError("window counting: matrix order " + std::to_string(H.n) +
                             " exceeds the dense reduction cap " + std::to_string(dense_cap));
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(H.n, H.n);
      for (long i = 0; i < H.n; ++i) {
        A(i, i) = H.diag[static_cast<std::size_t>(i)];
        for (long k = H.row_ptr[static_cast<std::size_t>(i)]; k < H.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
          A(i, H.col_idx[static_cast<std::size_t>(k)]) = H.hop;
      }
      Eigen::Tridiagonalization<Eigen::MatrixXd> tri(A);
      const Eigen::VectorXd dv = tri.diagonal();
      const Eigen::VectorXd ev = tri.subDiagonal();
      d_.assign(dv.data(), dv.data() + dv.size());
      e_.assign(ev.data(), ev.data() + ev.size());
    }
    double emax = 1.0;
    for (double e : e_) emax = std::max(emax, e * e);
    pivmin_ = std::numeric_limits<double>::min() * emax;
  }

  long order() const { return static_cast<long>(d_.size()); }

  // #eigenvalues <= sigma.  An exact-zero pivot means the shift hit an
  // eigenvalue of a leading principal block; the shift is retried nudged
  // upward by multiples of 1e-12*max(1,|H|) (keeping ties inside a (a,b]
  // window), and after three failed retries the guarded-pivot count of the
  // original shift is used.
  long count_leq(double sigma, CountStats* stats = nullptr) const {
    const double jitter = 1e-12 * norm_;
    auto first = detail::sturm_pass(d_, e_, sigma, pivmin_);
    if (!first.second) return first.first;
    for (int attempt = 1; attempt <= 3; ++attempt) {
      auto retry = detail::sturm_pass(d_, e_, sigma + attempt * jitter, pivmin_);
      if (!retry.second) {
        if (stats) ++stats->jitter_events;
        return retry.first;
      }
    }
    if (stats) ++stats->tie_fallbacks;
    return first.first;
  }

  // #eigenvalues in (a, b].
  long count(SpectralWindow w, CountStats* stats = nullptr) const {
    if (w.empty()) return 0;
    return count_leq(w.b, stats) - count_leq(w.a, stats);
  }

  // All eigenvalues in (a, b], ascending, located by bisection to abstol.
  std::vector<double> eigenvalues_in_window(SpectralWindow w, double abstol,
                                            CountStats* stats = nullptr) const {
    std::vector<double> out;
    if (w.empty()) return out;
    const long below_a = count_leq(w.a, stats);
    const long below_b = count_leq(w.b, stats);
    for (long j = below_a + 1; j <= below_b; ++j) {
      double lo = w.a, hi = w.b;
      while (hi - lo > abstol) {
        const double mid = 0.5 * (lo + hi);
        if (count_leq(mid, stats) >= j)
          hi = mid;
        else
          lo = mid;
      }
      out.push_back(0.5 * (lo + hi));
    }
    return out;
  }

private:
  std::vector<double> d_, e_;
  double norm_ = 1.0;
  double pivmin_ = std::numeric_limits<double>::min();
};

// Full spectrum of a (small) Hamiltonian, ascending.  Oracle backend.
inline std::vector<double> eigenvalues_dense(const SparseHamiltonian& H, long dense_cap = 4000) {
  if (H.n > dense_cap)
    throw NumericalError("eigenvalues_dense: matrix order " + std::to_string(H.n) +
                         " exceeds cap " + std::to_string(dense_cap));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(H.n, H.n);
  for (long i = 0; i < H.n; ++i) {
    A(i, i) = H.diag[static_cast<std::size_t>(i)];
    if (!H.row_ptr.empty()) {
      for (long k = H.row_ptr[static_cast<std::size_t>(i)]; k < H.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
        A(i, H.col_idx[static_cast<std::size_t>(k)]) = H.hop;
    } else if (H.tridiagonal && H.n > 1) {
      if (i > 0 && H.offdiag[static_cast<std::size_t>(i - 1)] != 0.0) A(i, i - 1) = H.offdiag[static_cast<std::size_t>(i - 1)];
      if (i + 1 < H.n && H.offdiag[static_cast<std::size_t>(i)] != 0.0) A(i, i + 1) = H.offdiag[static_cast<std::size_t>(i)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalues_dense: eigensolver failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + H.n);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline long count_in_window(const SparseHamiltonian& H, SpectralWindow w, CountStats* stats = nullptr) {
  return WindowCounter(H).count(w, stats);
}

enum class GreenSolver { direct, bicgstab };

struct GreenOptions {
  GreenSolver solver = GreenSolver::direct;
  double tol = 1e-12;           // iterative solver tolerance
  double residual_cap = 1e-10;  // reject solutions with a worse true residual
  long max_iter = 4000;
  // Incomplete-LU preconditioner controls (iterative solver only).  The
  // defaults match Eigen's; lowering the fill factor or raising the drop
  // tolerance trades preconditioner quality for memory.
  double ilut_droptol = 1e-12;
  int ilut_fillfactor = 10;
};

struct GreenColumn {
  Eigen::VectorXcd values;  // G(z; :, m)
  double residual = 0.0;
};

namespace detail {

inline Eigen::SparseMatrix<std::complex<double>> shifted_matrix(const SparseHamiltonian& H,
                                                                std::complex<double> z) {
  using T = Eigen::Triplet<std::complex<double>>;
  std::vector<T> trips;
  trips.reserve(static_cast<std::size_t>(H.n) + H.col_idx.size());
  for (long i = 0; i < H.n; ++i) trips.emplace_back(i, i, std::complex<double>(H.diag[static_cast<std::size_t>(i)]) - z);
  if (!H.row_ptr.empty()) {
    for (long i = 0; i < H.n; ++i)
      for (long k = H.row_ptr[static_cast<std::size_t>(i)]; k < H.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
        trips.emplace_back(i, H.col_idx[static_cast<std::size_t>(k)], std::complex<double>(H.hop));
  } else if (H.tridiagonal) {
    for (long i = 0; i + 1 < H.n; ++i) {
      const double e = H.offdiag[static_cast<std::size_t>(i)];
      if (e != 0.0) {
        trips.emplace_back(i, i + 1, std::complex<double>(e));
        trips.emplace_back(i + 1, i, std::complex<double>(e));
      }
    }
  }
  Eigen::SparseMatrix<std::complex<double>> A(H.n, H.n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

}  // namespace detail

// One resolvent column x = (H - z)^{-1} delta_m via a sparse complex solve.
// The direct path adds one step of iterative refinement if the first residual
// misses the cap; persistent failure raises NumericalError with the residual.
inline GreenColumn green_column(const SparseHamiltonian& H, std::complex<double> z, long m,
                                const GreenOptions& opts = {}) {
  if (!(z.imag() > 0.0)) throw std::invalid_argument("green_column: need Im z > 0");
  if (m < 0 || m >= H.n) throw std::invalid_argument("green_column: site out of range");
  const auto A = detail::shifted_matrix(H, z);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(H.n);
  b[m] = 1.0;

  GreenColumn out;
  if (opts.solver == GreenSolver::direct) {
    Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw NumericalError("green_column: sparse factorization failed");
    Eigen::VectorXcd x = lu.solve(b);
    double res = (A * x - b).norm();
    if (res > opts.residual_cap) {
      const Eigen::VectorXcd dx = lu.solve(b - A * x);
      x += dx;
      res = (A * x - b).norm();
    }
    if (res > opts.residual_cap)
      throw NumericalError("green_column: residual " + std::to_string(res) + " above cap");
    out.values = std::move(x);
    out.residual = res;
    return out;
  }

  Eigen::BiCGSTAB<Eigen::SparseMatrix<std::complex<double>>,
                  Eigen::IncompleteLUT<std::complex<double>>> solver;
  solver.setTolerance(opts.tol);
  solver.setMaxIterations(opts.max_iter);
  solver.preconditioner().setDroptol(opts.ilut_droptol);
  solver.preconditioner().setFillfactor(opts.ilut_fillfactor);
  solver.compute(A);
  if (solver.info() != Eigen::Success) throw NumericalError("green_column: preconditioner failed");
  Eigen::VectorXcd x = solver.solve(b);
  const double res = (A * x - b).norm();
  if (solver.info() != Eigen::Success)
    throw NumericalError("green_column: iterative solve stalled, residual " + std::to_string(res));
  if (res > opts.residual_cap)
    throw NumericalError("green_column: residual " + std::to_string(res) + " above cap");
  out.values = std::move(x);
  out.residual = res;
  return out;
}

inline std::complex<double> green_entry(const SparseHamiltonian& H, const GreenQuery& q,
                                        const GreenOptions& opts = {}) {
  if (q.n < 0 || q.n >= H.n) throw std::invalid_argument("green_entry: site out of range");
  return green_column(H, q.z, q.m, opts).values[q.n];
}

// |G_outer(z;n,n) - G_sub(z;n,n) - sum over severed bonds| for a sub-region
// given by ascending global indices.  Both sides are computed independently
// (one solve on the outer operator, one on the restriction).
inline double perturbation_residual(const SparseHamiltonian& H, const std::vector<long>& subset,
                                    const std::vector<CubeGeometry::BoundaryPair>& pairs,
                                    std::complex<double> z, long n_global,
                                    const GreenOptions& opts = {}) {
  std::vector<long> local(static_cast<std::size_t>(H.n), -1);
  for (std::size_t i = 0; i < subset.size(); ++i) local[static_cast<std::size_t>(subset[i])] = static_cast<long>(i);
  const long n_loc = local[static_cast<std::size_t>(n_global)];
  if (n_loc < 0) throw std::invalid_argument("perturbation_residual: site not in the sub-region");

  const GreenColumn full = green_column(H, z, n_global, opts);
  const SparseHamiltonian Hsub = restrict_to_sites(H, subset);
  const GreenColumn sub = green_column(Hsub, z, n_loc, opts);

  // Resolvent expansion for G = (H - z)^{-1}: severing the boundary bonds V
  // gives G_full = G_split - G_split V G_full, so each severed bond (m, k)
  // contributes -G_sub(n,m) * H(m,k) * G_full(k,n).
  std::complex<double> rhs = sub.values[n_loc];
  for (const auto& pr : pairs) {
    const long m_loc = local[static_cast<std::size_t>(pr.inside)];
    rhs -= sub.values[m_loc] * H.hop * full.values[pr.outside];
  }
  return std::abs(full.values[n_global] - rhs);
}

// Residual of the resolvent identity for block p of the partition at an
// interior site n (global index).
inline double check_perturbation_identity(const SparseHamiltonian& H, const CubeGeometry& geom, long p,
                                          std::complex<double> z, long n_global,
                                          const GreenOptions& opts = {}) {
  if (!(z.imag() > 0.0)) throw std::invalid_argument("check_perturbation_identity: need Im z > 0");
  if (!geom.in_interior(p, geom.site_of_index(n_global)))
    throw std::invalid_argument("check_perturbation_identity: site not in the block interior");
  return perturbation_residual(H, geom.block_sites(p), geom.boundary_pairs(p), z, n_global, opts);
}

}  // namespace andersonlab
