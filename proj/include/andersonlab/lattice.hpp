#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace andersonlab {

// Block-partition scales.  The asymptotic formulas make interiors empty for
// every box a workstation can hold (the logarithmic margin beats the block
// side), so geometry can also be driven by explicit user scales ("scaled"
// mode); reports record which mode produced the partition.
struct ScaleParams {
  double epsilon = 0.0;
  double gamma = 0.0;
  double alpha = 1.0;
  long n_blocks_per_side = 1;
  long interior_margin = 0;
  bool valid = false;
  bool derived_scales = true;  // false when N and l were supplied explicitly
};

inline bool scales_admissible(long L, long n_blocks, long margin) {
  // block side must exceed twice the margin: (2L+1)/N > 2l+1
  return n_blocks >= 1 && margin >= 0 && (2 * L + 1) > n_blocks * (2 * margin + 1);
}

// N = max(1, floor((2L+1)^(1-eps))), l = ceil((5d/(alpha*gamma)) ln(2L+1)).
inline ScaleParams choose_scales(long L, double epsilon, double alpha, double gamma, int d) {
  if (L < 1) throw std::invalid_argument("choose_scales: need L >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("choose_scales: epsilon outside (0,1)");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("choose_scales: alpha outside (0,1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("choose_scales: gamma must be positive");
  if (d < 1) throw std::invalid_argument("choose_scales: need d >= 1");
  ScaleParams p;
  p.epsilon = epsilon;
  p.gamma = gamma;
  p.alpha = alpha;
  const double side = static_cast<double>(2 * L + 1);
  p.n_blocks_per_side = std::max<long>(1, static_cast<long>(std::floor(std::pow(side, 1.0 - epsilon))));
  p.interior_margin = static_cast<long>(std::ceil((5.0 * d / (alpha * gamma)) * std::log(side)));
  p.derived_scales = true;
  p.valid = scales_admissible(L, p.n_blocks_per_side, p.interior_margin);
  return p;
}

inline ScaleParams explicit_scales(long L, long n_blocks_per_side, long interior_margin) {
  if (n_blocks_per_side < 1) throw std::invalid_argument("explicit_scales: need at least one block per side");
  if (interior_margin < 0) throw std::invalid_argument("explicit_scales: margin must be nonnegative");
  ScaleParams p;
  p.n_blocks_per_side = n_blocks_per_side;
  p.interior_margin = interior_margin;
  p.derived_scales = false;
  p.valid = scales_admissible(L, n_blocks_per_side, interior_margin);
  return p;
}

// The box {-L..L}^d with its partition into N^d congruent-up-to-rounding
// blocks: the continuum cube (-L-1, L]^d is split per axis into N half-open
// pieces and each block keeps the lattice points inside its piece.  Sites map
// to indices in row-major order with the first coordinate fastest.
class CubeGeometry {
public:
  CubeGeometry(int d, long L, const ScaleParams& params)
      : d_(d), L_(L), N_(params.n_blocks_per_side), margin_(params.interior_margin), params_(params) {
    if (d < 1 || d > 4) throw std::invalid_argument("CubeGeometry: dimension must be in 1..4");
    if (L < 1) throw std::invalid_argument("CubeGeometry: need L >= 1");
    if (!params.valid) {
      throw ConfigError(
          "partition rejected: interiors empty at this scale, need (2L+1) > N*(2l+1), got 2L+1=" +
          std::to_string(2 * L + 1) + ", N=" + std::to_string(N_) +
          ", l=" + std::to_string(margin_));
    }
    side_ = 2 * L + 1;
    n_sites_ = 1;
    for (int k = 0; k < d_; ++k) {
      if (n_sites_ > (1ll << 62) / side_) throw std::invalid_argument("CubeGeometry: box too large");
      n_sites_ *= side_;
    }
    n_blocks_ = 1;
    for (int k = 0; k < d_; ++k) n_blocks_ *= N_;
    // Per-axis block boundaries: axis block j (1-based) holds coordinates x
    // with cut[j-1] < x + L + 1 <= cut[j].
    cuts_.resize(static_cast<std::size_t>(N_) + 1);
    for (long j = 0; j <= N_; ++j) cuts_[static_cast<std::size_t>(j)] = (j * side_) / N_;
  }

  int dimension() const { return d_; }
  long half_side() const { return L_; }
  long side() const { return side_; }
  long n_sites() const { return n_sites_; }
  long n_blocks() const { return n_blocks_; }
  long interior_margin() const { return margin_; }
  long blocks_per_side() const { return N_; }
  const ScaleParams& scales() const { return params_; }

  std::vector<long> site_of_index(long idx) const {
    std::vector<long> x(static_cast<std::size_t>(d_));
    for (int k = 0; k < d_; ++k) {
      x[static_cast<std::size_t>(k)] = idx % side_ - L_;
      idx /= side_;
    }
    return x;
  }

  long index_of_site(const std::vector<long>& x) const {
    long idx = 0;
    for (int k = d_ - 1; k >= 0; --k) idx = idx * side_ + (x[static_cast<std::size_t>(k)] + L_);
    return idx;
  }

  bool contains(const std::vector<long>& x) const {
    for (long c : x)
      if (c < -L_ || c > L_) return false;
    return true;
  }

  // 1-based axis block of coordinate c: ceil((c+L+1)*N / (2L+1)).
  long axis_block(long c) const {
    const long t = c + L_ + 1;  // in 1..side
    return (t * N_ + side_ - 1) / side_;
  }

  // 1-based flat block index.
  long block_of_site(const std::vector<long>& x) const {
    long p = 0;
    for (int k = d_ - 1; k >= 0; --k) p = p * N_ + (axis_block(x[static_cast<std::size_t>(k)]) - 1);
    return p + 1;
  }

  struct BlockBox {
    std::vector<long> lo, hi;  // inclusive coordinate bounds per axis
  };

  BlockBox block_box(long p) const {
    check_block(p);
    BlockBox box;
    box.lo.resize(static_cast<std::size_t>(d_));
    box.hi.resize(static_cast<std::size_t>(d_));
    long q = p - 1;
    for (int k = 0; k < d_; ++k) {
      const long j = q % N_;  // 0-based axis block
      q /= N_;
      box.lo[static_cast<std::size_t>(k)] = -L_ - 1 + cuts_[static_cast<std::size_t>(j)] + 1;
      box.hi[static_cast<std::size_t>(k)] = -L_ - 1 + cuts_[static_cast<std::size_t>(j) + 1];
    }
    return box;
  }

  // Global site indices of block p, ascending.
  std::vector<long> block_sites(long p) const {
    const BlockBox box = block_box(p);
    return enumerate_box(box.lo, box.hi);
  }

  // Interior of a block: every axis at least `margin` sites away from the
  // adjacent layer outside the block, i.e. x_k - lo_k >= l and hi_k - x_k >= l.
  bool in_interior(long p, const std::vector<long>& x) const {
    const BlockBox box = block_box(p);
    for (int k = 0; k < d_; ++k) {
      const long c = x[static_cast<std::size_t>(k)];
      if (c - box.lo[static_cast<std::size_t>(k)] < margin_) return false;
      if (box.hi[static_cast<std::size_t>(k)] - c < margin_) return false;
    }
    return true;
  }

  std::vector<long> interior_sites(long p) const {
    const BlockBox box = block_box(p);
    std::vector<long> lo = box.lo, hi = box.hi;
    for (int k = 0; k < d_; ++k) {
      lo[static_cast<std::size_t>(k)] += margin_;
      hi[static_cast<std::size_t>(k)] -= margin_;
      if (lo[static_cast<std::size_t>(k)] > hi[static_cast<std::size_t>(k)]) return {};
    }
    return enumerate_box(lo, hi);
  }

  struct BoundaryPair {
    long inside;   // global index of the block site
    long outside;  // global index of its neighbor outside the block (still in the box)
  };

  // Severed nearest-neighbor bonds of block p, in deterministic order.
  std::vector<BoundaryPair> boundary_pairs(long p) const {
    const BlockBox box = block_box(p);
    std::vector<BoundaryPair> pairs;
    std::vector<long> x = box.lo;
    for (;;) {
      for (int k = 0; k < d_; ++k) {
        for (int dir = -1; dir <= 1; dir += 2) {
          std::vector<long> y = x;
          y[static_cast<std::size_t>(k)] += dir;
          if (!contains(y)) continue;
          const long c = y[static_cast<std::size_t>(k)];
          if (c >= box.lo[static_cast<std::size_t>(k)] && c <= box.hi[static_cast<std::size_t>(k)]) continue;
          pairs.push_back({index_of_site(x), index_of_site(y)});
        }
      }
      if (!advance(x, box.lo, box.hi)) break;
    }
    return pairs;
  }

private:
  int d_;
  long L_;
  long N_;
  long margin_;
  ScaleParams params_;
  long side_ = 0;
  long n_sites_ = 0;
  long n_blocks_ = 0;
  std::vector<long> cuts_;

  void check_block(long p) const {
    if (p < 1 || p > n_blocks_) throw std::invalid_argument("block index out of range");
  }

  std::vector<long> enumerate_box(const std::vector<long>& lo, const std::vector<long>& hi) const {
    std::vector<long> out;
    std::vector<long> x = lo;
    for (;;) {
      out.push_back(index_of_site(x));
      if (!advance(x, lo, hi)) break;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool advance(std::vector<long>& x, const std::vector<long>& lo, const std::vector<long>& hi) const {
    for (int k = 0; k < d_; ++k) {
      if (x[static_cast<std::size_t>(k)] < hi[static_cast<std::size_t>(k)]) {
        ++x[static_cast<std::size_t>(k)];
        return true;
      }
      x[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)];
    }
    return false;
  }
};

enum class Hopping { none, laplacian_offdiag };

struct HamiltonianSpec {
  Hopping hopping = Hopping::laplacian_offdiag;
  double coupling = 1.0;  // multiplies the site disorder
};

// Symmetric sparse operator: common hopping value on a nearest-neighbor
// pattern (both triangles stored) plus a diagonal of coupled site values.
struct SparseHamiltonian {
  long n = 0;
  std::vector<double> diag;
  std::vector<long> row_ptr;  // CSR over off-diagonal entries
  std::vector<long> col_idx;
  double hop = 0.0;
  bool tridiagonal = true;         // pattern is |i-j| = 1 in local order (or empty)
  std::vector<double> offdiag;     // e_i between i and i+1 when tridiagonal

  double inf_norm() const {
    double best = 0.0;
    for (long i = 0; i < n; ++i) {
      double row = std::fabs(diag[static_cast<std::size_t>(i)]);
      if (!row_ptr.empty()) {
        row += std::fabs(hop) *
               static_cast<double>(row_ptr[static_cast<std::size_t>(i) + 1] - row_ptr[static_cast<std::size_t>(i)]);
      }
      best = std::max(best, row);
    }
    return best;
  }

  long offdiag_entries() const { return col_idx.empty() ? 0 : static_cast<long>(col_idx.size()); }
};

inline SparseHamiltonian assemble_hamiltonian(const HamiltonianSpec& spec, const CubeGeometry& geom,
                                              const std::vector<double>& omega) {
  if (static_cast<long>(omega.size()) != geom.n_sites())
    throw std::invalid_argument("assemble_hamiltonian: omega size must equal the site count");
  if (!(spec.coupling > 0.0)) throw std::invalid_argument("assemble_hamiltonian: coupling must be positive");
  SparseHamiltonian H;
  H.n = geom.n_sites();
  H.diag.resize(static_cast<std::size_t>(H.n));
  for (long i = 0; i < H.n; ++i) H.diag[static_cast<std::size_t>(i)] = spec.coupling * omega[static_cast<std::size_t>(i)];

  if (spec.hopping == Hopping::none) {
    H.hop = 0.0;
    H.tridiagonal = true;
    H.offdiag.assign(static_cast<std::size_t>(std::max<long>(0, H.n - 1)), 0.0);
    return H;
  }

  H.hop = 1.0;
  const int d = geom.dimension();
  const long side = geom.side();
  if (d == 1) {
    H.tridiagonal = true;
    H.offdiag.assign(static_cast<std::size_t>(H.n - 1), 1.0);
    // CSR mirror of the path pattern, used by generic consumers.
    H.row_ptr.resize(static_cast<std::size_t>(H.n) + 1);
    H.row_ptr[0] = 0;
    for (long i = 0; i < H.n; ++i) {
      if (i > 0) H.col_idx.push_back(i - 1);
      if (i + 1 < H.n) H.col_idx.push_back(i + 1);
      H.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<long>(H.col_idx.size());
    }
    return H;
  }

  H.tridiagonal = false;
  H.row_ptr.resize(static_cast<std::size_t>(H.n) + 1);
  H.row_ptr[0] = 0;
  long stride = 1;
  std::vector<long> strides;
  for (int k = 0; k < d; ++k) {
    strides.push_back(stride);
    stride *= side;
  }
  for (long i = 0; i < H.n; ++i) {
    long rem = i;
    std::vector<long> digits(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      digits[static_cast<std::size_t>(k)] = rem % side;
      rem /= side;
    }
    std::vector<long> nbrs;
    for (int k = 0; k < d; ++k) {
      if (digits[static_cast<std::size_t>(k)] > 0) nbrs.push_back(i - strides[static_cast<std::size_t>(k)]);
      if (digits[static_cast<std::size_t>(k)] + 1 < side) nbrs.push_back(i + strides[static_cast<std::size_t>(k)]);
    }
    std::sort(nbrs.begin(), nbrs.end());
    for (long j : nbrs) H.col_idx.push_back(j);
    H.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<long>(H.col_idx.size());
  }
  return H;
}

// Principal submatrix of H on an ascending set of global indices.
inline SparseHamiltonian restrict_to_sites(const SparseHamiltonian& H, const std::vector<long>& sites) {
  SparseHamiltonian S;
  S.n = static_cast<long>(sites.size());
  S.diag.reserve(sites.size());
  std::vector<long> local(static_cast<std::size_t>(H.n), -1);
  for (long i = 0; i < S.n; ++i) local[static_cast<std::size_t>(sites[static_cast<std::size_t>(i)])] = i;
  for (long g : sites) S.diag.push_back(H.diag[static_cast<std::size_t>(g)]);
  S.hop = H.hop;

  if (H.row_ptr.empty()) {
    S.tridiagonal = true;
    S.offdiag.assign(static_cast<std::size_t>(std::max<long>(0, S.n - 1)), 0.0);
    return S;
  }
  S.row_ptr.resize(static_cast<std::size_t>(S.n) + 1);
  S.row_ptr[0] = 0;
  bool tridiag = true;
  for (long i = 0; i < S.n; ++i) {
    const long g = sites[static_cast<std::size_t>(i)];
    for (long e = H.row_ptr[static_cast<std::size_t>(g)]; e < H.row_ptr[static_cast<std::size_t>(g) + 1]; ++e) {
      const long lj = local[static_cast<std::size_t>(H.col_idx[static_cast<std::size_t>(e)])];
      if (lj < 0) continue;
      S.col_idx.push_back(lj);
      if (lj - i != 1 && i - lj != 1) tridiag = false;
    }
    S.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<long>(S.col_idx.size());
  }
  S.tridiagonal = tridiag || S.col_idx.empty();
  if (S.tridiagonal) {
    S.offdiag.assign(static_cast<std::size_t>(std::max<long>(0, S.n - 1)), 0.0);
    for (long i = 0; i < S.n; ++i) {
      for (long e = S.row_ptr[static_cast<std::size_t>(i)]; e < S.row_ptr[static_cast<std::size_t>(i) + 1]; ++e) {
        const long j = S.col_idx[static_cast<std::size_t>(e)];
        if (j == i + 1) S.offdiag[static_cast<std::size_t>(i)] = S.hop;
      }
    }
  }
  return S;
}

inline SparseHamiltonian restrict_to_block(const SparseHamiltonian& H, const CubeGeometry& geom, long p) {
  return restrict_to_sites(H, geom.block_sites(p));
}

}  // namespace andersonlab
