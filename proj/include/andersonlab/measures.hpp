#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "random.hpp"

namespace andersonlab {

enum class DistKind { uniform, bernoulli, cantor, ifs };

// One branch of an iterated function system: x -> ratio*x + offset, picked
// with probability weight.  Branch images over the attractor hull must be
// pairwise disjoint.
struct AffineMap {
  double ratio = 0;
  double offset = 0;
  double weight = 0;
};

// Single-site coupling distribution: sampling, exact CDF, and the
// concentration moduli
//   S(s) = sup_a mu[a, a+s],
//   Q(s) = sup-density * s        for the absolutely continuous kind,
//        = 8 * S(s)               otherwise.
// Interval masses follow the half-open convention mu((a,b]) = F(b) - F(a)
// used throughout the project.
class SingleSiteDistribution {
public:
  static SingleSiteDistribution uniform(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("uniform: need a < b");
    SingleSiteDistribution d;
    d.kind = DistKind::uniform;
    d.a_ = a;
    d.b_ = b;
    d.alpha = 1.0;
    d.holder_constant = 1.0 / (b - a);
    d.support_min = a;
    d.support_max = b;
    return d;
  }

  // p is the probability of the value v1.
  static SingleSiteDistribution bernoulli(double p, double v0, double v1) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0,1]");
    if (v0 == v1) throw std::invalid_argument("bernoulli: need two distinct values");
    SingleSiteDistribution d;
    d.kind = DistKind::bernoulli;
    d.p_lo_ = (v0 < v1) ? 1.0 - p : p;
    d.v_lo_ = std::min(v0, v1);
    d.v_hi_ = std::max(v0, v1);
    d.p_v1_ = p;
    d.v0_ = v0;
    d.v1_ = v1;
    // Atomic, so no finite Hoelder envelope exists; the constant is stored as
    // +inf and never feeds a pass/fail rule.
    d.alpha = 1.0;
    d.holder_constant = std::numeric_limits<double>::infinity();
    d.support_min = d.v_lo_;
    d.support_max = d.v_hi_;
    return d;
  }

  static SingleSiteDistribution cantor() {
    SingleSiteDistribution d = make_ifs(
        {{1.0 / 3.0, 0.0, 0.5}, {1.0 / 3.0, 2.0 / 3.0, 0.5}});
    d.kind = DistKind::cantor;
    d.alpha = std::log(2.0) / std::log(3.0);
    d.holder_constant = 16.0;  // 8 * (S(s) <= 2 s^alpha) envelope; overridable
    return d;
  }

  static SingleSiteDistribution ifs(std::vector<AffineMap> maps,
                                    double alpha = std::numeric_limits<double>::quiet_NaN(),
                                    double holder_constant = std::numeric_limits<double>::quiet_NaN()) {
    SingleSiteDistribution d = make_ifs(std::move(maps));
    d.kind = DistKind::ifs;
    if (std::isnan(alpha)) {
      // Similarity exponent: the smallest a with weight_i <= ratio_i^a for
      // every branch, which makes S(s) = O(s^a).
      double a = 0.0;
      for (const auto& m : d.maps_) a = std::max(a, std::log(m.weight) / std::log(m.ratio));
      d.alpha = std::min(1.0, a);
    } else {
      if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ifs: alpha outside (0,1]");
      d.alpha = alpha;
    }
    d.holder_constant = std::isnan(holder_constant) ? 16.0 : holder_constant;
    return d;
  }

  DistKind kind = DistKind::uniform;
  double alpha = 1.0;
  double holder_constant = 1.0;
  double support_min = 0.0;
  double support_max = 1.0;

  double support_width() const { return support_max - support_min; }
  bool has_bounded_density() const { return kind == DistKind::uniform; }

  double cdf(double x) const {
    switch (kind) {
      case DistKind::uniform:
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        return (x - a_) / (b_ - a_);
      case DistKind::bernoulli:
        if (x < v_lo_) return 0.0;
        if (x < v_hi_) return p_lo_;
        return 1.0;
      default:
        return ifs_cdf(x);
    }
  }

  // mu((a,b]) = F(b) - F(a).
  double interval_measure(double a, double b) const {
    if (a > b) throw std::invalid_argument("interval_measure: need a <= b");
    return std::max(0.0, cdf(b) - cdf(a));
  }

  double s_mu(double s) const {
    if (!(s > 0.0)) throw std::invalid_argument("s_mu: need s > 0");
    switch (kind) {
      case DistKind::uniform:
        return std::min(s / (b_ - a_), 1.0);
      case DistKind::bernoulli:
        return (s >= v_hi_ - v_lo_) ? 1.0 : std::max(p_lo_, 1.0 - p_lo_);
      default:
        return ifs_s_mu(s);
    }
  }

  double q_mu(double s) const {
    if (!(s > 0.0)) throw std::invalid_argument("q_mu: need s > 0");
    if (kind == DistKind::uniform) return s / (b_ - a_);  // sup-density * s
    return 8.0 * s_mu(s);
  }

  double sample(RandomStream& stream) const {
    switch (kind) {
      case DistKind::uniform:
        return a_ + (b_ - a_) * stream.uniform01();
      case DistKind::bernoulli:
        return stream.uniform01() < p_v1_ ? v1_ : v0_;
      default:
        return ifs_sample(stream);
    }
  }

  std::vector<double> sample_iid(long n, RandomStream& stream) const {
    if (n < 1) throw std::invalid_argument("sample_iid: need n >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& x : out) x = sample(stream);
    return out;
  }

  const std::vector<AffineMap>& branches() const { return maps_; }

private:
  // uniform
  double a_ = 0.0, b_ = 1.0;
  // bernoulli
  double p_lo_ = 0.5, v_lo_ = 0.0, v_hi_ = 1.0, p_v1_ = 0.5, v0_ = 0.0, v1_ = 1.0;
  // cantor / ifs, sorted by image position over the attractor hull
  std::vector<AffineMap> maps_;
  bool equal_two_branch_ = false;  // fast digit sampling path

  static SingleSiteDistribution make_ifs(std::vector<AffineMap> maps) {
    if (maps.size() < 2) throw std::invalid_argument("ifs: need at least two branches");
    double wsum = 0.0;
    for (const auto& m : maps) {
      if (!(m.ratio > 0.0 && m.ratio < 1.0)) throw std::invalid_argument("ifs: ratio outside (0,1)");
      if (!(m.weight > 0.0)) throw std::invalid_argument("ifs: weight must be positive");
      wsum += m.weight;
    }
    if (std::fabs(wsum - 1.0) > 1e-9) throw std::invalid_argument("ifs: weights must sum to 1");

    SingleSiteDistribution d;
    d.maps_ = std::move(maps);
    // Attractor hull endpoints are the extreme branch fixed points.
    double u = std::numeric_limits<double>::infinity();
    double v = -u;
    for (const auto& m : d.maps_) {
      const double f = m.offset / (1.0 - m.ratio);
      u = std::min(u, f);
      v = std::max(v, f);
    }
    d.support_min = u;
    d.support_max = v;
    std::sort(d.maps_.begin(), d.maps_.end(),
              [&](const AffineMap& l, const AffineMap& r) {
                return l.ratio * u + l.offset < r.ratio * u + r.offset;
              });
    for (std::size_t i = 0; i + 1 < d.maps_.size(); ++i) {
      const double hi = d.maps_[i].ratio * v + d.maps_[i].offset;
      const double lo = d.maps_[i + 1].ratio * u + d.maps_[i + 1].offset;
      if (!(hi < lo)) throw std::invalid_argument("ifs: branch images overlap");
    }
    d.equal_two_branch_ =
        d.maps_.size() == 2 && d.maps_[0].weight == 0.5 && d.maps_[1].weight == 0.5;
    return d;
  }

  // Digit recursion on the branch containing x; stops once the remaining
  // unresolved mass is below 1e-18 (well under every documented tolerance).
  double ifs_cdf(double x) const {
    double acc = 0.0;
    double scale = 1.0;
    const double u = support_min;
    const double v = support_max;
    for (int depth = 0; depth < 4096 && scale > 1e-18; ++depth) {
      if (x <= u) return acc;
      if (x >= v) return acc + scale;
      int inside = -1;
      double below = 0.0;
      for (std::size_t i = 0; i < maps_.size(); ++i) {
        const double lo = maps_[i].ratio * u + maps_[i].offset;
        if (x < lo) break;  // x sits in the gap before branch i
        const double hi = maps_[i].ratio * v + maps_[i].offset;
        if (x > hi) {
          below += maps_[i].weight;
        } else {
          inside = static_cast<int>(i);
          break;
        }
      }
      acc += scale * below;
      if (inside < 0) return acc;  // plateau value on a gap
      scale *= maps_[inside].weight;
      x = (x - maps_[inside].offset) / maps_[inside].ratio;
    }
    return acc;
  }

  // sup_a mu[a,a+s] by exhaustive search over the generation-k cylinder net,
  // k two generations past the width scale.  Windows are anchored at cylinder
  // endpoints and every cylinder intersecting the closed window is counted in
  // full, so the result is an upper bound in general and exact when s is a
  // power of a branch ratio (the aligned window dominates).
  double ifs_s_mu(double s) const {
    if (s >= support_width()) return 1.0;
    double r_max = 0.0;
    for (const auto& m : maps_) r_max = std::max(r_max, m.ratio);
    int k = static_cast<int>(std::ceil(std::log(1.0 / s) / std::log(1.0 / r_max))) + 2;
    k = std::max(k, 1);
    // Enumeration budget: cap the net at ~1M cylinders; beyond that the bound
    // only gets slacker (never invalid).
    const double per_level = std::log2(static_cast<double>(maps_.size()));
    const int k_cap = std::max(1, static_cast<int>(20.0 / per_level));
    k = std::min(k, k_cap);

    std::vector<CylRec> net;
    net.reserve(static_cast<std::size_t>(std::pow(static_cast<double>(maps_.size()), k)));
    // Depth-first in image order keeps the net sorted by lo.
    expand_net(0.0, 1.0, 1.0, k, net);

    std::vector<double> prefix(net.size() + 1, 0.0);
    for (std::size_t i = 0; i < net.size(); ++i) prefix[i + 1] = prefix[i] + net[i].mass;

    std::vector<double> lows(net.size()), highs(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
      lows[i] = net[i].lo;
      highs[i] = net[i].hi;
    }

    double best = 0.0;
    auto window_mass = [&](double a) {
      // cylinders j with hi_j >= a and lo_j <= a + s
      const auto first = std::lower_bound(highs.begin(), highs.end(), a) - highs.begin();
      const auto last = std::upper_bound(lows.begin(), lows.end(), a + s) - lows.begin();
      if (last <= first) return 0.0;
      return prefix[static_cast<std::size_t>(last)] - prefix[static_cast<std::size_t>(first)];
    };
    for (std::size_t i = 0; i < net.size(); ++i) {
      best = std::max(best, window_mass(lows[i]));
      best = std::max(best, window_mass(highs[i]));
    }
    return std::min(best, 1.0);
  }

  struct CylRec {
    double lo, hi, mass;
  };

  void expand_net(double shift, double scale, double mass, int levels,
                  std::vector<CylRec>& net) const {
    if (levels == 0) {
      net.push_back({shift + scale * support_min, shift + scale * support_max, mass});
      return;
    }
    for (const auto& m : maps_) {
      expand_net(shift + scale * m.offset, scale * m.ratio, mass * m.weight, levels - 1, net);
    }
  }

  double ifs_sample(RandomStream& stream) const {
    double pos = 0.0;
    double scale = 1.0;
    if (equal_two_branch_) {
      // One generator word yields all 40 digits.
      std::uint64_t word = stream.bits();
      for (int digit = 0; digit < 40; ++digit) {
        const AffineMap& m = maps_[(word >> (63 - digit)) & 1u];
        pos += scale * m.offset;
        scale *= m.ratio;
      }
    } else {
      for (int digit = 0; digit < 40; ++digit) {
        double u = stream.uniform01();
        std::size_t pick = maps_.size() - 1;
        double cum = 0.0;
        for (std::size_t i = 0; i < maps_.size(); ++i) {
          cum += maps_[i].weight;
          if (u < cum) {
            pick = i;
            break;
          }
        }
        pos += scale * maps_[pick].offset;
        scale *= maps_[pick].ratio;
      }
    }
    return pos + scale * support_min;
  }
};

// Tabulated moduli on a width grid, for reports and plots.
struct HolderModulus {
  std::vector<double> s_values;
  std::vector<double> s_mu;
  std::vector<double> q_mu;
};

inline HolderModulus tabulate_moduli(const SingleSiteDistribution& dist,
                                     const std::vector<double>& s_values) {
  HolderModulus h;
  h.s_values = s_values;
  h.s_mu.reserve(s_values.size());
  h.q_mu.reserve(s_values.size());
  for (double s : s_values) {
    h.s_mu.push_back(dist.s_mu(s));
    h.q_mu.push_back(dist.q_mu(s));
  }
  return h;
}

}  // namespace andersonlab
