#pragma once

#include <stdexcept>

namespace andersonlab {

// Half-open interval (a, b].  Eigenvalue counts, interval masses, and the
// cube partition all use this convention so endpoint ties are never counted
// twice.
struct Interval {
  double a = 0.0;
  double b = 0.0;

  double width() const { return b - a; }
  bool empty() const { return !(a < b); }
};

inline Interval make_interval(double a, double b) {
  if (a > b) throw std::invalid_argument("interval: need a <= b");
  return Interval{a, b};
}

}  // namespace andersonlab
