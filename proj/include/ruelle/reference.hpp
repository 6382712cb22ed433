#pragma once

// Closed forms and series used as test oracles. Nothing in the solvers includes this.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace ruelle::reference {

// log I_nu(x), x > 0, summing the power series in log space.
inline double log_bessel_i(int nu, double x) {
  const double lx2 = std::log(x / 2.0);
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (int m = 0; m < 100000; ++m) {
    double t = (2.0 * m + nu) * lx2 - std::lgamma(m + 1.0) - std::lgamma(m + nu + 1.0);
    terms.push_back(t);
    if (t > mx) mx = t;
    if (t < mx - 60.0 && m > x) break;
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

inline double bessel_i(int nu, double x) { return std::exp(log_bessel_i(nu, x)); }

// 2x2 positive matrix [[a,b],[c,d]]: Perron root and the second eigenvalue.
struct Spectrum2 {
  double perron;
  double second;
};

inline Spectrum2 spectrum_2x2(double a, double b, double c, double d) {
  const double tr = a + d, det = a * d - b * c;
  const double disc = std::sqrt(tr * tr - 4.0 * det);
  return {(tr + disc) / 2.0, (tr - disc) / 2.0};
}

// Right Perron vector of [[a,b],[c,d]] scaled to max 1.
inline std::array<double, 2> perron_vector_2x2(double a, double b, double c, double d) {
  const double l = spectrum_2x2(a, b, c, d).perron;
  double v0 = b, v1 = l - a;
  if (b == 0.0 && l - a == 0.0) {
    v0 = l - d;
    v1 = c;
  }
  const double m = std::max(v0, v1);
  return {v0 / m, v1 / m};
}

// sum_i (1/N) c/(1-e^{-c}) e^{-c i/N}
inline double exp_interval_eigenvalue(double c, int N) {
  const double h = c / N;
  return h / (1.0 - std::exp(-h));
}

inline double xy_entropy(double beta = 1.0) {
  const double l0 = log_bessel_i(0, beta), l1 = log_bessel_i(1, beta);
  return -beta * std::exp(l1 - l0) + l0;
}

}  // namespace ruelle::reference
