#pragma once

// Independent numerical oracles used only by the tests. These avoid the
// library's own code paths: plain composite-Simpson quadrature over
// elementary functions from <cmath>.

#include <cmath>
#include <cstddef>
#include <functional>

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i)
    acc += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

// P(N(0,1) <= x) by quadrature of the density from 0.
inline double normal_cdf_oracle(double x) {
  const double ax = std::fabs(x);
  const double half = simpson(normal_pdf, 0.0, std::min(ax, 40.0), 200000);
  return x >= 0.0 ? 0.5 + half : 0.5 - half;
}

// P(|Z1 * Z2| >= u) for independent standard normals, via
// 2 * int_0^inf pdf(z) * erfc(u / (z sqrt(2))) dz. Entirely independent
// of the library's Bessel-function route.
inline double product_tail_oracle(double u) {
  u = std::fabs(u);
  if (u == 0.0) return 1.0;
  auto integrand = [u](double z) {
    if (z <= 0.0) return 0.0;
    return normal_pdf(z) * std::erfc(u / (z * std::sqrt(2.0)));
  };
  return 2.0 * simpson(integrand, 0.0, 14.0, 400000);
}

}  // namespace oracles
