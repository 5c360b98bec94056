#include "medtest/special_dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace medtest {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kEulerGamma = 0.577215664901532860606512090082402431;
constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
constexpr double kPFloor = 1e-300;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

double eval_poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

}  // namespace

double std_normal_cdf(double x) {
  require_finite(x, "std_normal_cdf");
  return 0.5 * std::erfc(-x / kSqrt2);
}

double std_normal_sf(double x) {
  require_finite(x, "std_normal_sf");
  return 0.5 * std::erfc(x / kSqrt2);
}

double std_normal_two_sided(double x) {
  require_finite(x, "std_normal_two_sided");
  return std::erfc(std::fabs(x) / kSqrt2);
}

namespace {

// Initial guess after Acklam; refined below against the erfc-based CDF.
double quantile_guess(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -quantile_guess(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("std_normal_quantile: p must lie in (0,1)");
  double x = quantile_guess(p);
  // Two Newton corrections; the residual is formed from the matching tail
  // so tiny p does not cancel.
  for (int it = 0; it < 2; ++it) {
    const double e = (p <= 0.5) ? std_normal_cdf(x) - p
                                : -(std_normal_sf(x) - (1.0 - p));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
    if (pdf <= 0.0) break;
    x -= e / pdf;
  }
  return x;
}

namespace detail {

// Rational minimax coefficients after Russon & Blair as revised by
// Holoborodko; double-precision tables from Boost.Math (Boost Software
// License), relative error ~1e-16.
double bessel_k0_small(double x) {
  static const double Y = 1.137250900268554688;
  static const double P[] = {-1.372509002685546267e-01, 2.574916117833312855e-01,
                             1.395474602146869316e-02, 5.445476986653926759e-04,
                             7.125159422136622118e-06};
  static const double Q[] = {1.000000000000000000e+00, -5.458333438017788530e-02,
                             1.291052816975251298e-03, -1.367653946978586591e-05};
  static const double P2[] = {1.159315156584124484e-01, 2.789828789146031732e-01,
                              2.524892993216121934e-02, 8.460350907213637784e-04,
                              1.491471924309617534e-05, 1.627106892422088488e-07,
                              1.208266102392756055e-09, 6.611686391749704310e-12};
  const double a = x * x / 4.0;
  const double r = (eval_poly(P, 5, a) / eval_poly(Q, 4, a) + Y) * a + 1.0;
  return eval_poly(P2, 8, x * x) - std::log(x) * r;
}

double bessel_k0_scaled(double x) {
  static const double P[] = {2.533141373155002416e-01, 3.628342133984595192e+00,
                             1.868441889406606057e+01, 4.306243981063412784e+01,
                             4.424116209627428189e+01, 1.562095339356220468e+01,
                             -1.810138978229410898e+00, -1.414237994269995877e+00,
                             -9.369168119754924625e-02};
  static const double Q[] = {1.000000000000000000e+00, 1.494194694879908328e+01,
                             8.265296455388554217e+01, 2.162779506621866970e+02,
                             2.845145155184222157e+02, 1.851714491916334995e+02,
                             5.486540717439723515e+01, 6.118075837628957015e+00,
                             1.586261269326235053e-01};
  const double z = 1.0 / x;
  return (eval_poly(P, 9, z) / eval_poly(Q, 9, z) + 1.0) / std::sqrt(x);
}

}  // namespace detail

namespace {

// Term-wise integral of the ascending series of K0 over [0, u]; the log
// singularity at the origin is integrated analytically. Valid for u <= 2.
double k0_integral_from_zero(double u) {
  const double logterm = -std::log(u / 2.0) - kEulerGamma;
  const double u2q = u * u / 4.0;
  double pow_term = u;       // u^{2k+1} / (4^k (k!)^2)
  double harmonic = 0.0;     // H_k
  double total = 0.0;
  for (int k = 0; k < 40; ++k) {
    const double denom = 2.0 * k + 1.0;
    const double term = pow_term / denom * (logterm + 1.0 / denom + harmonic);
    total += term;
    if (std::fabs(term) < 1e-18 * std::fabs(total) && k > 2) break;
    const double kk = static_cast<double>(k + 1);
    pow_term *= u2q / (kk * kk);
    harmonic += 1.0 / kk;
  }
  return total;
}

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
const double kKronrodNodes[15] = {
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245,  0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,  0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,  0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};
const double kKronrodWeights[15] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};
const double kGaussWeights[7] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082};

template <typename F>
void gk15(const F& f, double a, double b, double* result, double* error) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double rk = 0.0, rg = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double fx = f(mid + half * kKronrodNodes[i]);
    rk += kKronrodWeights[i] * fx;
    if (i % 2 == 1) rg += kGaussWeights[i / 2] * fx;
  }
  *result = rk * half;
  *error = std::fabs((rk - rg) * half);
}

template <typename F>
double adaptive_gk(const F& f, double a, double b, double abs_tol, int max_depth) {
  struct Seg {
    double a, b;
    int depth;
  };
  Seg stack[128];
  int top = 0;
  stack[top++] = {a, b, 0};
  double total = 0.0;
  while (top > 0) {
    const Seg s = stack[--top];
    double r, e;
    gk15(f, s.a, s.b, &r, &e);
    if (e <= abs_tol * (s.b - s.a) / (b - a) || s.depth >= max_depth || top > 120) {
      total += r;
    } else {
      const double m = 0.5 * (s.a + s.b);
      stack[top++] = {s.a, m, s.depth + 1};
      stack[top++] = {m, s.b, s.depth + 1};
    }
  }
  return total;
}

// integral_u^inf K0(x) dx, factored as exp(-u) * integral_0^inf
// exp(-y) k0e(u+y) dy so the exponential decay never underflows the
// quadrature. Requires u >= 1.
double k0_tail_integral(double u) {
  const auto g = [u](double y) { return std::exp(-y) * detail::bessel_k0_scaled(u + y); };
  const double body = adaptive_gk(g, 0.0, 50.0, 1e-14, 24);
  return std::exp(-u) * body;
}

}  // namespace

double normal_product_tail(double t, double scale) {
  require_finite(t, "normal_product_tail");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("normal_product_tail: scale must be positive");
  const double u = std::fabs(t) / scale;
  if (u == 0.0) return 1.0;
  if (u <= 1.0) {
    const double cdf_part = (2.0 / kPi) * k0_integral_from_zero(u);
    return std::max(1.0 - cdf_part, 0.0);
  }
  if (u > 700.0) return kPFloor;  // exp(-u) underflows; keep the tail positive
  return std::max((2.0 / kPi) * k0_tail_integral(u), kPFloor);
}

double mixture_two_sided_pvalue(double stat, const MixtureNormalRef& ref) {
  require_finite(stat, "mixture_two_sided_pvalue");
  ref.validate();
  const double a = std::fabs(stat);
  const double p = ref.weight_unit * std_normal_two_sided(a) +
                   ref.weight_quarter * std_normal_two_sided(2.0 * a);
  return std::clamp(p, kPFloor, 1.0);
}

}  // namespace medtest
