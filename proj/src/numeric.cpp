#include "polyfa/numeric.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <limits>

#include "polyfa/core.hpp"

namespace polyfa {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError("normal_quantile: probability must lie in (0, 1)");
  return -M_SQRT2 * boost::math::erfc_inv(2.0 * p);
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -INFINITY;
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

namespace {

// Gauss-Legendre half rules (6, 12 and 20 points): abscissae in (-1, 0).
constexpr double kGlX6[] = {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970};
constexpr double kGlW6[] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr double kGlX12[] = {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
                             -0.5873179542866171, -0.3678314989981802, -0.1252334085114692};
constexpr double kGlW12[] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                             0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
constexpr double kGlX20[] = {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
                             -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
                             -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
                             -0.07652652113349733};
constexpr double kGlW20[] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                             0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                             0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                             0.1527533871307259};

// P(X > h, Y > k) for a standard bivariate normal (Genz's BVNU).
double upper_orthant(double h, double k, double r) {
  std::span<const double> x, w;
  if (std::abs(r) < 0.3) {
    x = kGlX6;
    w = kGlW6;
  } else if (std::abs(r) < 0.75) {
    x = kGlX12;
    w = kGlW12;
  } else {
    x = kGlX20;
    w = kGlW20;
  }
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = std::asin(r);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        const double sn = std::sin(0.5 * asr * (sign * x[i] + 1.0));
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return bvn * asr / (4.0 * M_PI) + normal_cdf(-h) * normal_cdf(-k);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-0.5 * (bs / as + hk)) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-0.5 * hk) * std::sqrt(2.0 * M_PI) * normal_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        const double xs = (a * (sign * x[i] + 1.0)) * (a * (sign * x[i] + 1.0));
        const double rs = std::sqrt(1.0 - xs);
        bvn += a * w[i] *
               (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                std::exp(-0.5 * (bs / xs + hk)) * (1.0 + c * xs * (1.0 + d * xs)));
      }
    }
    bvn = -bvn / (2.0 * M_PI);
  }
  if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) bvn += h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
  return bvn;
}

}  // namespace

double bivariate_normal_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k) || !(rho > -1.0 && rho < 1.0))
    throw ValidationError("bivariate_normal_cdf: rho must lie in (-1, 1)");
  if (h == -INFINITY || k == -INFINITY) return 0.0;
  if (h == INFINITY) return normal_cdf(k);
  if (k == INFINITY) return normal_cdf(h);
  if (rho == 0.0) return normal_cdf(h) * normal_cdf(k);
  return std::clamp(upper_orthant(-h, -k, rho), 0.0, 1.0);
}

double bivariate_normal_rectangle(double a1, double b1, double a2, double b2,
                                  double rho) {
  const double v = bivariate_normal_cdf(b1, b2, rho) - bivariate_normal_cdf(a1, b2, rho) -
                   bivariate_normal_cdf(b1, a2, rho) + bivariate_normal_cdf(a1, a2, rho);
  return std::max(v, 0.0);
}

}  // namespace polyfa
