#include "dpcopula/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "dpcopula/errors.hpp"

namespace dpcopula {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GaussLegendre {
  std::array<double, 10> w{};
  std::array<double, 10> x{};
  int half = 0;
};

GaussLegendre legendre_for(double abs_rho) {
  GaussLegendre g;
  if (abs_rho < 0.3) {
    g.half = 3;
    g.w = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
    g.x = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
  } else if (abs_rho < 0.75) {
    g.half = 6;
    g.w = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
           0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
    g.x = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
           0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
  } else {
    g.half = 10;
    g.w = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
           0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
           0.1491729864726037,  0.1527533871307259};
    g.x = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
           0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
           0.2277858511416451, 0.07652652113349733};
  }
  return g;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double binormal_pdf(double y1, double y2, double rho) {
  if (!(std::fabs(rho) < 1.0)) throw ConfigError("binormal density needs |rho| < 1");
  const double s = 1.0 - rho * rho;
  return std::exp(-(y1 * y1 + y2 * y2 - 2.0 * rho * y1 * y2) / (2.0 * s)) / (kTwoPi * std::sqrt(s));
}

double upper_orthant_probability(double dh, double dk, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (dh == inf || dk == inf) return 0.0;
  if (dh == -inf) return dk == -inf ? 1.0 : normal_cdf(-dk);
  if (dk == -inf) return normal_cdf(-dh);
  if (r == 0.0) return normal_cdf(-dh) * normal_cdf(-dk);

  const GaussLegendre g = legendre_for(std::fabs(r));
  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;

  if (std::fabs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    for (int i = 0; i < g.half; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sign * g.x[i]));
        bvn += g.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / kTwoPi + normal_cdf(-h) * normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (std::fabs(r) < 1.0) {
      const double as = 1.0 - r * r;
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 80.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
      if (hk > -100.0) {
        const double b = std::sqrt(bs);
        const double sp = std::sqrt(kTwoPi) * normal_cdf(-b / a);
        bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < g.half; ++i) {
        for (double sign : {-1.0, 1.0}) {
          const double xs = std::pow(a * (1.0 + sign * g.x[i]), 2);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
            const double rs = std::sqrt(1.0 - xs);
            const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
            bvn += a * g.w[i] * std::exp(asr) * (ep - sp);
          }
        }
      }
      bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
      bvn += normal_cdf(-std::max(h, k));
    } else if (h >= k) {
      bvn = -bvn;
    } else {
      const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
      bvn = l - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

}  // namespace dpcopula
