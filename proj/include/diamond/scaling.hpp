// Critical constants and inverse-temperature schedules for the bond and site
// models: exact variance inversion (the canonical schedule) and the truncated
// asymptotic series kept for verification.
//
// The series forms stop at the displayed orders (bond: through n^{-3/2},
// site: through n^{-2}; the site series has no third-order analog of the
// bond kappa^3 term).  Exact inversion absorbs the omitted orders, which is
// why it is the canonical schedule; schedules with sharper n^{-3/2-alpha}
// error control are out of scope.
#pragma once

#include <cmath>
#include <stdexcept>

#include "diamond/disorder.hpp"
#include "diamond/recursion.hpp"

namespace diamond {

struct CriticalConstants {
  double kappa;      // sqrt(2/(b-1))
  double eta;        // (b+1)/(3(b-1))
  double kappa_hat;  // pi sqrt(b) / (sqrt(2)(b-1))
};

inline CriticalConstants constants(int b) {
  if (b < 2) throw std::invalid_argument("constants: b >= 2");
  return {std::sqrt(2.0 / (b - 1)), (b + 1) / (3.0 * (b - 1)),
          M_PI * std::sqrt(static_cast<double>(b)) / (std::sqrt(2.0) * (b - 1))};
}

// n_{n,r} = (pi kappa / 2) sqrt(b/(b-1)) V^{-1/2} = kappa_hat / sqrt(V)
inline double coarse_depth_scale(int b, double V) {
  if (!(V > 0)) throw std::domain_error("coarse_depth_scale: V > 0");
  auto c = constants(b);
  return (M_PI * c.kappa / 2.0) * std::sqrt(static_cast<double>(b) / (b - 1)) / std::sqrt(V);
}

// Target weight variance of the schedule:
//   bond:  k^2 (1/n + eta log n/n^2 + r/n^2)
//   site:  khat^2 (1/n^2 + 2 eta log n/n^3 + 2 r/n^3)
inline double target_variance(Model model, int b, long n, double r) {
  if (n < 2) throw std::invalid_argument("target_variance: n >= 2");
  auto c = constants(b);
  double nn = static_cast<double>(n), ln = std::log(nn);
  double v;
  if (model == Model::Bond)
    v = c.kappa * c.kappa * (1.0 / nn + c.eta * ln / (nn * nn) + r / (nn * nn));
  else
    v = c.kappa_hat * c.kappa_hat *
        (1.0 / (nn * nn) + 2.0 * c.eta * ln / (nn * nn * nn) + 2.0 * r / (nn * nn * nn));
  if (!(v > 0)) throw std::domain_error("target_variance: nonpositive target (r too negative for this n)");
  return v;
}

// beta solving V(beta) = target, by bracketed bisection to ~1e-14 relative.
inline double beta_from_variance(const DisorderSpec& spec, double target) {
  if (!(target > 0)) throw std::domain_error("beta_from_variance: target > 0");
  double hi = 1e-3;
  while (variance_of_weight(spec, hi) < target) {
    hi *= 2.0;
    if (hi > 1e3) throw std::domain_error("beta_from_variance: target variance unreachable");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (variance_of_weight(spec, mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

inline double beta_exact(Model model, const DisorderSpec& spec, int b, long n, double r) {
  return beta_from_variance(spec, target_variance(model, b, n, r));
}

// The displayed truncated series.
//   bond: kappa/sqrt n - kappa^2 tau/(2n) + kappa eta log n/(2 n^{3/2})
//         + (kappa r + kappa^3 (5 tau^2/4 - 7 tau'/12 - 1/2)) / (2 n^{3/2})
//   site: khat/n + khat eta log n/n^2 + (khat r - khat^2 tau/2)/n^2
inline double beta_series(Model model, const DisorderSpec& spec, int b, long n, double r) {
  if (n < 2) throw std::invalid_argument("beta_series: n >= 2");
  auto c = constants(b);
  double t3 = tau(spec), t4 = tau_prime(spec);
  double nn = static_cast<double>(n), ln = std::log(nn);
  if (model == Model::Bond) {
    double k = c.kappa;
    return k / std::sqrt(nn) - k * k * t3 / (2.0 * nn) + k * c.eta * ln / (2.0 * std::pow(nn, 1.5)) +
           (k * r + k * k * k * (1.25 * t3 * t3 - 7.0 * t4 / 12.0 - 0.5)) / (2.0 * std::pow(nn, 1.5));
  }
  double kh = c.kappa_hat;
  return kh / nn + kh * c.eta * ln / (nn * nn) + (kh * r - kh * kh * t3 / 2.0) / (nn * nn);
}

// upsilon_b(bhat) = bhat (sqrt2/sqrt b) tan((pi/2) bhat/kappa_hat), the
// variance constant of the subcritical site model.
inline double upsilon(int b, double beta_hat) {
  auto c = constants(b);
  if (!(beta_hat >= 0 && beta_hat < c.kappa_hat)) throw std::domain_error("upsilon: 0 <= beta_hat < kappa_hat");
  return beta_hat * std::sqrt(2.0 / b) * std::tan(0.5 * M_PI * beta_hat / c.kappa_hat);
}

}  // namespace diamond
