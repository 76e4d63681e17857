// Disorder laws with closed-form MGFs, all normalized to mean 0 variance 1:
// exact V(beta), exact centered moments of the normalized weight
// D - 1 = e^{beta omega}/E[e^{beta omega}] - 1, samplers, and the zero-bias
// transformation.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "diamond/numeric.hpp"

namespace diamond {

enum class Family { Gaussian, Rademacher, UniformCentered, TwoPoint };

struct DisorderSpec {
  Family family = Family::Gaussian;
  double p = 0.5;  // TwoPoint only: P(omega = a) = p with a = sqrt((1-p)/p)

  static DisorderSpec gaussian() { return {Family::Gaussian, 0.5}; }
  static DisorderSpec rademacher() { return {Family::Rademacher, 0.5}; }
  static DisorderSpec uniform() { return {Family::UniformCentered, 0.5}; }
  static DisorderSpec two_point(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("TwoPoint: p in (0,1)");
    return {Family::TwoPoint, p};
  }

  // TwoPoint support: omega = tp_a() w.p. p, omega = -tp_b() w.p. 1-p
  double tp_a() const { return std::sqrt((1.0 - p) / p); }
  double tp_b() const { return std::sqrt(p / (1.0 - p)); }

  std::string name() const {
    switch (family) {
      case Family::Gaussian: return "gaussian";
      case Family::Rademacher: return "rademacher";
      case Family::UniformCentered: return "uniform";
      case Family::TwoPoint: return "twopoint(" + std::to_string(p) + ")";
    }
    return "?";
  }
};

inline constexpr double kSqrt3 = 1.7320508075688772935;

// log E[e^{t omega}], written to stay accurate for large |t| and tiny |t|.
inline double log_mgf(const DisorderSpec& spec, double t) {
  switch (spec.family) {
    case Family::Gaussian:
      return 0.5 * t * t;
    case Family::Rademacher: {
      double a = std::fabs(t);
      return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094;  // log cosh
    }
    case Family::UniformCentered: {
      // omega ~ U[-sqrt3, sqrt3]: mgf = sinh(sqrt3 t)/(sqrt3 t) = expm1(2u) e^{-u}/(2u)
      double u = kSqrt3 * std::fabs(t);
      if (u == 0.0) return 0.0;
      if (u > 300.0) return u - std::log(2.0 * u);
      return std::log(std::expm1(2.0 * u)) - u - std::log(2.0 * u);
    }
    case Family::TwoPoint: {
      double x = spec.tp_a() * t, y = -spec.tp_b() * t;  // log(p e^x + (1-p) e^y)
      double m = std::max(x, y);
      return m + std::log(spec.p * std::exp(x - m) + (1.0 - spec.p) * std::exp(y - m));
    }
  }
  throw std::logic_error("log_mgf: unknown family");
}

inline double mgf(const DisorderSpec& spec, double t) { return std::exp(log_mgf(spec, t)); }

// third and fourth cumulants of omega
inline double tau(const DisorderSpec& spec) {
  switch (spec.family) {
    case Family::Gaussian: return 0.0;
    case Family::Rademacher: return 0.0;
    case Family::UniformCentered: return 0.0;
    case Family::TwoPoint: return (1.0 - 2.0 * spec.p) / std::sqrt(spec.p * (1.0 - spec.p));
  }
  throw std::logic_error("tau");
}

inline double tau_prime(const DisorderSpec& spec) {
  switch (spec.family) {
    case Family::Gaussian: return 0.0;
    case Family::Rademacher: return -2.0;
    case Family::UniformCentered: return -1.2;  // E[omega^4] = 9/5
    case Family::TwoPoint: return 1.0 / (spec.p * (1.0 - spec.p)) - 6.0;
  }
  throw std::logic_error("tau_prime");
}

// E|omega|^m, used by the zero-bias moment identity
inline double abs_moment(const DisorderSpec& spec, int m) {
  if (m < 0) throw std::invalid_argument("abs_moment: m >= 0");
  switch (spec.family) {
    case Family::Gaussian:
      // E|Z|^m = 2^{m/2} Gamma((m+1)/2) / sqrt(pi)
      return std::exp(0.5 * m * std::log(2.0) + std::lgamma(0.5 * (m + 1))) / std::sqrt(M_PI);
    case Family::Rademacher:
      return 1.0;
    case Family::UniformCentered:
      return std::pow(kSqrt3, m) / (m + 1);
    case Family::TwoPoint:
      return spec.p * std::pow(spec.tp_a(), m) + (1.0 - spec.p) * std::pow(spec.tp_b(), m);
  }
  throw std::logic_error("abs_moment");
}

// V(beta) = Var(e^{beta omega}/E[e^{beta omega}]) = mgf(2 beta)/mgf(beta)^2 - 1
inline double variance_of_weight(const DisorderSpec& spec, double beta) {
  if (beta < 0) throw std::invalid_argument("variance_of_weight: beta >= 0");
  return std::expm1(log_mgf(spec, 2.0 * beta) - 2.0 * log_mgf(spec, beta));
}

// Raw moment E[D^q] of the normalized weight, exact from the MGF.
inline double weight_raw_moment(const DisorderSpec& spec, double beta, int q) {
  return std::exp(log_mgf(spec, q * beta) - q * log_mgf(spec, beta));
}

// Centered moments mu_q = E[(D-1)^q], q = 0..m_max, via the alternating
// binomial sum over mgf ratios; compensated summation tames the cancellation
// at small beta.
struct WeightMoments {
  double beta = 0.0;
  std::vector<double> mu;  // mu[0] = 1, mu[1] = 0, mu[q] = E[(D-1)^q]

  int m_max() const { return static_cast<int>(mu.size()) - 1; }
  double raw_moment(int q) const {  // E[D^q] recovered from the centered set
    double s = 0.0;
    for (int j = 0; j <= q; ++j) s += binomial(q, j) * mu[static_cast<std::size_t>(j)];
    return s;
  }
};

inline WeightMoments centered_weight_moments(const DisorderSpec& spec, double beta, int m_max) {
  if (m_max < 2) throw std::invalid_argument("centered_weight_moments: m_max >= 2");
  WeightMoments wm;
  wm.beta = beta;
  wm.mu.assign(static_cast<std::size_t>(m_max) + 1, 0.0);
  wm.mu[0] = 1.0;
  double lm1 = log_mgf(spec, beta);
  for (int q = 2; q <= m_max; ++q) {
    KahanSum acc;
    for (int j = 0; j <= q; ++j) {
      double term = binomial(q, j) * std::exp(log_mgf(spec, j * beta) - j * lm1);
      acc.add(((q - j) % 2 == 0) ? term : -term);
    }
    wm.mu[static_cast<std::size_t>(q)] = acc.value();
  }
  wm.mu[1] = 0.0;
  return wm;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

inline double sample_omega(const DisorderSpec& spec, SplitMix64& rng) {
  switch (spec.family) {
    case Family::Gaussian: return inv_normal_cdf(rng.next_u01());
    case Family::Rademacher: return (rng() >> 63) ? 1.0 : -1.0;
    case Family::UniformCentered: return kSqrt3 * (2.0 * rng.next_u01() - 1.0);
    case Family::TwoPoint: return rng.next_u01() < spec.p ? spec.tp_a() : -spec.tp_b();
  }
  throw std::logic_error("sample_omega");
}

// One draw of the zero-bias transform X*: pick x from x^2 mu(dx)/sigma^2,
// then uniform between 0 and x.  sigma^2 = 1 for every built-in family.
inline double zero_bias_sample(const DisorderSpec& spec, SplitMix64& rng) {
  double x = 0.0;
  switch (spec.family) {
    case Family::Gaussian: {
      // size-biased magnitude: |x| ~ chi with 3 dof
      double z1 = inv_normal_cdf(rng.next_u01());
      double z2 = inv_normal_cdf(rng.next_u01());
      double z3 = inv_normal_cdf(rng.next_u01());
      x = std::sqrt(z1 * z1 + z2 * z2 + z3 * z3) * ((rng() >> 63) ? 1.0 : -1.0);
      break;
    }
    case Family::Rademacher:
      x = (rng() >> 63) ? 1.0 : -1.0;
      break;
    case Family::UniformCentered: {
      double t = 2.0 * rng.next_u01() - 1.0;
      x = kSqrt3 * std::cbrt(t);
      break;
    }
    case Family::TwoPoint:
      // weights p a^2 = 1-p and (1-p) b^2 = p
      x = rng.next_u01() < 1.0 - spec.p ? spec.tp_a() : -spec.tp_b();
      break;
  }
  return x * rng.next_u01();
}

// Moment identity of the transform: E|X*|^{n-2} = E|X|^n / (sigma^2 (n-1)).
// Returns the Monte Carlo estimate of the left side and the exact right side.
struct ZeroBiasIdentity {
  double mc_lhs;
  double exact_rhs;
};

inline ZeroBiasIdentity zero_bias_abs_moment_identity(const DisorderSpec& spec, int n,
                                                      std::size_t draws, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("zero_bias_abs_moment_identity: n >= 3");
  SplitMix64 rng(mix64(seed));
  KahanSum acc;
  for (std::size_t i = 0; i < draws; ++i) acc.add(std::pow(std::fabs(zero_bias_sample(spec, rng)), n - 2));
  return {acc.value() / static_cast<double>(draws), abs_moment(spec, n) / (n - 1.0)};
}

}  // namespace diamond
