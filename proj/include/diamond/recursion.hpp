// Scalar fixed-point machinery for the variance maps M and Mhat_V, the limit
// variance function R and its derivative, the D_k products, and the full
// moment-map engine transporting centered moments mu_2..mu_m through one
// hierarchical level (bond and site variants).
//
// Numerical notes, load-bearing:
//   * M, Mhat are evaluated in increment form (positive-coefficient
//     polynomials / expm1-log1p), never as ((1+x)^b - 1)/b, which loses
//     log10(1/x) digits per step for small x.
//   * R(r) = lim M^K(seed_K) is computed from an asymptotic seed at depth K.
//     The two-term seed of the variance asymptotics stalls near 1e-4 because
//     the seed defect O(log^2 K / K^3) is amplified by K^2.  We push the
//     expansion one order further (coefficients derived by matching
//     V(t-1) = M(V(t)) order by order):
//         R(-t) = k2/t + k2 eta log t/t^2
//                 + (A log^2 t + B log t + C)/t^3 + O(log^3 t / t^4),
//         A = k2 eta^2,  B = -k2 eta^2,
//         C = C(b,4)/b k2^4 - k2 - k2 eta^2 + (5/2) k2 eta,
//     which brings the amplified error down to O(log^3 K / K^2).
//   * For r > 0, R(r) is anchored at the base point r - ceil(r) and pushed
//     forward through M, so the translation identity M(R(r)) = R(r+1) holds
//     by construction and the severely ill-conditioned direct deep orbits at
//     positive r are avoided.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "diamond/disorder.hpp"
#include "diamond/numeric.hpp"

namespace diamond {

struct CriticalConstantsLite {
  double kappa2;  // 2/(b-1)
  double eta;     // (b+1)/(3(b-1))
};

inline CriticalConstantsLite recursion_constants(int b) {
  if (b < 2) throw std::invalid_argument("recursion_constants: b >= 2");
  return {2.0 / (b - 1), (b + 1) / (3.0 * (b - 1))};
}

// ---------------------------------------------------------------------------
// Scalar maps
// ---------------------------------------------------------------------------

// M(x) = ((1+x)^b - 1)/b = x + sum_{k>=2} C(b,k) x^k / b, increment form.
template <typename Real>
Real map_M_t(int b, Real x) {
  if (x < Real(0)) throw std::domain_error("map_M: x >= 0");
  Real inc = 0;
  for (int k = b; k >= 2; --k) inc = (inc + Real(binomial(b, k))) * x;
  return x + inc * x / Real(b);
}

inline double map_M(int b, double x) { return map_M_t<double>(b, x); }

// M^{-1}(y) = (1 + b y)^{1/b} - 1
inline double map_M_inv(int b, double y) {
  if (y < 0) throw std::domain_error("map_M_inv: y >= 0");
  return std::expm1(std::log1p(static_cast<double>(b) * y) / b);
}

// Mhat_V(x) = ((1+x)^b (1+V)^{b-1} - 1)/b
//           = x + [P(x)(1+W) + W(1 + b x)]/b,  P(x) = (1+x)^b - 1 - b x,
// where W = (1+V)^{b-1} - 1; all increments nonnegative.
template <typename Real>
Real map_Mhat_t(int b, Real V, Real x) {
  if (x < Real(0) || V < Real(0)) throw std::domain_error("map_Mhat: x, V >= 0");
  Real W = std::expm1(Real(b - 1) * std::log1p(V));
  Real P = 0;
  for (int k = b; k >= 2; --k) P = (P + Real(binomial(b, k))) * x;
  P *= x;
  return x + (P * (Real(1) + W) + W * (Real(1) + Real(b) * x)) / Real(b);
}

inline double map_Mhat(int b, double V, double x) { return map_Mhat_t<double>(b, V, x); }

// n-fold composition; overflow is reported as +inf (divergence), not a crash.
inline double iterate_map(const std::function<double(double)>& map, double x0, long n,
                          std::vector<double>* trajectory = nullptr) {
  double x = x0;
  if (trajectory) {
    trajectory->clear();
    trajectory->push_back(x);
  }
  for (long i = 0; i < n; ++i) {
    x = map(x);
    if (!(x < 1e100)) return std::numeric_limits<double>::infinity();
    if (trajectory) trajectory->push_back(x);
  }
  return x;
}

inline double iterate_M(int b, double x0, long n) {
  long double x = x0;
  for (long i = 0; i < n; ++i) {
    x = map_M_t<long double>(b, x);
    if (!(x < 1e100L)) return std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(x);
}

inline double iterate_Mhat(int b, double V, double x0, long n) {
  long double x = x0;
  for (long i = 0; i < n; ++i) {
    x = map_Mhat_t<long double>(b, static_cast<long double>(V), x);
    if (!(x < 1e100L)) return std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(x);
}

// ---------------------------------------------------------------------------
// R(r): limiting variance along the critical window
// ---------------------------------------------------------------------------

namespace detail {

// Third-order asymptotic seed for R(r - K), evaluated at t = K - r.
template <typename Real>
Real r_seed(int b, double r, double K) {
  auto c = recursion_constants(b);
  double t = K - r;
  if (t <= 2) throw std::invalid_argument("r_seed: depth too small");
  double L = std::log(t);
  double A = c.kappa2 * c.eta * c.eta;
  double B = -A;
  double c4 = b >= 4 ? binomial(b, 4) / b : 0.0;
  double k8 = c.kappa2 * c.kappa2 * c.kappa2 * c.kappa2;
  double C = c4 * k8 - c.kappa2 - c.kappa2 * c.eta * c.eta + 2.5 * c.kappa2 * c.eta;
  return Real(c.kappa2 / t + c.kappa2 * c.eta * L / (t * t) + (A * L * L + B * L + C) / (t * t * t));
}

inline long double r_from_depth(int b, double r, long K) {
  long double x = r_seed<long double>(b, r, static_cast<double>(K));
  for (long i = 0; i < K; ++i) x = map_M_t<long double>(b, x);
  return x;
}

}  // namespace detail

struct ComputeROptions {
  double tol = 1e-8;       // doubling stops when |R_{2K} - R_K| < tol (plus floor)
  long min_depth = 1L << 22;
  long max_depth = 1L << 24;
};

// R(r) by seed-and-iterate with depth doubling.  For r > 0 the value is
// anchored at r - ceil(r) and pushed forward through M.
inline double compute_R(int b, double r, double tol = 1e-8) {
  ComputeROptions opt;
  opt.tol = tol;
  if (r > 0) {
    // anchored at the base point in double, so that the translation identity
    // M(R(r)) = R(r+1) holds bit-exactly for integer-shifted queries
    int m = static_cast<int>(std::ceil(r));
    double x = compute_R(b, r - m, tol);
    for (int i = 0; i < m; ++i) x = map_M(b, x);
    return x;
  }
  long K = opt.min_depth;
  while (K < 64 * static_cast<long>(1 - r)) K *= 2;  // keep the seed positive and asymptotic
  long double prev = detail::r_from_depth(b, r, K);
  while (K < opt.max_depth) {
    K *= 2;
    long double cur = detail::r_from_depth(b, r, K);
    if (std::fabs(static_cast<double>(cur - prev)) < opt.tol) return static_cast<double>(cur);
    prev = cur;
  }
  return static_cast<double>(prev);  // rounding floor of the doubling sequence
}

// The whole tail profile V_k = R(r - k), k = 0..count-1, from one deep orbit.
inline std::vector<double> compute_R_profile(int b, double r, int count, long extra_depth = 1L << 22) {
  if (count < 1) throw std::invalid_argument("compute_R_profile: count >= 1");
  double rmin = r - (count - 1);
  long K = extra_depth;
  while (K < 64 * static_cast<long>(1 - rmin)) K *= 2;
  long total = K + (count - 1);
  long double x = detail::r_seed<long double>(b, r, static_cast<double>(total));
  std::vector<double> out(static_cast<std::size_t>(count));
  for (long j = 0; j < total; ++j) {
    x = map_M_t<long double>(b, x);
    long k = total - j - 1;  // x now approximates R(r - k)
    if (k <= count - 1) out[static_cast<std::size_t>(k)] = static_cast<double>(x);
  }
  return out;
}

// R'(r) = lim (k2/n^2) prod_{k=1}^n (1 + R(r-k))^{b-1}, evaluated at n_terms.
inline double compute_R_prime(int b, double r, long n_terms = 1L << 19) {
  auto c = recursion_constants(b);
  long K = 1L << 20;
  double rmin = r - static_cast<double>(n_terms);
  while (K < 64 * static_cast<long>(1 - rmin)) K *= 2;
  long total = K + n_terms;
  long double x = detail::r_seed<long double>(b, r, static_cast<double>(total));
  long double log_prod = 0;
  for (long j = 0; j < total; ++j) {
    x = map_M_t<long double>(b, x);
    long k = total - j - 1;  // x ~ R(r - k); the product wants k = 1..n_terms
    if (k >= 1 && k <= n_terms) log_prod += static_cast<long double>(b - 1) * std::log1p(x);
  }
  return static_cast<double>(c.kappa2 / (static_cast<double>(n_terms) * static_cast<double>(n_terms)) *
                             std::exp(static_cast<double>(log_prod)));
}

// D_k(y) = (1/(k+1)^2) prod_{l=1}^k (1 + M^{-l}(y))^{b-1}; the inverse map is
// contracting, so the product is numerically stable for any k.
inline double compute_Dk(int b, int k, double y) {
  if (y < 0 || k < 0) throw std::domain_error("compute_Dk: k, y >= 0");
  double log_prod = 0.0, x = y;
  for (int l = 1; l <= k; ++l) {
    x = map_M_inv(b, x);
    log_prod += (b - 1) * std::log1p(x);
  }
  return std::exp(log_prod) / (static_cast<double>(k + 1) * static_cast<double>(k + 1));
}

// Telescoped reconstruction: sum_{k>=1} (M(V_k) - V_k) with
// V_k = R(r-k), truncated where the increment drops below `increment_floor`,
// plus the exact telescope tail V_K.  Returns the reconstructed R(r).
inline double telescoped_R(int b, double r, double increment_floor = 1e-10, int max_terms = 400000) {
  auto profile = compute_R_profile(b, r - 1, max_terms);
  // profile[k] = R(r - 1 - k) = V_{k+1}
  KahanSum acc;
  double tail = 0.0;
  for (int k = 0; k < max_terms; ++k) {
    double Vk = profile[static_cast<std::size_t>(k)];
    double inc = map_M(b, Vk) - Vk;
    if (k > 0 && inc < increment_floor) break;  // telescope tail = last V added
    acc.add(inc);
    tail = Vk;
  }
  return acc.value() + tail;
}

// ---------------------------------------------------------------------------
// Moment vectors and the moment map
// ---------------------------------------------------------------------------

// Centered moments mu_2..mu_m of a mean-adjusted variable; mu_1 = 0 implicit.
struct MomentVector {
  std::vector<double> mu;  // mu[0] = 1, mu[1] = 0, mu[q] = q-th centered moment

  MomentVector() : mu{1.0, 0.0} {}
  explicit MomentVector(int m_max) : mu(static_cast<std::size_t>(m_max) + 1, 0.0) {
    if (m_max < 2) throw std::invalid_argument("MomentVector: m_max >= 2");
    mu[0] = 1.0;
  }
  int m_max() const { return static_cast<int>(mu.size()) - 1; }
  double operator[](int q) const { return mu[static_cast<std::size_t>(q)]; }
  double& operator[](int q) { return mu[static_cast<std::size_t>(q)]; }
};

constexpr int kMomentCap = 12;

namespace detail {

// centered moments (mu_0..mu_m, mu_1 = 0) -> cumulants kappa_2..kappa_m
template <typename Real>
void moments_to_cumulants(const std::vector<Real>& mu, std::vector<Real>& kap) {
  int m = static_cast<int>(mu.size()) - 1;
  kap.assign(mu.size(), Real(0));
  for (int n = 2; n <= m; ++n) {
    Real s = mu[static_cast<std::size_t>(n)];
    for (int k = 2; k <= n - 2; ++k)
      s -= Real(binomial(n - 1, k - 1)) * kap[static_cast<std::size_t>(k)] * mu[static_cast<std::size_t>(n - k)];
    kap[static_cast<std::size_t>(n)] = s;
  }
}

// cumulants kappa_2..kappa_m -> centered moments
template <typename Real>
void cumulants_to_moments(const std::vector<Real>& kap, std::vector<Real>& mu) {
  int m = static_cast<int>(kap.size()) - 1;
  mu.assign(kap.size(), Real(0));
  mu[0] = Real(1);
  for (int n = 2; n <= m; ++n) {
    Real s = 0;
    for (int k = 2; k <= n; ++k)
      s += Real(binomial(n - 1, k - 1)) * kap[static_cast<std::size_t>(k)] * mu[static_cast<std::size_t>(n - k)];
    mu[static_cast<std::size_t>(n)] = s;
  }
}

}  // namespace detail

// One hierarchical level of the centered-moment recursion.  Input: moments of
// X (one sub-copy, centered).  With Z_i := prod_j (1 + X_{ij}) [site: times
// the b-1 junction weights] - 1, the output variable is (1/b) sum_i Z_i, so
//   E[Z^p]     by the alternating binomial identity over E[(1+X)^q]^b
//              (times E[D^q]^{b-1} in the site case),
//   kappa_p    of the output = kappa_p(Z)/b^{p-1},
// then cumulants are converted back to centered moments.
// To dodge the 1-cancellation, the pipeline tracks g_q := E[(1+X)^q]^b
// (x E[D^q]^{b-1}) - 1, which is a positive-coefficient polynomial in the
// small inputs.
template <typename Real>
MomentVector moment_map_t(int b, const MomentVector& in, const WeightMoments* site_weights = nullptr) {
  const int m = in.m_max();
  if (m < 2) throw std::invalid_argument("moment_map: m_max >= 2");
  if (m > kMomentCap) throw std::invalid_argument("moment_map: m_max capped at 12");

  // delta_q = E[(1+X)^q] - 1 = sum_{j>=2} C(q,j) mu_j   (mu_1 = 0)
  std::vector<Real> delta(static_cast<std::size_t>(m) + 1, Real(0));
  for (int q = 2; q <= m; ++q) {
    Real s = 0;
    for (int j = 2; j <= q; ++j) s += Real(binomial(q, j)) * Real(in[j]);
    delta[static_cast<std::size_t>(q)] = s;
  }

  // g_q = (1 + delta_q)^b [ (1 + d_q)^{b-1} ] - 1 with d_q = E[D^q] - 1
  std::vector<Real> g(static_cast<std::size_t>(m) + 1, Real(0));
  for (int q = 2; q <= m; ++q) {
    Real d = delta[static_cast<std::size_t>(q)];
    Real pow_minus_one = 0;  // (1+d)^b - 1 via binomial in d
    for (int k = b; k >= 1; --k) pow_minus_one = pow_minus_one * d + Real(binomial(b, k));
    pow_minus_one *= d;
    Real gq = pow_minus_one;
    if (site_weights) {
      Real w = Real(site_weights->raw_moment(q));  // E[D^q]
      Real wb = 0;                                 // w^{b-1} - 1 via binomial in (w-1)
      Real dv = w - Real(1);
      for (int k = b - 1; k >= 1; --k) wb = wb * dv + Real(binomial(b - 1, k));
      wb *= dv;
      gq = pow_minus_one + wb + pow_minus_one * wb;
    }
    g[static_cast<std::size_t>(q)] = gq;
  }

  // E[Z^p] = sum_q C(p,q) (-1)^{p-q} (1 + g_q) = sum_{q>=2} C(p,q) (-1)^{p-q} g_q
  std::vector<Real> z(static_cast<std::size_t>(m) + 1, Real(0));
  for (int p = 2; p <= m; ++p) {
    Real s = 0;
    for (int q = 2; q <= p; ++q) {
      Real term = Real(binomial(p, q)) * g[static_cast<std::size_t>(q)];
      s += ((p - q) % 2 == 0) ? term : -term;
    }
    z[static_cast<std::size_t>(p)] = s;
  }
  z[0] = Real(1);  // E[Z^0]; E[Z] = 0

  std::vector<Real> kap, mu_out;
  detail::moments_to_cumulants(z, kap);
  // kappa_p((1/b) sum of b iid) = kappa_p(Z) / b^{p-1}
  Real f = Real(1);
  for (int p = 2; p <= m; ++p) {
    f *= Real(b);
    kap[static_cast<std::size_t>(p)] /= f;
  }
  detail::cumulants_to_moments(kap, mu_out);

  MomentVector out(m);
  for (int q = 2; q <= m; ++q) out[q] = static_cast<double>(mu_out[static_cast<std::size_t>(q)]);
  return out;
}

inline MomentVector moment_map(int b, const MomentVector& in, const WeightMoments* site_weights = nullptr) {
  return moment_map_t<double>(b, in, site_weights);
}

inline MomentVector moment_map_ld(int b, const MomentVector& in, const WeightMoments* site_weights = nullptr) {
  return moment_map_t<long double>(b, in, site_weights);
}

// ---------------------------------------------------------------------------
// Limit higher moments R^{(m)}(r)
// ---------------------------------------------------------------------------

// Seed the even moments at depth D with the normal-moment profile
// (m-1)!! R(r-D)^{m/2} and the odd moments with 0, then flow back up;
// depth is doubled until the outputs stabilize.
inline MomentVector limit_higher_moments(int b, double r, int m_max, double rel_tol = 1e-5,
                                         long depth0 = 0, long max_depth = 1L << 22) {
  if (m_max < 2 || m_max > kMomentCap) throw std::invalid_argument("limit_higher_moments: 2 <= m <= 12");
  if (r > 0) {
    int shift = static_cast<int>(std::ceil(r));
    MomentVector v = limit_higher_moments(b, r - shift, m_max, rel_tol, depth0, max_depth);
    for (int i = 0; i < shift; ++i) v = moment_map_ld(b, v);
    return v;
  }
  auto seed_at = [&](long D) {
    double v = detail::r_seed<double>(b, r, static_cast<double>(D));
    MomentVector mv(m_max);
    for (int m2 = 2; m2 <= m_max; m2 += 2) {
      double dfact = 1.0;
      for (int i = m2 - 1; i > 1; i -= 2) dfact *= i;
      mv[m2] = dfact * std::pow(v, m2 / 2.0);
    }
    MomentVector cur = mv;
    for (long i = 0; i < D; ++i) cur = moment_map_ld(b, cur);
    return cur;
  };
  long D = depth0 > 0 ? depth0 : 1L << 12;
  while (D < 16 * static_cast<long>(1 - r)) D *= 2;
  MomentVector prev = seed_at(D);
  while (D < max_depth) {
    D *= 2;
    MomentVector cur = seed_at(D);
    double worst = 0.0;
    for (int q = 2; q <= m_max; ++q) {
      double scale = std::max(std::fabs(cur[q]), 1e-12);
      worst = std::max(worst, std::fabs(cur[q] - prev[q]) / scale);
    }
    prev = cur;
    if (worst < rel_tol) break;
  }
  return prev;
}

// Exact centered moments of W_n - 1 (bond) or What_n - 1 (site) at finite n.
enum class Model { Bond, Site };

inline MomentVector exact_finite_n_moments(int b, long n, const DisorderSpec& spec, double beta,
                                           Model model, int m_max) {
  if (m_max < 2 || m_max > kMomentCap) throw std::invalid_argument("exact_finite_n_moments: 2 <= m <= 12");
  if (model == Model::Bond) {
    WeightMoments wm = centered_weight_moments(spec, beta, m_max);
    MomentVector mv(m_max);
    for (int q = 2; q <= m_max; ++q) mv[q] = wm.mu[static_cast<std::size_t>(q)];
    for (long i = 0; i < n; ++i) mv = moment_map_ld(b, mv);
    return mv;
  }
  WeightMoments wm = centered_weight_moments(spec, beta, m_max);
  MomentVector mv(m_max);  // What_0 = 1: zero vector
  for (long i = 0; i < n; ++i) mv = moment_map_ld(b, mv, &wm);
  return mv;
}

// ---------------------------------------------------------------------------
// Site-model diagnostics
// ---------------------------------------------------------------------------

// |Mhat_V^n(0) - M^{floor(log n)}(Mhat_V^{n - floor(log n)}(0))|; both orbits
// share the first n - floor(log n) steps, so the gap reflects only the
// replacement of Mhat by M on the last stretch.
inline double site_reduction_gap(int b, long n, double V) {
  if (V < 0) throw std::domain_error("site_reduction_gap: V >= 0");
  long lg = static_cast<long>(std::log(static_cast<double>(n)));
  if (lg > n) lg = n;
  long double z = 0;
  for (long i = 0; i < n - lg; ++i) z = map_Mhat_t<long double>(b, static_cast<long double>(V), z);
  long double full = z, reduced = z;
  for (long i = 0; i < lg; ++i) {
    full = map_Mhat_t<long double>(b, static_cast<long double>(V), full);
    reduced = map_M_t<long double>(b, reduced);
  }
  return std::fabs(static_cast<double>(full - reduced));
}

// r_k = (2/pi) arctan(2 n_{n,r} Mhat^k(0) / (pi k2)); diagnostic profile for
// k = 0..n-floor(log n).
inline std::vector<double> tan_transform_profile(int b, long n, double r, double V) {
  auto c = recursion_constants(b);
  double kappa = std::sqrt(c.kappa2);
  double nnr = (M_PI * kappa / 2.0) * std::sqrt(static_cast<double>(b) / (b - 1)) / std::sqrt(V);
  long lg = static_cast<long>(std::log(static_cast<double>(n)));
  long steps = n - lg;
  std::vector<double> rk(static_cast<std::size_t>(steps) + 1);
  long double x = 0;
  rk[0] = 0.0;
  for (long k = 1; k <= steps; ++k) {
    x = map_Mhat_t<long double>(b, static_cast<long double>(V), x);
    rk[static_cast<std::size_t>(k)] =
        (2.0 / M_PI) * std::atan(2.0 * nnr * static_cast<double>(x) / (M_PI * c.kappa2));
  }
  (void)r;
  return rk;
}

// ---------------------------------------------------------------------------
// Limit moment table (CSV payload for the CLI)
// ---------------------------------------------------------------------------

struct LimitMomentTable {
  std::vector<double> r;
  std::vector<double> R;
  std::vector<double> R_prime;
  std::vector<std::vector<double>> higher;  // higher[i][q-3] = R^(q)(r_i), q = 3..m
  int m_max = 2;
};

inline LimitMomentTable build_limit_table(int b, const std::vector<double>& r_grid, int m_max) {
  LimitMomentTable t;
  t.m_max = m_max;
  for (double r : r_grid) {
    t.r.push_back(r);
    t.R.push_back(compute_R(b, r));
    t.R_prime.push_back(compute_R_prime(b, r));
    std::vector<double> hi;
    if (m_max >= 3) {
      MomentVector mv = limit_higher_moments(b, r, m_max);
      for (int q = 3; q <= m_max; ++q) hi.push_back(mv[q]);
    }
    t.higher.push_back(std::move(hi));
  }
  return t;
}

}  // namespace diamond
