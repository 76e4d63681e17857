// Monte Carlo samplers: finite-n partition functions for bond and site
// disorder (exact depth-first recursion over counter-based leaf streams), the
// pool scheme approximating the limit family W_r, the lognormal perturbation
// construction, and the exact small-graph conditional-expectation oracle.
//
// Every random draw is a pure function of (master seed, replica, node), so a
// replica's value does not depend on evaluation order and identical configs
// reproduce identical sample vectors bit-exactly on one platform.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "diamond/arrays.hpp"
#include "diamond/disorder.hpp"
#include "diamond/graph.hpp"
#include "diamond/numeric.hpp"
#include "diamond/recursion.hpp"
#include "diamond/scaling.hpp"

namespace diamond {

struct ReplicaConfig {
  Model model = Model::Bond;
  int b = 2;
  int n = 1;
  DisorderSpec spec = DisorderSpec::gaussian();
  double beta = 0.0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Counter streams
// ---------------------------------------------------------------------------

inline std::uint64_t replica_key(std::uint64_t seed, std::uint64_t replica) {
  return mix64(mix64(seed) ^ (0x8000000000000001ULL + replica * 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t counter_bits(std::uint64_t key, std::uint64_t counter) {
  return mix64(key + counter * 0x9e3779b97f4a7c15ULL);
}

// Normalized-weight stream over level-n edges for one replica.
struct LeafWeightStream {
  DisorderSpec spec;
  double beta;
  std::uint64_t key;
  double log_norm;  // log E[e^{beta omega}]
  double w_plus = 0.0, w_minus = 0.0;

  LeafWeightStream(const DisorderSpec& s, double beta_, std::uint64_t key_)
      : spec(s), beta(beta_), key(key_), log_norm(log_mgf(s, beta_)) {
    if (s.family == Family::Rademacher) {
      w_plus = std::exp(beta - log_norm);
      w_minus = std::exp(-beta - log_norm);
    } else if (s.family == Family::TwoPoint) {
      w_plus = std::exp(beta * s.tp_a() - log_norm);
      w_minus = std::exp(-beta * s.tp_b() - log_norm);
    }
  }

  // e^{beta omega_idx} / E[e^{beta omega}]
  double operator()(std::uint64_t idx) const {
    switch (spec.family) {
      case Family::Rademacher: {
        // one bit per leaf; 64 leaves share a hash block
        std::uint64_t block = counter_bits(key, idx >> 6);
        return ((block >> (idx & 63)) & 1) ? w_plus : w_minus;
      }
      case Family::Gaussian: {
        double z = inv_normal_cdf(u64_to_u01(counter_bits(key, idx)));
        return std::exp(beta * z - log_norm);
      }
      case Family::UniformCentered: {
        double om = kSqrt3 * (2.0 * u64_to_u01(counter_bits(key, idx)) - 1.0);
        return std::exp(beta * om - log_norm);
      }
      case Family::TwoPoint:
        return u64_to_u01(counter_bits(key, idx)) < spec.p ? w_plus : w_minus;
    }
    throw std::logic_error("LeafWeightStream");
  }
};

// Vertex-weight stream: a vertex is (generation g, owner edge index, slot).
struct VertexWeightStream {
  LeafWeightStream base;
  VertexWeightStream(const DisorderSpec& s, double beta_, std::uint64_t key_)
      : base(s, beta_, hash_combine(key_, 0x5e17e5u)) {}
  double operator()(int generation, std::uint64_t owner_index, int slot) const {
    std::uint64_t idx = hash_combine(hash_combine(static_cast<std::uint64_t>(generation), owner_index),
                                     static_cast<std::uint64_t>(slot));
    return base(idx);
  }
};

// ---------------------------------------------------------------------------
// Partition-function samplers
// ---------------------------------------------------------------------------

namespace detail {

struct BondEval {
  int b, n;
  const LeafWeightStream& w;
  double eval(int level, std::uint64_t base, std::uint64_t place) const {
    if (level == n) return w(base);
    double s = 0.0;
    for (int i = 0; i < b; ++i) {
      double prod = 1.0;
      for (int j = 0; j < b; ++j)
        prod *= eval(level + 1, base + place * static_cast<std::uint64_t>(i * b + j),
                     place * static_cast<std::uint64_t>(b) * b);
      s += prod;
    }
    return s / b;
  }
};

struct SiteEval {
  int b, n;
  const VertexWeightStream& w;
  double eval(int level, std::uint64_t base, std::uint64_t place) const {
    if (level == n) return 1.0;
    double s = 0.0;
    for (int i = 0; i < b; ++i) {
      double prod = 1.0;
      for (int j = 0; j < b; ++j)
        prod *= eval(level + 1, base + place * static_cast<std::uint64_t>(i * b + j),
                     place * static_cast<std::uint64_t>(b) * b);
      for (int l = 1; l <= b - 1; ++l) prod *= w(level + 1, base, i * (b - 1) + (l - 1));
      s += prod;
    }
    return s / b;
  }
};

}  // namespace detail

// One draw of W_n(beta), O(b^{2n}) time, O(n b^2) stack.
inline double sample_W_bond(int b, int n, const DisorderSpec& spec, double beta,
                            std::uint64_t seed, std::uint64_t replica) {
  LeafWeightStream w(spec, beta, replica_key(seed, replica));
  return detail::BondEval{b, n, w}.eval(0, 0, 1);
}

// One draw of What_n(beta); junction weights sit at the b-1 interior vertices
// of each branch, generation level+1, owned by the edge being refined.
inline double sample_W_site(int b, int n, const DisorderSpec& spec, double beta,
                            std::uint64_t seed, std::uint64_t replica) {
  VertexWeightStream w(spec, beta, replica_key(seed, replica));
  return detail::SiteEval{b, n, w}.eval(0, 0, 1);
}

// Deterministic parallel map over replicas; out[i] depends only on (seed, i).
template <typename F>
std::vector<double> sample_replicas(std::size_t replicas, int threads, F&& one) {
  std::vector<double> out(replicas);
  if (threads < 1) threads = 1;
  if (threads == 1 || replicas < 1024) {
    for (std::size_t i = 0; i < replicas; ++i) out[i] = one(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (replicas + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::size_t lo = static_cast<std::size_t>(t) * chunk, hi = std::min(replicas, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) out[i] = one(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

inline std::vector<double> sample_partition_functions(const ReplicaConfig& cfg, int threads = 1) {
  if (cfg.model == Model::Bond)
    return sample_replicas(cfg.replicas, threads, [&](std::size_t i) {
      return sample_W_bond(cfg.b, cfg.n, cfg.spec, cfg.beta, cfg.seed, i);
    });
  return sample_replicas(cfg.replicas, threads, [&](std::size_t i) {
    return sample_W_site(cfg.b, cfg.n, cfg.spec, cfg.beta, cfg.seed, i);
  });
}

// ---------------------------------------------------------------------------
// Pool scheme for the limit family
// ---------------------------------------------------------------------------

struct SamplePool {
  double r = 0.0;
  int b = 2;
  std::vector<double> samples;  // W-values, >= 0
  int evolution_steps = 0;
  std::string provenance;
};

// W_{r0} ~ 1 + N(0, R(r0)) for r0 << 0; negative draws are resampled and the
// empirical mean is renormalized to 1 (the products in pool_evolve amplify
// any mean offset by b per step, see below).
inline SamplePool pool_init(int b, double r0, std::size_t N, std::uint64_t seed) {
  if (N == 0) throw std::invalid_argument("pool_init: N >= 1");
  SamplePool pool;
  pool.r = r0;
  pool.b = b;
  pool.provenance = "init: 1 + N(0, R(r0)), mean-renormalized";
  double sigma = std::sqrt(compute_R(b, r0));
  pool.samples.resize(N);
  SplitMix64 rng(replica_key(seed, 0xC0FFEEULL));
  for (std::size_t i = 0; i < N; ++i) {
    double v;
    int guard = 0;
    do {
      v = 1.0 + sigma * inv_normal_cdf(rng.next_u01());
      if (++guard > 1000) throw std::runtime_error("pool_init: resampling stuck");
    } while (v < 0.0);
    pool.samples[i] = v;
  }
  double mean = pairwise_sum(pool.samples) / static_cast<double>(N);
  for (double& v : pool.samples) v /= mean;
  return pool;
}

// One distributional-recursion step: N fresh samples, each (1/b) sum of b
// products of b draws-with-replacement from the (freshly shuffled) input,
// then mean renormalization.  The products square the pool's empirical mean,
// so a raw scheme amplifies the O(N^{-1/2}) initialization error by a factor
// b per step and drifts unboundedly over tens of steps; dividing by the
// empirical mean pins the one exact constraint E[W_r] = 1 and removes the
// unstable mode at an O(1/N) bias cost per step.
inline SamplePool pool_evolve(const SamplePool& in, std::uint64_t seed) {
  if (in.samples.empty()) throw std::invalid_argument("pool_evolve: empty pool");
  const int b = in.b;
  const std::size_t N = in.samples.size();
  std::vector<double> src = in.samples;
  SplitMix64 shuffler(hash_combine(replica_key(seed, 0x5affe1ULL), static_cast<std::uint64_t>(in.evolution_steps)));
  for (std::size_t i = N - 1; i > 0; --i) {  // Fisher-Yates
    std::size_t j = static_cast<std::size_t>(shuffler() % (i + 1));
    std::swap(src[i], src[j]);
  }
  SamplePool out;
  out.r = in.r + 1.0;
  out.b = b;
  out.evolution_steps = in.evolution_steps + 1;
  out.provenance = in.provenance + " -> evolve+renorm";
  out.samples.resize(N);
  std::uint64_t key = hash_combine(replica_key(seed, 0xE70ULL),
                                   static_cast<std::uint64_t>(in.evolution_steps) * 2654435761ULL);
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0.0;
    std::uint64_t c = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(b) * b;
    for (int ii = 0; ii < b; ++ii) {
      double prod = 1.0;
      for (int j = 0; j < b; ++j) prod *= src[counter_bits(key, c++) % N];
      s += prod;
    }
    out.samples[i] = s / b;
  }
  double mean = pairwise_sum(out.samples) / static_cast<double>(N);
  for (double& v : out.samples) v /= mean;
  return out;
}

inline SamplePool pool_at(int b, double r, double r0, std::size_t N, std::uint64_t seed) {
  if (r < r0) throw std::invalid_argument("pool_at: r >= r0");
  SamplePool pool = pool_init(b, r0, N, seed);
  int steps = static_cast<int>(std::llround(r - r0));
  for (int k = 0; k < steps; ++k) pool = pool_evolve(pool, seed);
  return pool;
}

// ---------------------------------------------------------------------------
// Lognormal perturbation (the X^B_{n,r,t} construction)
// ---------------------------------------------------------------------------

// Each output sample applies Q^n to leaves (1 + X_h) e^{(kappa/n) B_t -
// (kappa^2/2n^2) t} - 1 where the X_h are draws-with-replacement from a pool
// at parameter r - n and B_t ~ N(0, t) independently per leaf.
inline std::vector<double> lognormal_perturb(const SamplePool& leaf_pool, int n, double t,
                                             std::size_t out_count, std::uint64_t seed, int threads = 1) {
  if (leaf_pool.samples.empty()) throw std::invalid_argument("lognormal_perturb: empty pool");
  const int b = leaf_pool.b;
  const double kappa = constants(b).kappa;
  const double drift = kappa * kappa * t / (2.0 * static_cast<double>(n) * n);
  const double vol = kappa / static_cast<double>(n) * std::sqrt(t);
  const std::size_t N = leaf_pool.samples.size();
  const std::vector<double>& src = leaf_pool.samples;
  return sample_replicas(out_count, threads, [&](std::size_t i) {
    std::uint64_t key = replica_key(seed ^ 0x10c0ULL, i);
    std::uint64_t gkey = hash_combine(key, 0xb201ULL);
    auto leaf = [&](std::uint64_t idx) {
      double w = src[counter_bits(key, idx) % N];
      double g = t > 0 ? std::exp(vol * inv_normal_cdf(u64_to_u01(counter_bits(gkey, idx))) - drift) : 1.0;
      return w * g - 1.0;
    };
    return q_tower_depth_first(b, n, leaf);  // one X-sample (centered)
  });
}

// ---------------------------------------------------------------------------
// Conditional-expectation oracle (exact, enumeration scale)
// ---------------------------------------------------------------------------

struct ConditionalReduction {
  double lhs;  // vertex-restricted path sum over generations > k
  double rhs;  // 1 + Q^k of the sub-copy partition functions
  double gap;
};

// Evaluates both sides of the conditional-expectation identity on one fixed
// site-disorder assignment.  lhs enumerates directed paths literally; rhs
// goes through the array map Q, so the two routes are independent.
inline ConditionalReduction conditional_reduction_oracle(int b, int n, int k, const DisorderSpec& spec,
                                                         double beta, std::uint64_t seed) {
  if (k < 0 || k > n) throw std::invalid_argument("conditional_reduction_oracle: 0 <= k <= n");
  DiamondParams params(b, b);
  if (path_count(params, n) > 200000) throw std::length_error("conditional_reduction_oracle: enumeration scale exceeded");
  VertexWeightStream w(spec, beta, replica_key(seed, 0));
  auto vertex_weight = [&](const VertexId& v) {
    std::uint64_t owner_idx = v.owner.index(params);
    return w(v.generation(), owner_idx, (v.branch - 1) * (b - 1) + (v.junction - 1));
  };

  // lhs: restricted path sum
  auto paths = enumerate_paths(params, n);
  KahanSum acc;
  for (const auto& p : paths) {
    double prod = 1.0;
    for (const auto& v : vertices_of_path(p))
      if (v.generation() > k) prod *= vertex_weight(v);
    acc.add(prod);
  }
  double lhs = acc.value() / static_cast<double>(paths.size());

  // rhs: sub-copy partition functions What^{(h)} for h in E_k, then Q^k
  struct SubEval {
    int b, n;
    const std::function<double(const VertexId&)>& vw;
    double eval(const EdgeId& edge) const {
      if (edge.level() == n) return 1.0;
      double s = 0.0;
      for (int i = 1; i <= b; ++i) {
        double prod = 1.0;
        for (int j = 1; j <= b; ++j) prod *= eval(edge.child(i, j));
        for (int l = 1; l <= b - 1; ++l) prod *= vw(VertexId{edge, i, l});
        s += prod;
      }
      return s / b;
    }
  };
  std::function<double(const VertexId&)> vw = vertex_weight;
  SubEval sub_eval{b, n, vw};
  EdgeArray sub(b, k);
  for (std::size_t hi = 0; hi < sub.size(); ++hi)
    sub[hi] = sub_eval.eval(EdgeId::from_index(params, hi, k)) - 1.0;
  double rhs = 1.0 + q_tower(sub);
  return {lhs, rhs, std::fabs(lhs - rhs)};
}

}  // namespace diamond
