#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "diamond/arrays.hpp"
#include "diamond/disorder.hpp"
#include "diamond/graph.hpp"
#include "diamond/montecarlo.hpp"
#include "diamond/recursion.hpp"

using namespace diamond;

namespace {

EdgeArray random_array(int b, int level, double scale, std::uint64_t seed) {
  EdgeArray a(b, level);
  SplitMix64 rng(mix64(seed));
  for (auto& v : a.values) v = scale * (2.0 * rng.next_u01() - 1.0);
  return a;
}

// brute-force path-sum partition function from the graph module
double path_sum_partition(const DiamondParams& p, int n, const EdgeArray& weights_minus_one) {
  auto paths = enumerate_paths(p, n);
  KahanSum acc;
  for (const auto& path : paths) {
    double prod = 1.0;
    for (const auto& e : edges_of_path(path)) prod *= 1.0 + weights_minus_one[e.index(p)];
    acc.add(prod);
  }
  return acc.value() / static_cast<double>(paths.size());
}

}  // namespace

TEST_CASE("Q on simple arrays") {
  // all-zero is a fixed point
  EdgeArray z(2, 1, 0.0);
  for (double v : apply_Q(z).values) CHECK(v == 0.0);

  // b=2, k=1, constant x: single value 2x + x^2
  for (double x : {0.1, -0.3, 0.77}) {
    EdgeArray a(2, 1, x);
    auto q = apply_Q(a);
    REQUIRE(q.size() == 1);
    CHECK(q[0] == Catch::Approx(2 * x + x * x).margin(1e-15));
  }

  // entries (1, 0, 0, -1) -> 0
  EdgeArray a(2, 1);
  a.values = {1.0, 0.0, 0.0, -1.0};
  CHECK(apply_Q(a)[0] == Catch::Approx(0.0).margin(1e-15));

  CHECK_THROWS_AS(apply_Q(EdgeArray(2, 0)), std::invalid_argument);
  CHECK_THROWS_AS(apply_L(EdgeArray(2, 0)), std::invalid_argument);
  CHECK_THROWS_AS(apply_E(EdgeArray(3, 0)), std::invalid_argument);
  EdgeArray bad(2, 1, -1.5);
  CHECK_THROWS_AS(partition_from_disorder(bad), std::domain_error);
}

TEST_CASE("L and E on simple arrays") {
  for (double x : {0.2, -0.05}) {
    EdgeArray a(2, 1, x);
    CHECK(apply_L(a)[0] == Catch::Approx(2 * x).margin(1e-15));
    CHECK(apply_E(a)[0] == Catch::Approx(x * x).margin(1e-15));
  }
  EdgeArray z(3, 1, 0.0);
  CHECK(apply_L(z)[0] == 0.0);
  CHECK(apply_E(z)[0] == 0.0);

  EdgeArray one(3, 1, 0.0);
  one[0] = 1.0;
  CHECK(apply_L(one)[0] == Catch::Approx(1.0 / 3).margin(1e-15));
  CHECK(apply_E(one)[0] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("Q = L + E entrywise on random arrays") {
  for (int b : {2, 3})
    for (int level : {1, 2}) {
      auto a = random_array(b, level, 0.8, 17 + b + level);
      auto q = apply_Q(a);
      auto l = apply_L(a);
      auto e = apply_E(a);
      for (std::size_t i = 0; i < q.size(); ++i)
        CHECK(q[i] == Catch::Approx(l[i] + e[i]).margin(1e-14));
    }
}

TEST_CASE("pyramid layers satisfy the Q identity; peak equals direct Q^n") {
  // zero generator: all layers zero
  auto zp = build_pyramid(EdgeArray(2, 3, 0.0));
  for (const auto& layer : zp.layers)
    for (double v : layer.values) CHECK(v == 0.0);

  // constant 0.1 generator, b=2, n=2
  auto p = build_pyramid(EdgeArray(2, 2, 0.1));
  CHECK(p.layer(1)[0] == Catch::Approx(0.21).margin(1e-15));
  CHECK(p.peak() == Catch::Approx(0.4641).margin(1e-15));

  auto a = random_array(2, 3, 0.5, 99);
  auto pyr = build_pyramid(a);
  for (int k = 1; k <= 3; ++k) {
    auto down = apply_Q(pyr.layer(k));
    for (std::size_t i = 0; i < down.size(); ++i) CHECK(down[i] == pyr.layer(k - 1)[i]);
  }
  CHECK(pyr.peak() == q_tower(a));
}

TEST_CASE("depth-first tower equals dense tower") {
  auto a = random_array(2, 4, 0.6, 4242);
  double dense = q_tower(a);
  double lazy = q_tower_depth_first(2, 4, [&](std::uint64_t idx) { return a[idx]; });
  CHECK(lazy == Catch::Approx(dense).epsilon(1e-14));
}

TEST_CASE("partition identity: 1 + Q^n equals the path sum") {
  DiamondParams p(2, 2);
  for (int n : {0, 1, 2, 3}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto x = random_array(2, n, 0.9, 1000 + n * 100 + rep);
      double w_arrays = partition_from_disorder(x);
      double w_paths = path_sum_partition(p, n, x);
      CHECK(w_arrays == Catch::Approx(w_paths).epsilon(1e-12));
    }
  }
  // n = 0: single weight -> 1 + x
  EdgeArray single(2, 0);
  single[0] = 0.37;
  CHECK(partition_from_disorder(single) == Catch::Approx(1.37).margin(1e-15));
  // all weights 0 -> 1
  CHECK(partition_from_disorder(EdgeArray(2, 2, 0.0)) == 1.0);
}

TEST_CASE("variance transport under Q, L, E") {
  // i.i.d. centered entries with variance s2: Var(Q) = M(s2), Var(L) = s2,
  // Var(E) = M(s2) - s2; checked by MC at b=2, s2 = 0.1
  const double s2 = 0.1;
  const std::size_t reps = 1000000;
  SplitMix64 rng(123);
  double sq = 0, sl = 0, se = 0, sq2 = 0, sl2 = 0, se2 = 0, cov_le = 0;
  EdgeArray a(2, 1);
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto& v : a.values) v = std::sqrt(3.0 * s2) * (2.0 * rng.next_u01() - 1.0);
    double q = apply_Q(a)[0], l = apply_L(a)[0], e = q - l;
    sq += q; sl += l; se += e;
    sq2 += q * q; sl2 += l * l; se2 += e * e;
    cov_le += l * e;
  }
  double n = static_cast<double>(reps);
  double vq = sq2 / n - (sq / n) * (sq / n);
  double vl = sl2 / n - (sl / n) * (sl / n);
  double ve = se2 / n - (se / n) * (se / n);
  double target_q = map_M(2, s2);
  CHECK(vq == Catch::Approx(target_q).epsilon(0.01));
  CHECK(vl == Catch::Approx(s2).epsilon(0.01));
  CHECK(ve == Catch::Approx(target_q - s2).epsilon(0.01));
  // L and E uncorrelated (symmetric disorder kills the third-moment term)
  double c = cov_le / n - (sl / n) * (se / n);
  CHECK(std::fabs(c) < 3.0 * std::sqrt(vl * ve / n) + 1e-6);
}

TEST_CASE("L^k and L^{l-1} E Q^{k-l} are uncorrelated over replicas") {
  // k = 2, l = 1: Cov(L^2{x}, E Q{x}) = 0 within MC error
  const std::size_t reps = 200000;
  SplitMix64 rng(321);
  double sa = 0, sb = 0, sab = 0, sa2 = 0, sb2 = 0;
  EdgeArray x(2, 2);
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto& v : x.values) v = 0.5 * (2.0 * rng.next_u01() - 1.0);
    double a = apply_L(apply_L(x))[0];
    double b = apply_E(apply_Q(x))[0];
    sa += a; sb += b; sab += a * b; sa2 += a * a; sb2 += b * b;
  }
  double n = static_cast<double>(reps);
  double cov = sab / n - (sa / n) * (sb / n);
  double va = sa2 / n - (sa / n) * (sa / n), vb = sb2 / n - (sb / n) * (sb / n);
  CHECK(std::fabs(cov) < 3.0 * std::sqrt(va * vb / n) + 1e-8);
}

TEST_CASE("telescoping decomposition Q^k = L^k + sum L^{l-1} E Q^{k-l}") {
  for (int k : {1, 2, 3}) {
    auto x = random_array(2, k, 0.7, 5000 + k);
    double lhs = q_tower(x);
    // L^k
    EdgeArray cur = x;
    for (int i = 0; i < k; ++i) cur = apply_L(cur);
    double rhs = cur[0];
    for (int l = 1; l <= k; ++l) {
      EdgeArray t = x;
      for (int i = 0; i < k - l; ++i) t = apply_Q(t);
      t = apply_E(t);
      for (int i = 0; i < l - 1; ++i) t = apply_L(t);
      rhs += t[0];
    }
    CHECK(lhs == Catch::Approx(rhs).margin(1e-13));
  }
}

TEST_CASE("edge array file round trips") {
  auto a = random_array(2, 2, 1.0, 777);
  std::string csv = "test_edge_array.csv", bin = "test_edge_array.bin";
  save_edge_array_csv(a, csv);
  auto a2 = load_edge_array_csv(csv);
  CHECK(a2.b == a.b);
  CHECK(a2.level == a.level);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a2[i] == a[i]);
  save_edge_array_binary(a, bin);
  auto a3 = load_edge_array_binary(bin);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a3[i] == a[i]);
  std::remove(csv.c_str());
  std::remove(bin.c_str());
}
