// Edge-labeled arrays and the contraction maps acting on them: Q (one
// renormalization step), its linearization L, the error map E = Q - L,
// Q-pyramids, and the partition-function identity  W_n = 1 + Q^n{X}.
// Restricted to b = s; general (b, s) path sums live in graph.hpp.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diamond/graph.hpp"
#include "diamond/numeric.hpp"

namespace diamond {

struct EdgeArray {
  int b = 2;
  int level = 0;
  std::vector<double> values;  // length b^{2k}, serialized EdgeId order

  EdgeArray() = default;
  EdgeArray(int b_, int level_, double fill = 0.0) : b(b_), level(level_) {
    if (b < 2) throw std::invalid_argument("EdgeArray: b >= 2");
    values.assign(expected_size(b, level), fill);
  }

  static std::size_t expected_size(int b, int level) {
    return static_cast<std::size_t>(checked_pow_u64(static_cast<std::uint64_t>(b) * b, level));
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  void check() const {
    if (values.size() != expected_size(b, level)) throw std::invalid_argument("EdgeArray: bad length");
  }
};

// w_a = (1/b) sum_i ( prod_j (1 + x_{a x (i,j)}) - 1 ).  Children of parent p
// sit at p + d * P with P = b^{2(k-1)} and d = (i-1)b + (j-1).
inline EdgeArray apply_Q(const EdgeArray& a) {
  a.check();
  if (a.level < 1) throw std::invalid_argument("apply_Q: level-0 input");
  const int b = a.b;
  EdgeArray out(b, a.level - 1);
  const std::size_t P = out.size();
  std::vector<double> branch(static_cast<std::size_t>(b));
  for (std::size_t p = 0; p < P; ++p) {
    for (int i = 0; i < b; ++i) {
      double prod = 1.0;
      for (int j = 0; j < b; ++j) prod *= 1.0 + a[p + static_cast<std::size_t>(i * b + j) * P];
      branch[static_cast<std::size_t>(i)] = prod - 1.0;
    }
    out[p] = pairwise_sum(branch.data(), branch.size()) / b;
  }
  return out;
}

// y_a = (1/b) sum_{i,j} x_{a x (i,j)}
inline EdgeArray apply_L(const EdgeArray& a) {
  a.check();
  if (a.level < 1) throw std::invalid_argument("apply_L: level-0 input");
  const int b = a.b;
  EdgeArray out(b, a.level - 1);
  const std::size_t P = out.size();
  std::vector<double> kids(static_cast<std::size_t>(b) * b);
  for (std::size_t p = 0; p < P; ++p) {
    for (int d = 0; d < b * b; ++d) kids[static_cast<std::size_t>(d)] = a[p + static_cast<std::size_t>(d) * P];
    out[p] = pairwise_sum(kids.data(), kids.size()) / b;
  }
  return out;
}

// E := Q - L, evaluated entrywise so the identity Q = L + E is exact.
inline EdgeArray apply_E(const EdgeArray& a) {
  EdgeArray q = apply_Q(a), l = apply_L(a);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] -= l[i];
  return q;
}

struct QPyramid {
  std::vector<EdgeArray> layers;  // layers[k] has level k, k = 0..n

  const EdgeArray& layer(int k) const { return layers.at(static_cast<std::size_t>(k)); }
  int generations() const { return static_cast<int>(layers.size()) - 1; }
  double peak() const { return layers.front().values.front(); }
};

inline QPyramid build_pyramid(const EdgeArray& generator) {
  generator.check();
  QPyramid pyr;
  pyr.layers.resize(static_cast<std::size_t>(generator.level) + 1);
  pyr.layers[static_cast<std::size_t>(generator.level)] = generator;
  for (int k = generator.level; k >= 1; --k)
    pyr.layers[static_cast<std::size_t>(k - 1)] = apply_Q(pyr.layers[static_cast<std::size_t>(k)]);
  return pyr;
}

// Q^n collapsed to the single level-0 value.
inline double q_tower(const EdgeArray& generator) {
  return build_pyramid(generator).peak();
}

// Depth-first evaluation of Q^n over a lazily generated leaf array; O(n b^2)
// memory.  `leaf` maps a serialized level-n EdgeId index to its value.
inline double q_tower_depth_first(int b, int n, const std::function<double(std::uint64_t)>& leaf) {
  struct Rec {
    int b, n;
    const std::function<double(std::uint64_t)>& leaf;
    double eval(int level, std::uint64_t base, std::uint64_t place) const {
      if (level == n) return leaf(base);
      double s = 0.0;
      for (int i = 0; i < b; ++i) {
        double prod = 1.0;
        for (int j = 0; j < b; ++j)
          prod *= 1.0 + eval(level + 1, base + place * static_cast<std::uint64_t>(i * b + j), place * static_cast<std::uint64_t>(b) * b);
        s += prod - 1.0;
      }
      return s / b;
    }
  } rec{b, n, leaf};
  return rec.eval(0, 0, 1);
}

// W_n = 1 + Q^n{X} for X_h = e^{beta omega_h}/E[e^{beta omega}] - 1.
inline double partition_from_disorder(const EdgeArray& normalized_weights_minus_one) {
  for (double v : normalized_weights_minus_one.values)
    if (v < -1.0) throw std::domain_error("partition_from_disorder: entry < -1");
  return 1.0 + q_tower(normalized_weights_minus_one);
}

// ---------------------------------------------------------------------------
// Flat serialization: header (b, k), then values in serialized EdgeId order.
// ---------------------------------------------------------------------------

inline void save_edge_array_csv(const EdgeArray& a, const std::string& path) {
  a.check();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_array_csv: cannot open " + path);
  out << a.b << "," << a.level << "\n";
  char buf[32];
  for (double v : a.values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << "\n";
  }
}

inline EdgeArray load_edge_array_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_array_csv: cannot open " + path);
  char comma;
  EdgeArray a;
  if (!(in >> a.b >> comma >> a.level)) throw std::runtime_error("load_edge_array_csv: bad header");
  a.values.resize(EdgeArray::expected_size(a.b, a.level));
  for (double& v : a.values)
    if (!(in >> v)) throw std::runtime_error("load_edge_array_csv: truncated values");
  return a;
}

inline void save_edge_array_binary(const EdgeArray& a, const std::string& path) {
  a.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_edge_array_binary: cannot open " + path);
  const char magic[8] = {'E', 'D', 'G', 'E', 'A', 'R', 'R', '1'};
  out.write(magic, 8);
  std::uint32_t b = static_cast<std::uint32_t>(a.b), k = static_cast<std::uint32_t>(a.level);
  out.write(reinterpret_cast<const char*>(&b), 4);
  out.write(reinterpret_cast<const char*>(&k), 4);
  out.write(reinterpret_cast<const char*>(a.values.data()),
            static_cast<std::streamsize>(a.values.size() * sizeof(double)));
}

inline EdgeArray load_edge_array_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_edge_array_binary: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "EDGEARR1") throw std::runtime_error("load_edge_array_binary: bad magic");
  std::uint32_t b = 0, k = 0;
  in.read(reinterpret_cast<char*>(&b), 4);
  in.read(reinterpret_cast<char*>(&k), 4);
  EdgeArray a;
  a.b = static_cast<int>(b);
  a.level = static_cast<int>(k);
  a.values.resize(EdgeArray::expected_size(a.b, a.level));
  in.read(reinterpret_cast<char*>(a.values.data()),
          static_cast<std::streamsize>(a.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("load_edge_array_binary: truncated values");
  return a;
}

}  // namespace diamond
