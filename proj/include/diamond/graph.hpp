// Combinatorics of the diamond hierarchical graphs D_n^{b,s}: edge and vertex
// indexing, directed-path enumeration at small n, and exact overlap statistics
// for pairs of independent uniform paths.  Everything here is an exact oracle
// for the array/recursion machinery.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "diamond/numeric.hpp"

namespace diamond {

struct DiamondParams {
  int b;  // branching
  int s;  // segmenting
  DiamondParams(int b_, int s_) : b(b_), s(s_) {
    if (b < 2 || s < 2) throw std::invalid_argument("DiamondParams: need b >= 2 and s >= 2");
  }
  int bs() const { return b * s; }
};

// An edge of D_k is addressed by k coordinate pairs (i, j), i in [1..b],
// j in [1..s]; the prefix of length l is the level-l ancestor.  The serialized
// index is a base-(b*s) integer, little-endian in level: the coarsest pair is
// the least significant digit, so the b*s children of edge `a` at level k sit
// at indices  a.index() + d * (b*s)^k.
struct EdgeId {
  std::vector<std::pair<int, int>> coords;

  int level() const { return static_cast<int>(coords.size()); }

  EdgeId child(int i, int j) const {
    EdgeId e = *this;
    e.coords.emplace_back(i, j);
    return e;
  }

  EdgeId ancestor(int l) const {
    EdgeId e;
    e.coords.assign(coords.begin(), coords.begin() + l);
    return e;
  }

  std::uint64_t index(const DiamondParams& p) const {
    std::uint64_t idx = 0, place = 1;
    for (const auto& [i, j] : coords) {
      if (i < 1 || i > p.b || j < 1 || j > p.s) throw std::out_of_range("EdgeId coordinate");
      idx += place * static_cast<std::uint64_t>((i - 1) * p.s + (j - 1));
      place = checked_mul_u64(place, static_cast<std::uint64_t>(p.bs()));
    }
    return idx;
  }

  static EdgeId from_index(const DiamondParams& p, std::uint64_t idx, int level) {
    EdgeId e;
    e.coords.reserve(level);
    for (int l = 0; l < level; ++l) {
      int d = static_cast<int>(idx % p.bs());
      idx /= p.bs();
      e.coords.emplace_back(d / p.s + 1, d % p.s + 1);
    }
    return e;
  }

  bool operator==(const EdgeId& o) const { return coords == o.coords; }
  bool operator<(const EdgeId& o) const { return coords < o.coords; }
};

// A non-root vertex is internal to exactly one embedded copy of D_1: the copy
// that replaced edge `owner` when level owner.level()+1 was built.  Its
// generation is owner.level() + 1.
struct VertexId {
  EdgeId owner;
  int branch;    // in [1..b]
  int junction;  // in [1..s-1]

  int generation() const { return owner.level() + 1; }

  bool operator==(const VertexId& o) const {
    return branch == o.branch && junction == o.junction && owner == o.owner;
  }
  bool operator<(const VertexId& o) const {
    if (owner.coords != o.owner.coords) return owner < o.owner;
    if (branch != o.branch) return branch < o.branch;
    return junction < o.junction;
  }
};

// ---------------------------------------------------------------------------
// Cardinalities
// ---------------------------------------------------------------------------

inline std::uint64_t edge_count(const DiamondParams& p, int n) {
  if (n < 0) throw std::invalid_argument("edge_count: n < 0");
  return checked_pow_u64(static_cast<std::uint64_t>(p.bs()), n);
}

inline std::uint64_t path_count(const DiamondParams& p, int n) {
  if (n < 0) throw std::invalid_argument("path_count: n < 0");
  std::uint64_t c = 1;  // |Gamma_0| = 1
  for (int k = 0; k < n; ++k) {
    std::uint64_t pw = 1;
    for (int j = 0; j < p.s; ++j) pw = checked_mul_u64(pw, c);
    c = checked_mul_u64(static_cast<std::uint64_t>(p.b), pw);
  }
  return c;
}

inline std::uint64_t vertex_count(const DiamondParams& p, int n) {
  if (n < 0) throw std::invalid_argument("vertex_count: n < 0");
  // b(s-1)((bs)^n - 1)/(bs - 1), accumulated as a geometric sum to stay exact
  std::uint64_t geo = 0, place = 1;
  for (int k = 0; k < n; ++k) {
    geo = geo + place;  // 1 + bs + ... + (bs)^{n-1}
    place = checked_mul_u64(place, static_cast<std::uint64_t>(p.bs()));
    if (geo > place) throw std::overflow_error("vertex_count overflow");
  }
  return checked_mul_u64(checked_mul_u64(static_cast<std::uint64_t>(p.b), static_cast<std::uint64_t>(p.s - 1)), geo);
}

// ---------------------------------------------------------------------------
// Directed paths.  A level-n path picks a top branch i and one level-(n-1)
// sub-path per segment; a level-0 path is empty (it crosses the single edge).
// ---------------------------------------------------------------------------

struct DirectedPath {
  int branch = 0;                      // 0 for a level-0 path
  std::vector<DirectedPath> segments;  // s entries for level >= 1

  int level() const {
    int l = 0;
    const DirectedPath* q = this;
    while (!q->segments.empty()) {
      ++l;
      q = &q->segments.front();
    }
    return l;
  }
};

namespace detail {

inline void enumerate_rec(const DiamondParams& p, int n, std::vector<DirectedPath>& out,
                          const std::vector<DirectedPath>& lower) {
  // lexicographic: branch ascending, then the s sub-paths as an odometer with
  // the last segment fastest
  std::vector<std::size_t> pick(static_cast<std::size_t>(p.s), 0);
  for (int i = 1; i <= p.b; ++i) {
    std::fill(pick.begin(), pick.end(), 0);
    while (true) {
      DirectedPath path;
      path.branch = i;
      path.segments.reserve(p.s);
      for (int j = 0; j < p.s; ++j) path.segments.push_back(lower[pick[j]]);
      out.push_back(std::move(path));
      int j = p.s - 1;
      while (j >= 0 && ++pick[j] == lower.size()) pick[j--] = 0;
      if (j < 0) break;
    }
  }
  (void)n;
}

}  // namespace detail

inline std::vector<DirectedPath> enumerate_paths(const DiamondParams& p, int n,
                                                 std::uint64_t cap = 1000000) {
  if (path_count(p, n) > cap) throw std::length_error("enumerate_paths: path count exceeds cap");
  std::vector<DirectedPath> cur{DirectedPath{}};
  for (int k = 1; k <= n; ++k) {
    std::vector<DirectedPath> next;
    next.reserve(static_cast<std::size_t>(path_count(p, k)));
    detail::enumerate_rec(p, k, next, cur);
    cur = std::move(next);
  }
  return cur;
}

namespace detail {

inline void edges_rec(const DirectedPath& path, const EdgeId& prefix, std::vector<EdgeId>& out) {
  if (path.segments.empty()) {
    out.push_back(prefix);
    return;
  }
  for (int j = 0; j < static_cast<int>(path.segments.size()); ++j)
    edges_rec(path.segments[j], prefix.child(path.branch, j + 1), out);
}

inline void vertices_rec(const DirectedPath& path, const EdgeId& owner, std::vector<VertexId>& out) {
  if (path.segments.empty()) return;
  int s = static_cast<int>(path.segments.size());
  for (int j = 0; j < s; ++j) {
    vertices_rec(path.segments[j], owner.child(path.branch, j + 1), out);
    if (j + 1 < s) out.push_back(VertexId{owner, path.branch, j + 1});
  }
}

}  // namespace detail

// The s^n level-n edges crossed by the path, in traversal order.
inline std::vector<EdgeId> edges_of_path(const DirectedPath& path) {
  std::vector<EdgeId> out;
  detail::edges_rec(path, EdgeId{}, out);
  return out;
}

// The s^n - 1 internal vertices met by the path, in traversal order.
inline std::vector<VertexId> vertices_of_path(const DirectedPath& path) {
  std::vector<VertexId> out;
  detail::vertices_rec(path, EdgeId{}, out);
  return out;
}

// ---------------------------------------------------------------------------
// Overlap statistics of two independent uniform paths.
//
// Independence factorizes over embedded copies: the paths meet only inside
// the sub-copies both traverse, which happens iff they pick the same branch
// at the current level (probability 1/b), and then every one of the s
// sub-copies hosts an independent lower-level pair.  Hence
//     E[shared edges]_n    = (s/b)^n
//     E[shared vertices]_n = (s/b) E[shared vertices]_{n-1} + (s-1)/b.
// ---------------------------------------------------------------------------

inline double expected_shared_edges(const DiamondParams& p, int n) {
  if (n < 0) throw std::invalid_argument("expected_shared_edges: n < 0");
  if (p.b == p.s) return 1.0;
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= static_cast<double>(p.s) / p.b;
  return r;
}

inline double expected_shared_vertices(const DiamondParams& p, int n) {
  if (n < 0) throw std::invalid_argument("expected_shared_vertices: n < 0");
  double v = 0.0;
  for (int k = 0; k < n; ++k) v = (static_cast<double>(p.s) / p.b) * v + static_cast<double>(p.s - 1) / p.b;
  return v;
}

// Enumeration versions, exact for small n; cross-checks for the recursions.
inline double expected_shared_edges_enum(const DiamondParams& p, int n, std::uint64_t cap = 1000000) {
  auto paths = enumerate_paths(p, n, cap);
  if (checked_mul_u64(paths.size(), paths.size()) > cap)
    throw std::length_error("expected_shared_edges_enum: pair count exceeds cap");
  std::vector<std::vector<std::uint64_t>> idx(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (const auto& e : edges_of_path(paths[i])) idx[i].push_back(e.index(p));
  std::uint64_t shared = 0;
  for (const auto& a : idx)
    for (const auto& b : idx)
      for (auto ea : a)
        for (auto eb : b)
          if (ea == eb) ++shared;
  return static_cast<double>(shared) / (static_cast<double>(paths.size()) * static_cast<double>(paths.size()));
}

inline double expected_shared_vertices_enum(const DiamondParams& p, int n, std::uint64_t cap = 1000000) {
  auto paths = enumerate_paths(p, n, cap);
  if (checked_mul_u64(paths.size(), paths.size()) > cap)
    throw std::length_error("expected_shared_vertices_enum: pair count exceeds cap");
  std::vector<std::vector<VertexId>> verts(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    verts[i] = vertices_of_path(paths[i]);
    std::sort(verts[i].begin(), verts[i].end());
  }
  std::uint64_t shared = 0;
  for (const auto& a : verts)
    for (const auto& b : verts)
      for (const auto& va : a) shared += std::binary_search(b.begin(), b.end(), va) ? 1 : 0;
  return static_cast<double>(shared) / (static_cast<double>(paths.size()) * static_cast<double>(paths.size()));
}

}  // namespace diamond
