#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace wl {

/// Union-find with path halving and union by size.
struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }

  std::size_t find(std::size_t i) {
    while (i != parent[i]) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }

  bool same(std::size_t a, std::size_t b) { return find(a) == find(b); }

  std::vector<std::size_t> parent;
  std::vector<std::size_t> size;
};

}  // namespace wl
