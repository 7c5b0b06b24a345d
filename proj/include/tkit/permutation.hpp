#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

namespace tkit {

/// Zero-based image array: perm[s] is the image of sheet s.
using Perm = std::vector<int>;

namespace perm {

inline Perm identity(int d)
{
  Perm p(static_cast<std::size_t>(d));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

inline bool is_permutation(const Perm &p)
{
  std::vector<char> hit(p.size(), 0);
  for (int v : p) {
    if (v < 0 || static_cast<std::size_t>(v) >= p.size() || hit[static_cast<std::size_t>(v)])
      return false;
    hit[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

inline bool is_identity(const Perm &p)
{
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != static_cast<int>(i))
      return false;
  return true;
}

/// Apply a first, then b.
inline Perm then(const Perm &a, const Perm &b)
{
  Perm out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = b[static_cast<std::size_t>(a[i])];
  return out;
}

inline Perm inverse(const Perm &p)
{
  Perm out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return out;
}

/// Cycles, each starting at its least element, ordered by that element.
inline std::vector<std::vector<int>> cycles(const Perm &p)
{
  std::vector<std::vector<int>> out;
  std::vector<char> seen(p.size(), 0);
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (seen[s])
      continue;
    std::vector<int> c;
    int t = static_cast<int>(s);
    while (!seen[static_cast<std::size_t>(t)]) {
      seen[static_cast<std::size_t>(t)] = 1;
      c.push_back(t);
      t = p[static_cast<std::size_t>(t)];
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// Orbits of the group generated by perms on {0..d-1}.
inline std::vector<std::vector<int>> orbits(int d, const std::vector<Perm> &perms)
{
  std::vector<int> comp(static_cast<std::size_t>(d), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < d; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0)
      continue;
    int id = static_cast<int>(out.size());
    std::vector<int> orbit{s}, stack{s};
    comp[static_cast<std::size_t>(s)] = id;
    while (!stack.empty()) {
      int t = stack.back();
      stack.pop_back();
      for (const Perm &p : perms) {
        int u = p[static_cast<std::size_t>(t)];
        if (comp[static_cast<std::size_t>(u)] < 0) {
          comp[static_cast<std::size_t>(u)] = id;
          orbit.push_back(u);
          stack.push_back(u);
        }
      }
    }
    std::sort(orbit.begin(), orbit.end());
    out.push_back(std::move(orbit));
  }
  return out;
}

} // namespace perm
} // namespace tkit
