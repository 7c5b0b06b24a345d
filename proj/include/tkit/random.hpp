#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "recursion.hpp"

namespace tkit::random {

using Rng = std::mt19937_64;

inline int uniform(Rng &rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Freely reduced word of length <= max_length in the sphere's generators.
inline Word word(Rng &rng, const MarkedSphere &s, int max_length)
{
  Word w;
  int len = uniform(rng, 1, max_length);
  while (static_cast<int>(w.size()) < len) {
    int l = uniform(rng, 1, s.size()) * (uniform(rng, 0, 1) ? 1 : -1);
    if (!w.empty() && w.back() == -l)
      continue;
    w.push_back(l);
  }
  return w;
}

/// z^d on [0, 1, inf].
inline BranchedCoverRecursion power_map(int d)
{
  MarkedSphere s({"0", "1", "inf"});
  BranchedCoverRecursion r{d, s, s, {}};
  GeneratorRecursion x0{Perm(static_cast<std::size_t>(d)), std::vector<Word>(static_cast<std::size_t>(d))};
  for (int k = 0; k < d; ++k)
    x0.perm[static_cast<std::size_t>(k)] = (k + 1) % d;
  x0.lifts.back() = {1};
  GeneratorRecursion x1{perm::identity(d), std::vector<Word>(static_cast<std::size_t>(d))};
  x1.lifts[0] = {2};
  r.generators = {x0, x1, {}};
  WordAction inf = act(r, {-2, -1});
  r.generators[2] = {inf.perm, inf.lifts};
  for (auto &w : r.generators[2].lifts)
    w = s.normal_form(w);
  return r;
}

/// Degree-one map given by a braid of `moves` Hurwitz moves; the target
/// keeps the source's labels, so punctures may be permuted.
inline BranchedCoverRecursion homeomorphism(Rng &rng, const MarkedSphere &s, int moves)
{
  BranchedCoverRecursion h = identity_recursion(s);
  for (int k = 0; k < moves; ++k)
    h = hurwitz_target(h, uniform(rng, 1, s.size() - 1));
  h.target = s;
  return h;
}

/// Punctures of a self-map that can be filled in: not a critical value and
/// not the image of another marked point.
inline std::vector<int> forgettable(const BranchedCoverRecursion &r)
{
  std::vector<int> out;
  if (r.source.size() <= 3)
    return out;
  Portrait p = portrait(r);
  for (int q = 1; q <= r.target.size(); ++q) {
    if (!perm::is_identity(r.generators[static_cast<std::size_t>(q - 1)].perm))
      continue;
    bool hit = false;
    for (int k = 1; k <= r.source.size(); ++k)
      hit = hit || (k != q && p.entry(k).image == q);
    if (!hit)
      out.push_back(q);
  }
  return out;
}

/// Fills in puncture q on both sides of a self-map (q from `forgettable`).
inline BranchedCoverRecursion forget_puncture(const BranchedCoverRecursion &r, int q)
{
  BranchedCoverRecursion out = forget_source_puncture(r, q);
  out.generators.erase(out.generators.begin() + (q - 1));
  out.target = out.source;
  return out;
}

/// Same map, different presentation: conjugation by a braid, new sheet
/// names and new connecting paths.
inline BranchedCoverRecursion scramble(Rng &rng, BranchedCoverRecursion r, int moves, int path_length)
{
  for (int k = 0; k < moves; ++k) {
    int i = uniform(rng, 1, r.target.size() - 1);
    r = hurwitz_source(hurwitz_target(r, i), i);
  }
  Perm relabel = perm::identity(r.degree);
  std::shuffle(relabel.begin(), relabel.end(), rng);
  r = relabel_sheets(r, relabel);
  std::vector<Word> t(static_cast<std::size_t>(r.degree));
  for (auto &w : t)
    w = uniform(rng, 0, 1) ? word(rng, r.source, path_length) : Word{};
  return change_basis(r, t);
}

/// A random self-map built from a pool of valid ones: a twist by a random
/// homeomorphism, maybe a forgotten puncture, and a scrambled presentation.
inline BranchedCoverRecursion recursion(Rng &rng, const std::vector<BranchedCoverRecursion> &pool)
{
  BranchedCoverRecursion r = pool[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(pool.size()) - 1))];
  BranchedCoverRecursion h = homeomorphism(rng, r.source, uniform(rng, 0, 3));
  r = uniform(rng, 0, 1) ? compose(r, h) : compose(h, r);
  auto free = forgettable(r);
  if (!free.empty() && uniform(rng, 0, 2) == 0)
    r = forget_puncture(r, free[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(free.size()) - 1))]);
  return scramble(rng, r, uniform(rng, 0, 2), 3);
}

} // namespace tkit::random
