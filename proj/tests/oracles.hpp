#pragma once

// Independent checks shared by the unit tests and the acceptance suite.

#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tkit/decomposition.hpp"
#include "tkit/recursion.hpp"

namespace oracle {

using namespace tkit;

// Brute-force orbifold weights: lcm of degree products along backward paths.
inline std::vector<long long> brute_weights(const Portrait &p)
{
  const int n = p.source.size();
  std::vector<long long> out;
  const long long huge = 1LL << 40, infinite = 1LL << 20;
  for (int x = 1; x <= n; ++x) {
    long long acc = 1;
    // Paths are explored by depth with the running degree product.
    std::vector<std::pair<int, long long>> frontier{{x, 1}};
    for (int depth = 0; depth < 40 && !frontier.empty() && acc < infinite; ++depth) {
      std::vector<std::pair<int, long long>> next;
      for (auto [y, prod] : frontier) {
        for (int z = 1; z <= n; ++z)
          if (p.entry(z).image == y) {
            long long q = prod * p.entry(z).degree;
            acc = std::lcm(acc, q);
            next.push_back({z, std::min(q, huge)});
          }
        for (const auto &u : p.unmarked_critical)
          if (u.image == y)
            acc = std::lcm(acc, prod * u.degree);
      }
      frontier = std::move(next);
    }
    out.push_back(acc >= infinite ? 0 : acc);
  }
  return out;
}


// Portrait keyed by labels, after renaming.
struct LabelPortrait
{
  std::map<std::string, std::pair<std::string, int>> entries;
  std::multiset<std::pair<std::string, int>> unmarked;
  std::map<std::string, Weight> weights;
};

inline LabelPortrait label_portrait(const BranchedCoverRecursion &r, const std::map<std::string, std::string> &rename = {})
{
  auto name = [&](const std::string &l) {
    auto it = rename.find(l);
    return it == rename.end() ? l : it->second;
  };
  Portrait p = portrait(r);
  OrbifoldSignature sig = orbifold_signature(p);
  LabelPortrait out;
  for (int k = 1; k <= r.source.size(); ++k) {
    const auto &e = p.entry(k);
    out.entries[name(r.source.label(k))] = {name(r.target.label(e.image)), e.degree};
    out.weights[name(r.source.label(k))] = sig.at(r.source.label(k));
  }
  for (const auto &u : p.unmarked_critical)
    out.unmarked.insert({name(r.target.label(u.image)), u.degree});
  return out;
}

inline bool operator==(const LabelPortrait &a, const LabelPortrait &b)
{ return a.entries == b.entries && a.unmarked == b.unmarked && a.weights == b.weights; }

inline std::map<std::string, std::string> cap_renames(const CombineResult &c, const std::string &piece)
{
  std::map<std::string, std::string> out;
  for (const auto &[cap, label] : c.cap_labels)
    if (cap.node == piece)
      out[cap.puncture] = label;
  return out;
}


} // namespace oracle
