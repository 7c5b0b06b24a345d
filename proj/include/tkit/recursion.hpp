#pragma once

#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "permutation.hpp"
#include "rational.hpp"
#include "sphere.hpp"
#include "word.hpp"

namespace tkit {

/// Sheet permutation and per-sheet lift words of one target generator.
struct GeneratorRecursion
{
  Perm perm;
  std::vector<Word> lifts; // source normal forms, indexed by starting sheet
};

/// Wreath-recursion encoding of a degree-d branched cover source -> target.
///
/// Reading a target word left to right, the letter x_i moves sheet s to
/// perm_i[s] and contributes lifts_i[s]; x_i^{-1} moves s to perm_i^{-1}[s]
/// and contributes the inverse of the lift at perm_i^{-1}[s].
struct BranchedCoverRecursion
{
  int degree = 1;
  MarkedSphere source;
  MarkedSphere target;
  std::vector<GeneratorRecursion> generators; // one per target puncture

  bool is_self_map() const { return source == target; }
};

/// Result of lifting one target word from every sheet.
struct WordAction
{
  Perm perm;
  std::vector<Word> lifts;
};

inline WordAction act(const BranchedCoverRecursion &r, const Word &w)
{
  const int d = r.degree;
  const int n = r.target.size();
  std::vector<Perm> inverses(static_cast<std::size_t>(n));
  WordAction out{perm::identity(d), std::vector<Word>(static_cast<std::size_t>(d))};
  for (int s0 = 0; s0 < d; ++s0) {
    int s = s0;
    Word acc;
    for (int l : w) {
      int g = l > 0 ? l : -l;
      if (g > n)
        throw Error(ErrorCode::SphereMismatch, "letter x" + std::to_string(g) + " outside the target sphere");
      const GeneratorRecursion &gr = r.generators[static_cast<std::size_t>(g - 1)];
      if (l > 0) {
        word::append(acc, gr.lifts[static_cast<std::size_t>(s)]);
        s = gr.perm[static_cast<std::size_t>(s)];
      } else {
        Perm &inv = inverses[static_cast<std::size_t>(g - 1)];
        if (inv.empty())
          inv = perm::inverse(gr.perm);
        int t = inv[static_cast<std::size_t>(s)];
        word::append(acc, word::inverse(gr.lifts[static_cast<std::size_t>(t)]));
        s = t;
      }
    }
    out.perm[static_cast<std::size_t>(s0)] = s;
    out.lifts[static_cast<std::size_t>(s0)] = r.source.normal_form(acc);
  }
  return out;
}

/// Product of the lifts along a cycle of a word action, starting at its first sheet.
inline Word cycle_lift(const WordAction &a, const std::vector<int> &cycle)
{
  Word acc;
  for (int s : cycle)
    word::append(acc, a.lifts[static_cast<std::size_t>(s)]);
  return acc;
}

/// Looks up which peripheral generator (if any) a source word is conjugate to.
class PeripheralIndex
{
public:
  explicit PeripheralIndex(const MarkedSphere &s)
  {
    for (int j = 1; j <= s.size(); ++j) {
      Word g = s.generator(j);
      _positive.emplace(word::oriented_key(g), j);
      _negative.emplace(word::oriented_key(word::inverse(g)), j);
    }
  }

  /// +j if conjugate to x_j, -j if conjugate to x_j^{-1}, 0 otherwise.
  int lookup(const Word &w) const
  {
    Word key = word::oriented_key(w);
    if (auto it = _positive.find(key); it != _positive.end())
      return it->second;
    if (auto it = _negative.find(key); it != _negative.end())
      return -it->second;
    return 0;
  }

private:
  std::map<Word, int> _positive;
  std::map<Word, int> _negative;
};

/// One cycle of one generator permutation and what its lift encircles.
struct CycleMark
{
  int generator = 0; // target index, one-based
  std::vector<int> cycle;
  Word lift;
  int marked = 0; // source index if the lift is conjugate to x_j, else 0
  bool trivial = false;
  bool inverted = false; // lift conjugate to x_j^{-1}
};

inline std::vector<CycleMark> cycle_marks(const BranchedCoverRecursion &r)
{
  PeripheralIndex index(r.source);
  std::vector<CycleMark> out;
  for (int i = 1; i <= r.target.size(); ++i) {
    const GeneratorRecursion &gr = r.generators[static_cast<std::size_t>(i - 1)];
    WordAction a{gr.perm, gr.lifts};
    for (auto &c : perm::cycles(gr.perm)) {
      CycleMark m;
      m.generator = i;
      m.lift = r.source.normal_form(cycle_lift(a, c));
      m.cycle = std::move(c);
      if (word::cyclic_reduce(m.lift).empty()) {
        m.trivial = true;
      } else {
        int hit = index.lookup(m.lift);
        if (hit > 0)
          m.marked = hit;
        else if (hit < 0) {
          m.marked = -hit;
          m.inverted = true;
        }
      }
      out.push_back(std::move(m));
    }
  }
  return out;
}

struct Check
{
  std::string name;
  bool pass = true;
  std::string witness;
};

struct ValidationReport
{
  std::vector<Check> checks;

  bool ok() const
  {
    for (const Check &c : checks)
      if (!c.pass)
        return false;
    return true;
  }

  const Check *find(const std::string &name) const
  {
    for (const Check &c : checks)
      if (c.name == name)
        return &c;
    return nullptr;
  }
};

namespace detail {

inline std::string format_orbits(const std::vector<std::vector<int>> &orbits)
{
  std::ostringstream os;
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    os << (i ? "," : "") << "{";
    for (std::size_t j = 0; j < orbits[i].size(); ++j)
      os << (j ? " " : "") << orbits[i][j] + 1;
    os << "}";
  }
  return os.str();
}

} // namespace detail

/// Checks every recursion invariant; never throws on malformed content.
inline ValidationReport validate(const BranchedCoverRecursion &r)
{
  ValidationReport report;
  const int d = r.degree;
  const int n = r.target.size();

  Check structure{"structure", true, ""};
  if (d < 1)
    structure = {"structure", false, "degree must be positive"};
  else if (static_cast<int>(r.generators.size()) != n)
    structure = {"structure", false, "expected one recursion entry per target puncture"};
  else {
    for (int i = 0; i < n && structure.pass; ++i) {
      const auto &g = r.generators[static_cast<std::size_t>(i)];
      if (static_cast<int>(g.perm.size()) != d || static_cast<int>(g.lifts.size()) != d)
        structure = {"structure", false, "generator x" + std::to_string(i + 1) + " has wrong arity"};
      for (const Word &w : g.lifts)
        for (int l : w)
          if (std::abs(l) >= r.source.size() + 1)
            structure = {"structure", false, "lift letter outside the source sphere"};
    }
  }
  report.checks.push_back(structure);
  if (!structure.pass)
    return report;

  Check perms{"permutations", true, ""};
  for (int i = 0; i < n; ++i)
    if (!perm::is_permutation(r.generators[static_cast<std::size_t>(i)].perm)) {
      perms = {"permutations", false, "x" + std::to_string(i + 1) + " is not a permutation"};
      break;
    }
  report.checks.push_back(perms);
  if (!perms.pass)
    return report;

  std::vector<Perm> all;
  for (const auto &g : r.generators)
    all.push_back(g.perm);
  auto orbits = perm::orbits(d, all);
  report.checks.push_back({"transitivity", orbits.size() == 1,
                           orbits.size() == 1 ? "" : detail::format_orbits(orbits)});

  Word relator(static_cast<std::size_t>(n));
  std::iota(relator.begin(), relator.end(), 1);
  WordAction rel = act(r, relator);
  Check relcheck{"relator", true, ""};
  for (int s = 0; s < d; ++s) {
    if (rel.perm[static_cast<std::size_t>(s)] != s) {
      relcheck = {"relator", false, "relator moves sheet " + std::to_string(s + 1)};
      break;
    }
    if (!rel.lifts[static_cast<std::size_t>(s)].empty()) {
      relcheck = {"relator", false, "relator lifts to " + word::format(rel.lifts[static_cast<std::size_t>(s)])
                                        + " on sheet " + std::to_string(s + 1)};
      break;
    }
  }
  report.checks.push_back(relcheck);

  long rh = 0;
  for (const auto &g : r.generators)
    for (const auto &c : perm::cycles(g.perm))
      rh += static_cast<long>(c.size()) - 1;
  report.checks.push_back({"riemann_hurwitz", rh == 2L * d - 2,
                           rh == 2L * d - 2 ? "" : "sum " + std::to_string(rh) + " != " + std::to_string(2 * d - 2)});

  Check marks{"markings", true, ""};
  std::vector<int> hits(static_cast<std::size_t>(r.source.size()), 0);
  for (const CycleMark &m : cycle_marks(r)) {
    if (m.inverted) {
      marks = {"markings", false, "cycle of x" + std::to_string(m.generator) + " lifts to an inverse peripheral loop "
                                      + word::format(m.lift)};
      break;
    }
    if (!m.trivial && m.marked == 0) {
      marks = {"markings", false, "cycle of x" + std::to_string(m.generator) + " lifts to non-peripheral "
                                      + word::format(m.lift)};
      break;
    }
    if (m.marked)
      ++hits[static_cast<std::size_t>(m.marked - 1)];
  }
  if (marks.pass)
    for (int j = 0; j < r.source.size(); ++j)
      if (hits[static_cast<std::size_t>(j)] != 1) {
        marks = {"markings", false, "source puncture " + r.source.label(j + 1) + " designated "
                                        + std::to_string(hits[static_cast<std::size_t>(j)]) + " times"};
        break;
      }
  report.checks.push_back(marks);
  return report;
}

inline void require_valid(const BranchedCoverRecursion &r, const char *context)
{
  ValidationReport rep = validate(r);
  for (const Check &c : rep.checks)
    if (!c.pass)
      throw Error(ErrorCode::Domain, std::string(context) + ": invalid recursion (" + c.name + ": " + c.witness + ")");
}

struct PortraitEntry
{
  int image = 0; // target index, one-based
  int degree = 1;

  bool operator==(const PortraitEntry &) const = default;
};

struct UnmarkedCritical
{
  int image = 0;
  int degree = 2;

  bool operator==(const UnmarkedCritical &) const = default;
};

/// Restriction of the cover to the marked points, plus unmarked critical points.
struct Portrait
{
  int degree = 1;
  MarkedSphere source;
  MarkedSphere target;
  std::vector<PortraitEntry> entries; // indexed by source puncture
  std::vector<UnmarkedCritical> unmarked_critical;

  const PortraitEntry &entry(int source_index) const
  { return entries.at(static_cast<std::size_t>(source_index - 1)); }
};

inline Portrait portrait(const BranchedCoverRecursion &r)
{
  Portrait p;
  p.degree = r.degree;
  p.source = r.source;
  p.target = r.target;
  p.entries.assign(static_cast<std::size_t>(r.source.size()), PortraitEntry{0, 0});
  PeripheralIndex index(r.source);
  for (int j = 1; j <= r.source.size(); ++j)
    for (int k = j + 1; k <= r.source.size(); ++k)
      if (word::conjugate(r.source.generator(j), r.source.generator(k)))
        throw Error(ErrorCode::AmbiguousMarking, "source generators are conjugate");
  for (const CycleMark &m : cycle_marks(r)) {
    int len = static_cast<int>(m.cycle.size());
    if (m.inverted)
      throw Error(ErrorCode::Convention, "lift word conjugate to an inverse generator: " + word::format(m.lift));
    if (m.marked) {
      PortraitEntry &e = p.entries[static_cast<std::size_t>(m.marked - 1)];
      if (e.image != 0)
        throw Error(ErrorCode::AmbiguousMarking, "puncture " + r.source.label(m.marked) + " designated twice");
      e = {m.generator, len};
    } else if (m.trivial) {
      if (len > 1)
        p.unmarked_critical.push_back({m.generator, len});
    } else {
      throw Error(ErrorCode::Domain, "non-peripheral cycle lift " + word::format(m.lift));
    }
  }
  for (int j = 1; j <= r.source.size(); ++j)
    if (p.entry(j).image == 0)
      throw Error(ErrorCode::Domain, "source puncture " + r.source.label(j) + " is never designated");
  return p;
}

/// Weight N(x) of an orbifold point; infinite for critical cycles.
struct Weight
{
  bool infinite = false;
  long long value = 1;

  bool operator==(const Weight &) const = default;
};

struct OrbifoldSignature
{
  std::vector<std::string> labels;
  std::vector<Weight> values;
  Rational chi;

  Weight at(const std::string &label) const
  {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label)
        return values[i];
    throw Error(ErrorCode::Domain, "no orbifold point " + label);
  }
};

inline OrbifoldSignature orbifold_signature(const Portrait &p)
{
  if (p.source != p.target)
    throw Error(ErrorCode::NonSelfMap, "orbifold needs a self-map");
  const int n = p.source.size();
  auto image = [&](int x) { return p.entry(x).image; };

  std::vector<Weight> N(static_cast<std::size_t>(n));
  int max_degree = 1;
  for (const auto &e : p.entries)
    max_degree = std::max(max_degree, e.degree);
  for (const auto &u : p.unmarked_critical)
    max_degree = std::max(max_degree, u.degree);

  for (int x = 1; x <= n; ++x) {
    int y = image(x);
    bool periodic = false;
    for (int k = 0; k < n; ++k, y = image(y))
      if (y == x) {
        periodic = true;
        break;
      }
    if (!periodic)
      continue;
    bool critical = false;
    y = x;
    do {
      critical = critical || p.entry(y).degree > 1;
      y = image(y);
    } while (y != x);
    if (critical)
      N[static_cast<std::size_t>(x - 1)].infinite = true;
  }

  // Monotone lcm update; the lattice stabilises after at most |P| rounds.
  const int cap = n * std::max(max_degree, 2) + 1;
  bool changed = true;
  int rounds = 0;
  while (changed) {
    if (++rounds > cap)
      throw Error(ErrorCode::Internal, "orbifold weights failed to stabilise");
    changed = false;
    for (int x = 1; x <= n; ++x) {
      Weight &w = N[static_cast<std::size_t>(x - 1)];
      if (w.infinite)
        continue;
      long long acc = 1;
      for (int y = 1; y <= n; ++y) {
        if (image(y) != x)
          continue;
        const Weight &wy = N[static_cast<std::size_t>(y - 1)];
        if (wy.infinite)
          throw Error(ErrorCode::Internal, "infinite weight outside a critical cycle");
        acc = std::lcm(acc, wy.value * p.entry(y).degree);
      }
      for (const auto &u : p.unmarked_critical)
        if (u.image == x)
          acc = std::lcm(acc, static_cast<long long>(u.degree));
      long long next = std::lcm(w.value, acc);
      if (next != w.value) {
        w.value = next;
        changed = true;
      }
    }
  }

  OrbifoldSignature sig;
  sig.labels = p.source.labels();
  sig.values = N;
  sig.chi = 2;
  for (const Weight &w : N)
    sig.chi -= w.infinite ? Rational(1) : Rational(1) - Rational(1, w.value);
  return sig;
}

inline bool is_hyperbolic(const OrbifoldSignature &sig) { return sig.chi < 0; }

/// f after g: the cover g.source -> f.target of degree d_f * d_g. Sheet
/// (s, t) with f-sheet s and g-sheet t gets index s * d_g + t.
inline BranchedCoverRecursion compose(const BranchedCoverRecursion &f, const BranchedCoverRecursion &g)
{
  if (g.target != f.source)
    throw Error(ErrorCode::ChainMismatch, "target of the inner map differs from the source of the outer map");
  BranchedCoverRecursion out;
  const int df = f.degree, dg = g.degree;
  out.degree = df * dg;
  out.source = g.source;
  out.target = f.target;
  for (const auto &fg : f.generators) {
    GeneratorRecursion gr{Perm(static_cast<std::size_t>(out.degree)),
                          std::vector<Word>(static_cast<std::size_t>(out.degree))};
    for (int s = 0; s < df; ++s) {
      WordAction a = act(g, fg.lifts[static_cast<std::size_t>(s)]);
      int fs = fg.perm[static_cast<std::size_t>(s)];
      for (int t = 0; t < dg; ++t) {
        auto idx = static_cast<std::size_t>(s * dg + t);
        gr.perm[idx] = fs * dg + a.perm[static_cast<std::size_t>(t)];
        gr.lifts[idx] = a.lifts[static_cast<std::size_t>(t)];
      }
    }
    out.generators.push_back(std::move(gr));
  }
  return out;
}

/// Renames sheets: old sheet s becomes relabel[s].
inline BranchedCoverRecursion relabel_sheets(const BranchedCoverRecursion &r, const Perm &relabel)
{
  BranchedCoverRecursion out = r;
  for (std::size_t i = 0; i < r.generators.size(); ++i) {
    const auto &g = r.generators[i];
    auto &o = out.generators[i];
    for (int s = 0; s < r.degree; ++s) {
      auto ns = static_cast<std::size_t>(relabel[static_cast<std::size_t>(s)]);
      o.perm[ns] = relabel[static_cast<std::size_t>(g.perm[static_cast<std::size_t>(s)])];
      o.lifts[ns] = g.lifts[static_cast<std::size_t>(s)];
    }
  }
  return out;
}

/// Changes the connecting paths: lift at s becomes t_s L t_{perm(s)}^{-1}.
inline BranchedCoverRecursion change_basis(const BranchedCoverRecursion &r, const std::vector<Word> &t)
{
  BranchedCoverRecursion out = r;
  for (auto &g : out.generators)
    for (int s = 0; s < r.degree; ++s) {
      auto us = static_cast<std::size_t>(s);
      Word w = word::concat(t[us], g.lifts[us]);
      w = word::concat(w, word::inverse(t[static_cast<std::size_t>(g.perm[us])]));
      g.lifts[us] = r.source.normal_form(w);
    }
  return out;
}

/// Fills in a source puncture: x_q is sent to the identity.
inline BranchedCoverRecursion forget_source_puncture(const BranchedCoverRecursion &r, int q)
{
  std::vector<std::string> labels = r.source.labels();
  labels.erase(labels.begin() + (q - 1));
  MarkedSphere smaller(labels);
  BranchedCoverRecursion out = r;
  out.source = smaller;
  for (auto &g : out.generators)
    for (Word &w : g.lifts) {
      Word mapped;
      for (int l : w) {
        int a = std::abs(l);
        if (a == q)
          continue;
        int na = a > q ? a - 1 : a;
        mapped.push_back(l > 0 ? na : -na);
      }
      w = smaller.normal_form(mapped);
    }
  return out;
}

/// Replaces each letter x_k of w by images[k-1] (and X_k by its inverse).
inline Word substitute(const Word &w, const std::vector<Word> &images)
{
  Word out;
  for (int l : w) {
    const Word &img = images[static_cast<std::size_t>(std::abs(l) - 1)];
    word::append(out, l > 0 ? img : word::inverse(img));
  }
  return out;
}

namespace detail {

inline MarkedSphere swap_labels(const MarkedSphere &s, int i)
{
  std::vector<std::string> labels = s.labels();
  std::swap(labels[static_cast<std::size_t>(i - 1)], labels[static_cast<std::size_t>(i)]);
  return MarkedSphere(labels);
}

} // namespace detail

/// Hurwitz move on the target: punctures i and i+1 trade places, with new
/// generators y_i = x_i x_{i+1} X_i and y_{i+1} = x_i.
inline BranchedCoverRecursion hurwitz_target(const BranchedCoverRecursion &r, int i)
{
  BranchedCoverRecursion out = r;
  out.target = detail::swap_labels(r.target, i);
  WordAction a = act(r, {i, i + 1, -i});
  WordAction b = act(r, {i});
  out.generators[static_cast<std::size_t>(i - 1)] = {a.perm, a.lifts};
  out.generators[static_cast<std::size_t>(i)] = {b.perm, b.lifts};
  for (auto &g : out.generators)
    for (auto &w : g.lifts)
      w = r.source.normal_form(w);
  return out;
}

/// The same move on the source: x_i = y_{i+1}, x_{i+1} = Y_{i+1} y_i y_{i+1}.
inline BranchedCoverRecursion hurwitz_source(const BranchedCoverRecursion &r, int i)
{
  BranchedCoverRecursion out = r;
  out.source = detail::swap_labels(r.source, i);
  std::vector<Word> images;
  for (int k = 1; k <= r.source.size(); ++k)
    images.push_back(Word{k});
  images[static_cast<std::size_t>(i - 1)] = Word{i + 1};
  images[static_cast<std::size_t>(i)] = Word{-(i + 1), i, i + 1};
  for (auto &g : out.generators)
    for (auto &w : g.lifts)
      w = out.source.normal_form(substitute(w, images));
  return out;
}

/// Lists the punctures in a new order: position k gets old puncture order[k]
/// (zero-based). Self-maps are moved on both sides, so portraits and orbifold
/// weights follow their labels.
inline BranchedCoverRecursion reorder_punctures(BranchedCoverRecursion r, std::vector<int> order)
{
  const int n = r.target.size();
  if (static_cast<int>(order.size()) != n || !perm::is_permutation(order))
    throw Error(ErrorCode::Domain, "puncture order must be a permutation");
  const bool self = r.is_self_map();
  // Bubble sort of positions by their requested rank.
  std::vector<int> rank(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    rank[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k;
  std::vector<int> current(static_cast<std::size_t>(n));
  std::iota(current.begin(), current.end(), 0);
  for (int pass = 0; pass < n; ++pass)
    for (int k = 0; k + 1 < n; ++k) {
      auto a = static_cast<std::size_t>(k);
      if (rank[static_cast<std::size_t>(current[a])] > rank[static_cast<std::size_t>(current[a + 1])]) {
        std::swap(current[a], current[a + 1]);
        r = hurwitz_target(r, k + 1);
        if (self)
          r = hurwitz_source(r, k + 1);
      }
    }
  return r;
}

/// Identity self-cover of a sphere.
inline BranchedCoverRecursion identity_recursion(const MarkedSphere &s)
{
  BranchedCoverRecursion r;
  r.degree = 1;
  r.source = s;
  r.target = s;
  for (int i = 1; i <= s.size(); ++i)
    r.generators.push_back({Perm{0}, {s.generator(i)}});
  return r;
}

/// A cyclic chain S^0 -> S^1 -> ... -> S^{N-1} -> S^0 of covers.
struct SphereMapCycle
{
  std::vector<MarkedSphere> spheres;
  std::vector<BranchedCoverRecursion> maps; // maps[k]: spheres[k] -> spheres[k+1 mod N]

  int period() const { return static_cast<int>(maps.size()); }

  bool closes() const
  {
    if (maps.size() != spheres.size() || maps.empty())
      return false;
    for (std::size_t k = 0; k < maps.size(); ++k)
      if (maps[k].source != spheres[k] || maps[k].target != spheres[(k + 1) % spheres.size()])
        return false;
    return true;
  }

  int composite_degree() const
  {
    int d = 1;
    for (const auto &m : maps)
      d *= m.degree;
    return d;
  }

  /// First-return map of spheres[k] to itself.
  BranchedCoverRecursion first_return(int k = 0) const
  {
    if (!closes())
      throw Error(ErrorCode::ChainMismatch, "sphere cycle does not close");
    const int N = period();
    BranchedCoverRecursion acc = maps[static_cast<std::size_t>(k)];
    for (int step = 1; step < N; ++step)
      acc = compose(maps[static_cast<std::size_t>((k + step) % N)], acc);
    return acc;
  }
};

} // namespace tkit
