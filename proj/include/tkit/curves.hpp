#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "rational.hpp"
#include "recursion.hpp"
#include "sphere.hpp"
#include "word.hpp"

namespace tkit {

enum class Simplicity { DeclaredSimple, LiftOfSimple, Unknown };

inline const char *to_string(Simplicity s)
{
  switch (s) {
  case Simplicity::DeclaredSimple: return "DeclaredSimple";
  case Simplicity::LiftOfSimple: return "LiftOfSimple";
  case Simplicity::Unknown: return "Unknown";
  }
  return "Unknown";
}

/// Free homotopy class of an unoriented closed curve on a marked sphere.
/// Two classes are equal iff their keys are equal.
struct CurveClass
{
  Word representative; // cyclically reduced
  Word key;            // least rotation of the word or its inverse
  Simplicity tag = Simplicity::Unknown;

  bool is_identity() const { return key.empty(); }
  std::string name() const { return word::format(representative); }
  bool operator==(const CurveClass &o) const { return key == o.key; }
};

inline CurveClass normalize(const MarkedSphere &s, const Word &tokens, Simplicity tag = Simplicity::Unknown)
{
  Word nf = s.normal_form(tokens);
  return {word::cyclic_reduce(nf), word::unoriented_key(nf), tag};
}

inline CurveClass curve(const MarkedSphere &s, std::string_view text, Simplicity tag = Simplicity::DeclaredSimple)
{ return normalize(s, word::parse(text), tag); }

struct Classification
{
  enum Kind { Trivial, Peripheral, Essential } kind = Trivial;
  int puncture = 0; // one-based, for Peripheral

  bool operator==(const Classification &) const = default;
};

inline const char *to_string(Classification::Kind k)
{
  switch (k) {
  case Classification::Trivial: return "Trivial";
  case Classification::Peripheral: return "Peripheral";
  case Classification::Essential: return "Essential";
  }
  return "Trivial";
}

inline Classification classify(const MarkedSphere &s, const CurveClass &c)
{
  if (c.is_identity())
    return {Classification::Trivial, 0};
  for (int j = 1; j <= s.size(); ++j)
    if (word::unoriented_key(s.generator(j)) == c.key)
      return {Classification::Peripheral, j};
  return {Classification::Essential, 0};
}

struct Certificate
{
  enum Kind { CertifiedByCoLift, AssertedByUser, Unverified } kind = Unverified;
  int iterate = 0; // for CertifiedByCoLift

  bool operator==(const Certificate &) const = default;
};

inline const char *to_string(Certificate::Kind k)
{
  switch (k) {
  case Certificate::CertifiedByCoLift: return "CertifiedByCoLift";
  case Certificate::AssertedByUser: return "AssertedByUser";
  case Certificate::Unverified: return "Unverified";
  }
  return "Unverified";
}

/// Set of distinct essential classes, ordered by key.
struct Multicurve
{
  std::vector<CurveClass> classes;
  Certificate certificate;

  static Multicurve from(std::vector<CurveClass> cs, Certificate cert = {})
  {
    Multicurve m;
    m.certificate = cert;
    for (auto &c : cs)
      m.insert(std::move(c));
    return m;
  }

  bool insert(CurveClass c)
  {
    auto it = std::lower_bound(classes.begin(), classes.end(), c,
                               [](const CurveClass &a, const CurveClass &b) { return word::lex_less(a.key, b.key); });
    if (it != classes.end() && it->key == c.key)
      return false;
    classes.insert(it, std::move(c));
    return true;
  }

  std::optional<std::size_t> find(const Word &key) const
  {
    auto it = std::lower_bound(classes.begin(), classes.end(), key,
                               [](const CurveClass &a, const Word &k) { return word::lex_less(a.key, k); });
    if (it != classes.end() && it->key == key)
      return static_cast<std::size_t>(it - classes.begin());
    return std::nullopt;
  }

  bool contains(const Word &key) const { return find(key).has_value(); }
  std::size_t size() const { return classes.size(); }
  bool empty() const { return classes.empty(); }
};

/// Rejects identity, peripheral and repeated classes.
inline void require_multicurve(const MarkedSphere &s, const Multicurve &m)
{
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    if (classify(s, m.classes[i]).kind != Classification::Essential)
      throw Error(ErrorCode::Domain, "multicurve class " + m.classes[i].name() + " is not essential");
    if (i && m.classes[i - 1].key == m.classes[i].key)
      throw Error(ErrorCode::Domain, "repeated multicurve class " + m.classes[i].name());
  }
}

struct PullbackComponent
{
  CurveClass cls;
  int degree = 1;
  Classification classification;
};

struct PullbackResult
{
  std::vector<PullbackComponent> components;

  int total_degree() const
  {
    int d = 0;
    for (const auto &c : components)
      d += c.degree;
    return d;
  }
};

/// Components of the preimage of c: one per cycle of the action of its word.
inline PullbackResult pullback_class(const BranchedCoverRecursion &r, const CurveClass &c)
{
  for (int l : c.representative)
    if (std::abs(l) >= r.target.size())
      throw Error(ErrorCode::SphereMismatch, "curve " + c.name() + " does not live on the target sphere");
  WordAction a = act(r, c.representative);
  Simplicity tag = c.tag == Simplicity::Unknown ? Simplicity::Unknown : Simplicity::LiftOfSimple;
  PullbackResult out;
  for (const auto &cyc : perm::cycles(a.perm)) {
    PullbackComponent comp;
    comp.cls = normalize(r.source, cycle_lift(a, cyc), tag);
    comp.degree = static_cast<int>(cyc.size());
    comp.classification = classify(r.source, comp.cls);
    out.components.push_back(std::move(comp));
  }
  return out;
}

struct StabilityReport
{
  bool stable = true;
  std::optional<CurveClass> witness;
  std::optional<CurveClass> witness_parent;
};

inline StabilityReport is_stable(const BranchedCoverRecursion &r, const Multicurve &gamma)
{
  if (!r.is_self_map())
    throw Error(ErrorCode::NonSelfMap, "stability needs a self-map");
  for (const auto &g : gamma.classes)
    for (const auto &comp : pullback_class(r, g).components)
      if (comp.classification.kind == Classification::Essential && !gamma.contains(comp.cls.key))
        return {false, comp.cls, g};
  return {};
}

using RationalMatrix = std::vector<std::vector<Rational>>;

struct Enclosure
{
  Rational lo;
  Rational hi;

  Rational width() const { return hi - lo; }
  bool contains(const Rational &x) const { return lo <= x && x <= hi; }
};

struct TransitionMatrix
{
  Multicurve index;
  RationalMatrix entries; // entries[row gamma][column delta]
  std::optional<Enclosure> enclosure;
};

/// M[g][d] = sum of 1/deg over preimage components of d in the class of g.
inline TransitionMatrix transition_matrix(const BranchedCoverRecursion &r, const Multicurve &gamma)
{
  StabilityReport st = is_stable(r, gamma);
  if (!st.stable)
    throw Error(ErrorCode::NotStable, "component " + st.witness->name() + " of the preimage of "
                                          + st.witness_parent->name() + " is outside the multicurve");
  const std::size_t k = gamma.size();
  TransitionMatrix t;
  t.index = gamma;
  t.entries.assign(k, std::vector<Rational>(k, Rational(0)));
  for (std::size_t col = 0; col < k; ++col)
    for (const auto &comp : pullback_class(r, gamma.classes[col]).components)
      if (auto row = gamma.find(comp.cls.key))
        t.entries[*row][col] += Rational(1, comp.degree);
  return t;
}

} // namespace tkit
