#pragma once

#include <string>
#include <vector>

#include "curves.hpp"
#include "recursion.hpp"
#include "spectral.hpp"

namespace tkit {

enum class Verdict { Obstruction, NotObstruction, Indeterminate };

inline const char *to_string(Verdict v)
{
  switch (v) {
  case Verdict::Obstruction: return "Obstruction";
  case Verdict::NotObstruction: return "NotObstruction";
  case Verdict::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

struct ObstructionVerdict
{
  Verdict verdict = Verdict::Indeterminate;
  Enclosure enclosure;
  bool decided_exactly = false; // settled by the characteristic polynomial
};

/// Tightest tolerance tried before falling back to the characteristic polynomial.
inline Rational tightest_tolerance() { return Rational(1, BigInt(1) << 128); }

inline ObstructionVerdict decide_obstruction(const RationalMatrix &m, const Rational &tol)
{
  ObstructionVerdict out;
  for (const Rational &t : {tol, tightest_tolerance()}) {
    out.enclosure = spectral::leading_eigenvalue(m, t);
    if (out.enclosure.lo >= 1) {
      out.verdict = Verdict::Obstruction;
      return out;
    }
    if (out.enclosure.hi < 1) {
      out.verdict = Verdict::NotObstruction;
      return out;
    }
  }
  if (m.size() <= 6) {
    out.decided_exactly = true;
    out.verdict = spectral::spectral_radius_at_least(m, Rational(1)) ? Verdict::Obstruction : Verdict::NotObstruction;
  }
  return out;
}

inline ObstructionVerdict is_obstruction(const BranchedCoverRecursion &r, const Multicurve &gamma,
                                         const Rational &tol = Rational(1, 1000000000))
{
  TransitionMatrix t = transition_matrix(r, gamma);
  return decide_obstruction(t.entries, tol);
}

struct Budgets
{
  int max_iter = 10;
  std::size_t max_classes = 64;
  Rational tol = Rational(1, 1000000000);
};

struct SaturateResult
{
  bool exceeded = false;
  Multicurve classes; // the invariant candidate, or the partial set when exceeded
  int iterations = 0;
  std::string reason; // set when exceeded
};

/// Essential classes among the components of the preimage of every class in `from`.
inline Multicurve essential_preimages(const BranchedCoverRecursion &r, const std::vector<CurveClass> &from)
{
  Multicurve out;
  for (const auto &c : from)
    for (auto &comp : pullback_class(r, c).components)
      if (comp.classification.kind == Classification::Essential)
        out.insert(std::move(comp.cls));
  return out;
}

/// Closes the essential preimages of the seed under pullback.
inline SaturateResult saturate(const BranchedCoverRecursion &r, const Multicurve &seed, int max_iter,
                               std::size_t max_classes)
{
  if (!r.is_self_map())
    throw Error(ErrorCode::NonSelfMap, "saturation needs a self-map");
  SaturateResult out;
  std::vector<CurveClass> frontier = seed.classes;
  bool closed = false;
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    std::vector<CurveClass> next;
    for (auto &c : essential_preimages(r, frontier).classes)
      if (out.classes.insert(c))
        next.push_back(std::move(c));
    if (out.classes.size() > max_classes) {
      out.exceeded = true;
      out.reason = "class budget " + std::to_string(max_classes) + " exceeded with "
                   + std::to_string(out.classes.size()) + " classes";
      return out;
    }
    if (next.empty()) {
      closed = true;
      break;
    }
    frontier = std::move(next);
  }
  if (!closed) {
    out.exceeded = true;
    out.reason = "iteration budget " + std::to_string(max_iter) + " exhausted";
    return out;
  }
  // Components of one iterated preimage of a multicurve are pairwise disjoint.
  std::vector<CurveClass> level = seed.classes;
  for (int n = 1; n <= max_iter; ++n) {
    Multicurve cn = essential_preimages(r, level);
    if (cn.size() == out.classes.size()) {
      bool same = true;
      for (std::size_t i = 0; i < cn.size() && same; ++i)
        same = cn.classes[i].key == out.classes.classes[i].key;
      if (same) {
        out.classes.certificate = {Certificate::CertifiedByCoLift, n};
        return out;
      }
    }
    level = cn.classes;
    if (level.empty())
      break;
  }
  out.classes.certificate = {Certificate::Unverified, 0};
  if (out.classes.empty())
    out.classes.certificate = {Certificate::CertifiedByCoLift, 1};
  return out;
}

/// Contiguous-block curves x_i x_{i+1} ... x_{i+k-1}, 2 <= k <= n-2, deduplicated.
inline std::vector<Multicurve> default_seeds(const MarkedSphere &s)
{
  Multicurve all;
  for (int k = 2; k <= s.size() - 2; ++k)
    for (int i = 1; i <= s.size(); ++i)
      all.insert(normalize(s, s.block(i, k), Simplicity::DeclaredSimple));
  std::vector<Multicurve> out;
  for (const auto &c : all.classes)
    out.push_back(Multicurve::from({c}, {Certificate::AssertedByUser, 0}));
  return out;
}

struct SeedReport
{
  std::string seed;
  std::string outcome; // exceeded | empty | not-obstruction | obstruction | indeterminate | out-of-scope
  std::size_t classes = 0;
  int iterations = 0;
  std::string detail;
};

struct SearchResult
{
  bool found = false;
  Multicurve gamma;
  TransitionMatrix matrix;
  ObstructionVerdict verdict;
  bool in_theorem_scope = true; // degree >= 2 and hyperbolic orbifold
  std::vector<SeedReport> report;
};

inline SearchResult search_obstruction(const BranchedCoverRecursion &r, const std::vector<Multicurve> &seeds,
                                       const Budgets &budgets)
{
  if (!r.is_self_map())
    throw Error(ErrorCode::NonSelfMap, "obstruction search needs a self-map");
  SearchResult out;
  out.in_theorem_scope = r.degree >= 2 && is_hyperbolic(orbifold_signature(portrait(r)));
  for (const auto &seed : seeds) {
    SeedReport rep;
    for (const auto &c : seed.classes)
      rep.seed += (rep.seed.empty() ? "" : " ") + c.name();
    SaturateResult sat = saturate(r, seed, budgets.max_iter, budgets.max_classes);
    rep.classes = sat.classes.size();
    rep.iterations = sat.iterations;
    if (sat.exceeded) {
      rep.outcome = "exceeded";
      rep.detail = sat.reason;
    } else if (sat.classes.empty()) {
      rep.outcome = "empty";
    } else {
      TransitionMatrix t = transition_matrix(r, sat.classes);
      ObstructionVerdict v = decide_obstruction(t.entries, budgets.tol);
      rep.outcome = v.verdict == Verdict::Obstruction      ? "obstruction"
                    : v.verdict == Verdict::NotObstruction ? "not-obstruction"
                                                           : "indeterminate";
      if (v.verdict == Verdict::Obstruction && r.degree < 2) {
        // A homeomorphism permutes curves; lambda = 1 says nothing here.
        rep.outcome = "out-of-scope";
        rep.detail = "lambda >= 1 for a degree-one map";
      } else if (v.verdict == Verdict::Obstruction) {
        out.found = true;
        out.gamma = sat.classes;
        t.enclosure = v.enclosure;
        out.matrix = t;
        out.verdict = v;
        out.report.push_back(rep);
        return out;
      }
    }
    out.report.push_back(rep);
  }
  return out;
}

} // namespace tkit
