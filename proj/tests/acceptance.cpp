// Acceptance suite: one PASS/FAIL line per criterion. With arguments, runs
// only the listed criteria. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include "fixture_path.hpp"
#include "oracles.hpp"
#include "tkit/io.hpp"
#include "tkit/obstruction.hpp"
#include "tkit/random.hpp"
#include "tkit/spectral.hpp"
#include "tkit/teich.hpp"

using namespace tkit;

namespace {

// Thresholds, fixed up front.
const Rational eigen_width(1, 1000000000);         // 1e-9
constexpr double eigen_seconds = 1.0;
constexpr int random_maps = 1000;
constexpr int max_degree = 5, max_punctures = 6, max_word = 12, conjugations = 100;
constexpr double obstruction_seconds = 5.0;
constexpr int min_manifests = 5;
constexpr int search_iterations = 10;
constexpr std::size_t search_classes = 64;
constexpr int spider_starts = 20, spider_steps = 200;
constexpr double relation_tol = 1e-8, parameter_tol = 1e-6;
constexpr double collar_tol = 1e-12;
constexpr int collar_grid = 10000;
constexpr int mating_steps = 100;

struct Outcome
{
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{ return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<std::string> manifest_names()
{
  std::vector<std::string> out;
  for (const auto &e : std::filesystem::directory_iterator(fixture("manifests")))
    out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

Manifest load_manifest(const std::string &name) { return io::load_manifest(fixture("manifests/" + name + ".json")); }

// ---- 1 -------------------------------------------------------------------------------

// Largest real root of the characteristic polynomial (degree <= 2) lies in
// [lo, hi], decided in exact arithmetic.
bool root_in(const RationalMatrix &m, const Enclosure &e)
{
  if (m.size() == 1)
    return e.lo <= m[0][0] && m[0][0] <= e.hi;
  const Rational tr = m[0][0] + m[1][1], det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const Rational disc = tr * tr - 4 * det; // root = (tr + sqrt(disc)) / 2
  if (disc < 0)
    return false;
  const Rational a = 2 * e.lo - tr, b = 2 * e.hi - tr;
  bool above = a < 0 || a * a <= disc;
  bool below = b >= 0 && b * b >= disc;
  return above && below;
}

Outcome eigenvalues()
{
  struct Case
  {
    RationalMatrix m;
    double expected;
  };
  const std::vector<Case> cases = {
      {{{Rational(1, 2)}}, 0.5},
      {{{Rational(1)}}, 1.0},
      {{{Rational(0), Rational(1)}, {Rational(1, 2), Rational(0)}}, std::sqrt(2.0) / 2},
  };
  Outcome o;
  auto t0 = Clock::now();
  std::ostringstream os;
  for (const auto &c : cases) {
    Enclosure e = spectral::leading_eigenvalue(c.m, eigen_width);
    bool ok = e.hi - e.lo <= eigen_width && root_in(c.m, e) && rational::to_double(e.lo) <= c.expected + 1e-15
              && rational::to_double(e.hi) >= c.expected - 1e-15;
    o.pass = o.pass && ok;
    os << "[" << rational::to_double(e.lo) << ", " << rational::to_double(e.hi) << "] width "
       << fmt(rational::to_double(e.hi - e.lo)) << (ok ? "" : " (bad)") << "; ";
  }
  double t = seconds_since(t0);
  o.pass = o.pass && t < eigen_seconds;
  o.detail = os.str() + "time " + fmt(t) + " s";
  return o;
}

// ---- 2 -------------------------------------------------------------------------------

std::vector<BranchedCoverRecursion> pool()
{
  std::vector<BranchedCoverRecursion> out;
  for (int d = 2; d <= 5; ++d)
    out.push_back(random::power_map(d));
  for (const auto &e : std::filesystem::directory_iterator(fixture("pieces")))
    out.push_back(io::load_recursion(e.path()));
  out.push_back(io::load_recursion(fixture("z2pi.json")));
  out.push_back(io::load_recursion(fixture("two-cycle.json")));
  return out;
}

std::multiset<std::pair<Word, int>> keyed(const PullbackResult &p)
{
  std::multiset<std::pair<Word, int>> out;
  for (const auto &c : p.components)
    out.insert({c.cls.key, c.degree});
  return out;
}

Outcome degree_conservation()
{
  auto base = pool();
  random::Rng rng(20240501);
  int bad_maps = 0, bad_sums = 0, bad_conj = 0, words = 0;
  for (int trial = 0; trial < random_maps; ++trial) {
    BranchedCoverRecursion r = random::recursion(rng, base);
    if (!validate(r).ok() || r.degree > max_degree || r.source.size() > max_punctures) {
      ++bad_maps;
      continue;
    }
    Word w = random::word(rng, r.target, max_word);
    for (int k = 0; k < 3; ++k, ++words) {
      Word v = k == 0 ? w : random::word(rng, r.target, max_word);
      bad_sums += pullback_class(r, normalize(r.target, v)).total_degree() != r.degree;
    }
    auto want = keyed(pullback_class(r, normalize(r.target, w)));
    for (int k = 0; k < conjugations; ++k) {
      Word u = random::word(rng, r.target, 6);
      Word conj = word::concat(word::concat(u, w), word::inverse(u));
      bad_conj += keyed(pullback_class(r, normalize(r.target, conj))) != want;
    }
  }
  Outcome o;
  o.pass = bad_maps == 0 && bad_sums == 0 && bad_conj == 0;
  o.detail = std::to_string(random_maps) + " maps, " + std::to_string(words) + " words, "
             + std::to_string(random_maps * conjugations) + " conjugates; failures: invalid " + std::to_string(bad_maps)
             + ", degree sum " + std::to_string(bad_sums) + ", conjugation " + std::to_string(bad_conj);
  return o;
}

// ---- 3 -------------------------------------------------------------------------------

bool matches_oracle(const Portrait &p, const OrbifoldSignature &sig)
{
  auto brute = oracle::brute_weights(p);
  Rational chi = 2;
  for (std::size_t k = 0; k < brute.size(); ++k) {
    Weight want = brute[k] == 0 ? Weight{true, 1} : Weight{false, brute[k]};
    if (!(sig.values[k] == want))
      return false;
    chi -= brute[k] == 0 ? Rational(1) : Rational(1) - Rational(1, brute[k]);
  }
  return chi == sig.chi;
}

Outcome orbifold()
{
  BranchedCoverRecursion r = io::load_recursion(fixture("z2pi.json"));
  Portrait p = portrait(r);
  OrbifoldSignature sig = orbifold_signature(p);
  Outcome o;
  const std::vector<Weight> expected = {{false, 2}, {false, 2}, {false, 2}, {true, 1}};
  o.pass = sig.values == expected && sig.chi == Rational(-1, 2) && matches_oracle(p, sig);
  std::vector<int> order{0, 1, 2, 3};
  int orders = 0, bad = 0;
  do {
    ++orders;
    BranchedCoverRecursion q = reorder_punctures(r, order);
    Portrait pq = portrait(q);
    OrbifoldSignature s = orbifold_signature(pq);
    bool ok = validate(q).ok() && s.chi == sig.chi && matches_oracle(pq, s);
    for (const auto &l : sig.labels)
      ok = ok && s.at(l) == sig.at(l);
    bad += !ok;
  } while (std::next_permutation(order.begin(), order.end()));
  o.pass = o.pass && orders == 24 && bad == 0;
  o.detail = "signature (2,2,2,inf), chi " + rational::to_string(sig.chi) + "; " + std::to_string(orders)
             + " orders, " + std::to_string(bad) + " mismatches";
  return o;
}

// ---- 4 -------------------------------------------------------------------------------

Outcome obstruction()
{
  Outcome o;
  std::ostringstream os;
  {
    auto t0 = Clock::now();
    CombineResult c = combine(load_manifest("levy-pair"));
    SearchResult s = search_obstruction(c.recursion, default_seeds(c.recursion.source), Budgets{});
    double t = seconds_since(t0);
    bool ok = s.found && s.verdict.verdict == Verdict::Obstruction && s.verdict.enclosure.lo == 1
              && s.verdict.enclosure.hi == 1 && t < obstruction_seconds;
    o.pass = o.pass && ok;
    os << "levy-pair " << (s.found ? "Obstruction" : "none") << " lambda [" << s.verdict.enclosure.lo << ", "
       << s.verdict.enclosure.hi << "] in " << fmt(t) << " s; ";
  }
  {
    auto t0 = Clock::now();
    BranchedCoverRecursion r = io::load_recursion(fixture("z2pi.json"));
    Budgets b;
    b.max_iter = search_iterations;
    SearchResult s = search_obstruction(r, default_seeds(r.source), b);
    double t = seconds_since(t0);
    bool ok = !s.found && t < obstruction_seconds;
    o.pass = o.pass && ok;
    os << "z^2+i " << (s.found ? "Found" : "NoneFoundWithinBudget") << " in " << fmt(t) << " s";
  }
  o.detail = os.str();
  return o;
}

// ---- 5 -------------------------------------------------------------------------------

Outcome roundtrip()
{
  Outcome o;
  auto names = manifest_names();
  int lo_d = 99, hi_d = 0, lo_n = 99, hi_n = 0, pieces = 0;
  std::string failures;
  for (const auto &name : names) {
    Manifest m = load_manifest(name);
    CombineResult c = combine(m);
    lo_d = std::min(lo_d, c.recursion.degree);
    hi_d = std::max(hi_d, c.recursion.degree);
    lo_n = std::min(lo_n, c.recursion.source.size());
    hi_n = std::max(hi_n, c.recursion.source.size());
    DecompositionResult d = decompose(c.recursion, c.multicurve, c.tree);
    bool ok = d.names.size() == m.pieces.size();
    for (const auto &p : m.pieces) {
      auto k = static_cast<std::size_t>(std::find(d.names.begin(), d.names.end(), p.name) - d.names.begin());
      if (k == d.names.size()) {
        ok = false;
        continue;
      }
      ++pieces;
      const auto &back = d.maps[k];
      auto renames = oracle::cap_renames(c, p.name);
      ok = ok && back.degree == p.map.degree
           && oracle::label_portrait(back) == oracle::label_portrait(p.map, renames)
           && orbifold_signature(portrait(back)).chi == orbifold_signature(portrait(p.map)).chi;
    }
    if (!ok)
      failures += " " + name;
  }
  o.pass = failures.empty() && static_cast<int>(names.size()) >= min_manifests && lo_d <= 2 && hi_d >= 4
           && lo_n <= 4 && hi_n >= 7;
  o.detail = std::to_string(names.size()) + " manifests, " + std::to_string(pieces) + " pieces, degrees "
             + std::to_string(lo_d) + "-" + std::to_string(hi_d) + ", punctures " + std::to_string(lo_n) + "-"
             + std::to_string(hi_n) + (failures.empty() ? "" : "; mismatches:" + failures);
  return o;
}

// ---- 6 -------------------------------------------------------------------------------

Outcome main_theorem()
{
  Outcome o;
  int obstructed = 0, checked = 0;
  std::string failures;
  Budgets b;
  b.max_iter = search_iterations;
  b.max_classes = search_classes;
  for (const auto &name : manifest_names()) {
    CombineResult c = combine(load_manifest(name));
    if (is_obstruction(c.recursion, c.multicurve).verdict != Verdict::Obstruction)
      continue;
    ++obstructed;
    DecompositionResult d = decompose(c.recursion, c.multicurve, c.tree);
    for (const auto &[sphere, map] : first_return_maps(d)) {
      if (map.degree < 2 || !is_hyperbolic(orbifold_signature(portrait(map))))
        continue;
      ++checked;
      if (search_obstruction(map, default_seeds(map.source), b).found)
        failures += " " + name;
    }
  }
  o.pass = failures.empty() && obstructed > 0 && checked > 0;
  o.detail = std::to_string(obstructed) + " obstructed fixtures, " + std::to_string(checked)
             + " hyperbolic pieces of degree >= 2 searched"
             + (failures.empty() ? ", all NoneFoundWithinBudget" : "; obstruction found in:" + failures);
  return o;
}

// ---- 7 -------------------------------------------------------------------------------

std::complex<double> relation(std::complex<double> c)
{
  auto a = c * c + c;
  return (a * a + c) * (a * a + c) + c - a;
}

// Newton's method on the relation, from near i, with a numerical derivative.
std::complex<double> newton_root()
{
  std::complex<double> c(0.05, 0.97);
  for (int k = 0; k < 100; ++k) {
    const std::complex<double> h(1e-7, 0);
    auto df = (relation(c + h) - relation(c - h)) / (2.0 * h);
    auto step = relation(c) / df;
    c -= step;
    if (std::abs(step) < 1e-15)
      break;
  }
  return c;
}

Outcome spider()
{
  Outcome o;
  auto root = newton_root();
  std::mt19937_64 rng(1729);
  std::uniform_real_distribution<double> radius(1.5, 20.0), jitter(-0.03, 0.03);
  int converged = 0, max_steps = 0;
  double worst_rel = 0, worst_dist = 0;
  for (int k = 0; k < spider_starts; ++k) {
    double r = radius(rng);
    std::vector<double> jit{jitter(rng), jitter(rng), jitter(rng)};
    auto s = teich::run(teich::start(teich::spider_start(Rational(1, 6), r, jit), {}), spider_steps,
                        [](teich::IterationState x, const teich::Thresholds &t) {
                          return teich::spider_step(std::move(x), t);
                        });
    auto v = teich::classify_iteration(s);
    if (v.status != teich::Status::Converged || !v.parameter) {
      worst_rel = std::numeric_limits<double>::infinity();
      continue;
    }
    ++converged;
    max_steps = std::max(max_steps, static_cast<int>(s.distances.size()));
    worst_rel = std::max(worst_rel, std::abs(relation(*v.parameter)));
    worst_dist = std::max(worst_dist, std::abs(*v.parameter - std::complex<double>(0, 1)));
  }
  o.pass = converged == spider_starts && max_steps <= spider_steps && worst_rel < relation_tol
           && worst_dist < parameter_tol && std::abs(root - std::complex<double>(0, 1)) < 1e-12;
  o.detail = std::to_string(converged) + "/" + std::to_string(spider_starts) + " converged, at most "
             + std::to_string(max_steps) + " steps, max relation residual " + fmt(worst_rel) + ", max |c-i| "
             + fmt(worst_dist) + ", Newton root " + fmt(root.real()) + (root.imag() < 0 ? "" : "+") + fmt(root.imag())
             + "i";
  return o;
}

// ---- 8 -------------------------------------------------------------------------------

Outcome collar()
{
  Outcome o;
  const double x = 2 * std::asinh(1.0);
  const double s = teich::collar_width(x);
  bool fixed = std::abs(s - x) <= collar_tol;
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= collar_grid; ++k) {
    double v = teich::collar_width(20.0 * k / collar_grid);
    monotone = monotone && v < prev;
    prev = v;
  }
  o.pass = fixed && monotone;
  char buf[200];
  std::snprintf(buf, sizeof buf, "s(2 asinh 1) = %.15g vs 2 asinh 1 = %.15g (|diff| %.3g); %s on %d points", s, x,
                std::abs(s - x), monotone ? "strictly decreasing" : "NOT monotone", collar_grid);
  o.detail = buf;
  return o;
}

// ---- 9 -------------------------------------------------------------------------------

Outcome degeneration()
{
  Outcome o;
#if TKIT_ENABLE_MATING
  io::Json f = io::load_json(fixture("matings/rabbit-self.json"));
  auto angles = f.at("angles").get<std::vector<std::string>>();
  int steps = std::min(f.at("steps").get<int>(), mating_steps);
  teich::Configuration c = teich::mating_start(rational::parse(angles.at(0)), rational::parse(angles.at(1)),
                                               f.at("radius").get<double>());
  auto tracked = teich::all_bipartitions(static_cast<int>(c.points.size()));
  auto s = teich::run(teich::start(c, tracked), steps, [](teich::IterationState x, const teich::Thresholds &t) {
    return teich::mating_step(std::move(x), t);
  });
  auto v = teich::classify_iteration(s);
  bool ok = v.status == teich::Status::Degenerate && !v.shrinking.empty() && v.floor && *v.floor > 0
            && static_cast<int>(s.distances.size()) <= mating_steps;
  double shrink_max = 0;
  if (ok) {
    std::set<int> shrinking(v.shrinking.begin(), v.shrinking.end());
    for (std::size_t k = 0; k < s.proxies.size(); ++k) {
      if (shrinking.count(static_cast<int>(k)))
        shrink_max = std::max(shrink_max, s.proxies[k].back());
      else
        for (double p : s.proxies[k])
          ok = ok && p >= *v.floor;
    }
    ok = ok && shrink_max < *v.floor;
  }
  o.pass = ok;
  std::string names;
  for (int k : v.shrinking)
    names += " " + teich::format(s.tracked[static_cast<std::size_t>(k)], s.config.labels);
  o.detail = std::string(teich::to_string(v.status)) + " after " + std::to_string(s.distances.size())
             + " steps; shrinking:" + names + " (final <= " + fmt(shrink_max) + "); floor of the other "
             + std::to_string(tracked.size() - v.shrinking.size()) + " classes " + (v.floor ? fmt(*v.floor) : "none");
#else
  o.pass = false;
  o.detail = "built without TKIT_ENABLE_MATING";
#endif
  return o;
}

} // namespace

int main(int argc, char **argv)
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"eigenvalue certification", eigenvalues},
      {"pullback degree conservation", degree_conservation},
      {"orbifold correctness", orbifold},
      {"obstruction detection", obstruction},
      {"roundtrip invariance", roundtrip},
      {"no obstruction in first-return pieces", main_theorem},
      {"spider convergence", spider},
      {"collar math", collar},
      {"degeneration diagnostic", degeneration},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a)
    only.insert(std::atoi(argv[a]));
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id))
      continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
