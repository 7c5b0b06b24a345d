#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "rational.hpp"

#ifndef TKIT_ENABLE_MATING
#define TKIT_ENABLE_MATING 0
#endif

namespace tkit::teich {

using Complex = std::complex<double>;

inline Complex infinity() { return {std::numeric_limits<double>::infinity(), 0.0}; }
inline bool is_infinite(Complex z) { return std::isinf(z.real()) || std::isinf(z.imag()); }

// ---- collar geometry --------------------------------------------------------------

/// Width s(x) = asinh(1 / sinh(x/2)) of the standard collar about a geodesic of length x.
inline double collar_width(double x)
{
  if (!(x > 0) || std::isinf(x))
    throw Error(ErrorCode::Domain, "collar width needs a finite positive length");
  return std::asinh(1.0 / std::sinh(x / 2));
}

/// The unique x with s(x) = x. With v = sinh(x/2)^2 the condition
/// sinh(x) sinh(x/2) = 1 reads 4v^3 + 4v^2 = 1, solved here by bisection.
inline double collar_fixed_point()
{
  double lo = 0, hi = 1;
  for (int k = 0; k < 200; ++k) {
    double v = (lo + hi) / 2;
    (4 * v * v * v + 4 * v * v < 1 ? lo : hi) = v;
  }
  return 2 * std::asinh(std::sqrt(lo));
}

// ---- bipartitions and the length proxy -----------------------------------------------

/// A curve given by the marked points on one of its sides. Stored as the side
/// holding point 0, sorted.
struct Bipartition
{
  std::vector<int> side;

  bool contains(int k) const { return std::binary_search(side.begin(), side.end(), k); }
  bool operator==(const Bipartition &) const = default;
};

inline Bipartition bipartition(std::vector<int> side, int n)
{
  std::sort(side.begin(), side.end());
  side.erase(std::unique(side.begin(), side.end()), side.end());
  for (int k : side)
    if (k < 0 || k >= n)
      throw Error(ErrorCode::Domain, "bipartition names a point outside the configuration");
  if (side.size() < 2 || n - static_cast<int>(side.size()) < 2)
    throw Error(ErrorCode::Domain, "each side of a bipartition needs at least two points");
  if (side.front() != 0) {
    std::vector<int> other;
    for (int k = 0; k < n; ++k)
      if (!std::binary_search(side.begin(), side.end(), k))
        other.push_back(k);
    side = std::move(other);
  }
  return {side};
}

/// Every bipartition with at least two points on each side.
inline std::vector<Bipartition> all_bipartitions(int n)
{
  std::vector<Bipartition> out;
  for (unsigned mask = 1; mask < (1u << n); mask += 2) {
    std::vector<int> side;
    for (int k = 0; k < n; ++k)
      if (mask >> k & 1u)
        side.push_back(k);
    if (side.size() >= 2 && n - static_cast<int>(side.size()) >= 2)
      out.push_back({side});
  }
  return out;
}

inline std::string format(const Bipartition &b, const std::vector<std::string> &labels)
{
  std::string a = "{", c = "{";
  for (int k = 0; k < static_cast<int>(labels.size()); ++k) {
    std::string &s = b.contains(k) ? a : c;
    s += (s.size() > 1 ? "," : "") + labels[static_cast<std::size_t>(k)];
  }
  return a + "}|" + c + "}";
}

/// Parses "a,b,c" (one side, by label).
inline Bipartition parse_bipartition(const std::string &text, const std::vector<std::string> &labels)
{
  std::vector<int> side;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos)
      end = text.size();
    std::string label = text.substr(start, end - start);
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end())
      throw Error(ErrorCode::Parse, "unknown point \"" + label + "\" in bipartition \"" + text + "\"");
    side.push_back(static_cast<int>(it - labels.begin()));
    start = end + 1;
  }
  return bipartition(side, static_cast<int>(labels.size()));
}

/// First pair of points closer than `tol` relative to their size.
inline std::optional<std::pair<int, int>> collision(const std::vector<Complex> &pts, double tol)
{
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      bool hit = is_infinite(pts[i]) || is_infinite(pts[j])
                     ? is_infinite(pts[i]) && is_infinite(pts[j])
                     : std::abs(pts[i] - pts[j]) <= tol * std::max(std::abs(pts[i]), std::abs(pts[j]));
      if (hit)
        return std::pair{static_cast<int>(i), static_cast<int>(j)};
    }
  return std::nullopt;
}

inline constexpr double collision_tolerance = 1e-13;

/// Proxy for the hyperbolic length of the curve separating the two sides:
/// 2 pi^2 / log(1 + rho), where rho is the best ratio of radii of a round
/// annulus (after a Mobius map sending one point of each side to 0 and inf)
/// that separates the sides. Equals pi / modulus once the annulus is wide.
inline double length_proxy(const std::vector<Complex> &pts, const Bipartition &b)
{
  const int n = static_cast<int>(pts.size());
  if (static_cast<int>(b.side.size()) < 2 || n - static_cast<int>(b.side.size()) < 2)
    throw Error(ErrorCode::Domain, "each side of a bipartition needs at least two points");
  if (auto c = collision(pts, collision_tolerance))
    throw Error(ErrorCode::DegenerateConfiguration,
                "points " + std::to_string(c->first) + " and " + std::to_string(c->second) + " collide");
  // |w(z)| for w = (z - p) / (z - q), up to a factor fixed by (p, q).
  auto modulus = [&](Complex z, Complex p, Complex q) {
    if (is_infinite(p))
      return 1.0 / std::abs(z - q);
    if (is_infinite(q))
      return std::abs(z - p);
    if (is_infinite(z))
      return 1.0;
    return std::abs(z - p) / std::abs(z - q);
  };
  double best = 0;
  for (int p = 0; p < n; ++p) {
    if (!b.contains(p))
      continue;
    for (int q = 0; q < n; ++q) {
      if (b.contains(q))
        continue;
      double inner = 0, outer = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n; ++k) {
        if (k == p || k == q)
          continue;
        double m = modulus(pts[static_cast<std::size_t>(k)], pts[static_cast<std::size_t>(p)],
                           pts[static_cast<std::size_t>(q)]);
        if (b.contains(k))
          inner = std::max(inner, m);
        else
          outer = std::min(outer, m);
      }
      best = std::max(best, outer / inner);
    }
  }
  return 2 * std::numbers::pi * std::numbers::pi / std::log1p(best);
}

// ---- configurations ------------------------------------------------------------------

/// Orbit of an angle under doubling: angles and successor indices.
inline std::pair<std::vector<Rational>, std::vector<int>> doubling_orbit(const Rational &theta)
{
  auto frac = [](Rational x) {
    BigInt fl = boost::multiprecision::numerator(x) / boost::multiprecision::denominator(x);
    x -= Rational(fl);
    return x < 0 ? x + 1 : x;
  };
  std::vector<Rational> angles{frac(theta)};
  std::vector<int> succ;
  for (;;) {
    Rational next = frac(2 * angles.back());
    auto it = std::find(angles.begin(), angles.end(), next);
    if (it != angles.end()) {
      for (std::size_t k = 0; k + 1 < angles.size(); ++k)
        succ.push_back(static_cast<int>(k + 1));
      succ.push_back(static_cast<int>(it - angles.begin()));
      return {angles, succ};
    }
    if (angles.size() > 64)
      throw Error(ErrorCode::Domain, "angle orbit longer than 64 points");
    angles.push_back(next);
  }
}

/// Marked points of a quadratic topological polynomial or mating. Point 0 is a
/// critical value; succ[j] is the index of the image of point j. `legs` are
/// the reference positions used to choose square-root branches.
struct Configuration
{
  std::vector<std::string> labels;
  std::vector<Complex> points;
  std::vector<int> successor;
  std::vector<Complex> legs;
  Complex critical{0.0, 0.0}; // spider gauge: position of the critical point
  int second = -1;            // matings: index of the second critical value
};

inline double angle_radians(const Rational &a) { return 2 * std::numbers::pi * rational::to_double(a); }

/// Spider with feet at radius r on the rays of the angle orbit, plus infinity.
/// `jitter[j]` perturbs the foot angles (in turns).
inline Configuration spider_start(const Rational &theta, double radius, const std::vector<double> &jitter = {})
{
  auto [angles, succ] = doubling_orbit(theta);
  Configuration c;
  for (std::size_t j = 0; j < angles.size(); ++j) {
    double t = angle_radians(angles[j]) + (j < jitter.size() ? 2 * std::numbers::pi * jitter[j] : 0.0);
    c.labels.push_back("z" + std::to_string(j + 1));
    c.points.push_back(std::polar(radius, t));
    c.successor.push_back(succ[j]);
  }
  c.labels.push_back("inf");
  c.points.push_back(infinity());
  c.successor.push_back(static_cast<int>(angles.size()));
  c.legs = c.points;
  return c;
}

#if TKIT_ENABLE_MATING
/// Formal mating of the polynomials with angles theta1 and theta2: the first
/// orbit near 0, the second near infinity, critical points at 0 and infinity,
/// and the first critical value at 1. Angle 0 puts its critical value at the
/// critical point infinity.
inline Configuration mating_start(const Rational &theta1, const Rational &theta2, double radius)
{
  auto [a1, s1] = doubling_orbit(theta1);
  auto [a2, s2] = doubling_orbit(theta2);
  Configuration c;
  const int n1 = static_cast<int>(a1.size());
  for (int j = 0; j < n1; ++j) {
    c.labels.push_back("a" + std::to_string(j + 1));
    c.points.push_back(std::polar(radius, angle_radians(a1[static_cast<std::size_t>(j)])));
    c.successor.push_back(s1[static_cast<std::size_t>(j)]);
  }
  for (std::size_t j = 0; j < a2.size(); ++j) {
    c.labels.push_back("b" + std::to_string(j + 1));
    c.points.push_back(a2[j] == 0 ? infinity() : std::polar(1 / radius, -angle_radians(a2[j])));
    c.successor.push_back(n1 + s2[j]);
  }
  const Complex ref = c.points[0];
  for (auto &p : c.points)
    if (!is_infinite(p))
      p /= ref;
  c.second = n1;
  c.legs = c.points;
  return c;
}

#endif

/// Configuration in the gauge with the critical point at 0 and point 0 at 1.
inline std::vector<Complex> renormalized(const Configuration &c)
{
  std::vector<Complex> out;
  const Complex base = c.points[0] - c.critical;
  for (const auto &p : c.points)
    out.push_back(is_infinite(p) ? p : (p - c.critical) / base);
  return out;
}

/// Applies z -> a z + b to a spider configuration (points, legs, critical point).
inline Configuration affine(Configuration c, Complex a, Complex b)
{
  for (auto *v : {&c.points, &c.legs})
    for (auto &p : *v)
      if (!is_infinite(p))
        p = a * p + b;
  c.critical = a * c.critical + b;
  return c;
}

// ---- iteration state --------------------------------------------------------------------

enum class Status { Running, Converged, Degenerate, Indeterminate };

inline const char *to_string(Status s)
{
  switch (s) {
  case Status::Running: return "Running";
  case Status::Converged: return "Converged";
  case Status::Degenerate: return "Degenerate";
  case Status::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

struct Thresholds
{
  int window = 20;
  double degenerate = 1e-3;
  double converged = 1e-10;
  double collision = collision_tolerance;
};

struct IterationState
{
  Configuration config;
  std::vector<std::vector<Complex>> history; // points of every iterate, the start first
  std::vector<Bipartition> tracked;
  std::vector<std::vector<double>> proxies; // proxies[k][n] for tracked[k] at iterate n
  std::vector<double> distances;            // distances[n - 1]: iterate n - 1 to n
  Status status = Status::Running;
  std::optional<std::pair<int, int>> collision;
  std::string detail;
};

namespace detail {

inline void record(IterationState &s, const Thresholds &th)
{
  s.history.push_back(s.config.points);
  if (s.history.size() > 1) {
    const auto &a = s.history[s.history.size() - 2];
    const auto &b = s.history.back();
    double d = 0;
    for (std::size_t j = 0; j < a.size(); ++j)
      if (!is_infinite(a[j]) && !is_infinite(b[j]))
        d = std::max(d, std::abs(a[j] - b[j]) / std::max(1.0, std::abs(b[j])));
      else if (is_infinite(a[j]) != is_infinite(b[j]))
        d = std::numeric_limits<double>::infinity();
    s.distances.push_back(d);
  }
  if (auto c = collision(s.config.points, th.collision)) {
    s.collision = c;
    s.status = Status::Degenerate;
    s.detail = "points " + s.config.labels[static_cast<std::size_t>(c->first)] + " and "
               + s.config.labels[static_cast<std::size_t>(c->second)] + " collide";
    return;
  }
  for (std::size_t k = 0; k < s.tracked.size(); ++k)
    s.proxies[k].push_back(length_proxy(s.config.points, s.tracked[k]));
}

/// Picks +root or -root, whichever lies nearer to the reference.
inline std::optional<Complex> nearer(Complex root, Complex reference)
{
  double plus = std::abs(root - reference), minus = std::abs(-root - reference);
  if (std::abs(plus - minus) <= 1e-12 * (std::abs(root) + std::abs(reference)) && std::abs(root) > 1e-300)
    return std::nullopt;
  return plus <= minus ? root : -root;
}

} // namespace detail

/// Starts a run: records the initial configuration and its proxies.
inline IterationState start(Configuration c, std::vector<Bipartition> tracked, const Thresholds &th = {})
{
  IterationState s;
  s.config = std::move(c);
  s.tracked = std::move(tracked);
  s.proxies.assign(s.tracked.size(), {});
  detail::record(s, th);
  return s;
}

/// One pullback step for z^2 + c: each point becomes a square root of its
/// image minus the critical value. The branch is chosen so that the new
/// configuration, scaled by its first point, stays nearest the old legs
/// scaled the same way; this makes the step independent of the affine gauge.
inline IterationState spider_step(IterationState s, const Thresholds &th = {})
{
  if (s.status != Status::Running)
    throw Error(ErrorCode::Domain, "spider step on a finished run");
  Configuration &c = s.config;
  const std::size_t m = c.points.size();
  std::vector<Complex> w(m), legs(m), roots(m);
  for (std::size_t j = 0; j < m; ++j) {
    w[j] = is_infinite(c.points[j]) ? c.points[j] : c.points[j] - c.critical;
    legs[j] = is_infinite(c.legs[j]) ? c.legs[j] : c.legs[j] - c.critical;
  }
  const Complex value = w[0];
  for (std::size_t j = 0; j < m; ++j) {
    Complex image = w[static_cast<std::size_t>(c.successor[j])];
    roots[j] = is_infinite(image) ? image : std::sqrt(image - value);
  }
  std::vector<Complex> next(m);
  next[0] = detail::nearer(roots[0], legs[0]).value_or(roots[0]);
  for (std::size_t j = 1; j < m; ++j) {
    if (is_infinite(roots[j])) {
      next[j] = roots[j];
      continue;
    }
    auto pick = detail::nearer(roots[j] / next[0], legs[j] / legs[0]);
    if (!pick) {
      s.status = Status::Indeterminate;
      s.detail = "branch ambiguity at " + c.labels[j];
      return s;
    }
    next[j] = *pick * next[0];
  }
  c.points = next;
  c.legs = next;
  c.critical = 0;
  detail::record(s, th);
  return s;
}

#if TKIT_ENABLE_MATING
/// One pullback step for the formal mating F = M(z^2), where the Mobius map M
/// sends 0 and infinity to the two critical values. Points are renormalized
/// so the first critical value sits at 1.
inline IterationState mating_step(IterationState s, const Thresholds &th = {})
{
  if (s.status != Status::Running)
    throw Error(ErrorCode::Domain, "mating step on a finished run");
  Configuration &c = s.config;
  const std::size_t m = c.points.size();
  const Complex v1 = c.points[0], v2 = c.points[static_cast<std::size_t>(c.second)];
  // M^{-1}, up to a constant factor.
  auto pre = [&](Complex x) -> Complex {
    if (is_infinite(v2))
      return is_infinite(x) ? x : x - v1;
    if (is_infinite(x))
      return -1.0;
    if (x == v2)
      return infinity();
    return (x - v1) / (v2 - x);
  };
  const Complex ref = pre(c.points[static_cast<std::size_t>(c.successor[0])]);
  if (is_infinite(ref) || std::abs(ref) == 0) {
    s.status = Status::Degenerate;
    s.detail = "critical value collides with a critical point";
    return s;
  }
  std::vector<Complex> next(m);
  for (std::size_t j = 0; j < m; ++j) {
    Complex u = pre(c.points[static_cast<std::size_t>(c.successor[j])]);
    if (is_infinite(u)) {
      next[j] = u;
      continue;
    }
    auto pick = detail::nearer(std::sqrt(u / ref), c.legs[j]);
    if (!pick) {
      s.status = Status::Indeterminate;
      s.detail = "branch ambiguity at " + c.labels[j];
      return s;
    }
    next[j] = *pick;
  }
  c.points = next;
  c.legs = next;
  detail::record(s, th);
  return s;
}
#endif

// ---- classification --------------------------------------------------------------------

struct IterationVerdict
{
  Status status = Status::Indeterminate;
  std::vector<int> shrinking; // indices into the tracked classes
  std::optional<double> floor; // least proxy over the run among the other tracked classes
  std::optional<Complex> parameter;
  std::string detail;
};

/// True when the last `window` + 1 values strictly decrease.
inline bool decreasing_tail(const std::vector<double> &v, int window)
{
  if (static_cast<int>(v.size()) < window + 1)
    return false;
  for (std::size_t i = v.size() - static_cast<std::size_t>(window); i < v.size(); ++i)
    if (!(v[i] < v[i - 1]))
      return false;
  return true;
}

/// Converged when the last step moved less than the tolerance; Degenerate when
/// points collided or a tracked proxy fell below the threshold while strictly
/// decreasing over the window; Indeterminate otherwise.
inline IterationVerdict classify_iteration(const IterationState &s, const Thresholds &th = {})
{
  IterationVerdict v;
  v.detail = s.detail;
  auto finish_floor = [&] {
    for (std::size_t k = 0; k < s.proxies.size(); ++k) {
      if (std::find(v.shrinking.begin(), v.shrinking.end(), static_cast<int>(k)) != v.shrinking.end()
          || s.proxies[k].empty())
        continue;
      double lo = *std::min_element(s.proxies[k].begin(), s.proxies[k].end());
      v.floor = v.floor ? std::min(*v.floor, lo) : lo;
    }
  };
  if (s.status == Status::Indeterminate) {
    finish_floor();
    return v;
  }
  if (s.collision || s.status == Status::Degenerate) {
    v.status = Status::Degenerate;
    // A collision settles degeneration; the shrinking classes are those whose
    // proxies fell steadily on the way there.
    const int window = std::min<int>(th.window, static_cast<int>(s.history.size()) - 2);
    for (std::size_t k = 0; k < s.proxies.size(); ++k)
      if (window >= 1 && decreasing_tail(s.proxies[k], window))
        v.shrinking.push_back(static_cast<int>(k));
    finish_floor();
    return v;
  }
  if (!s.distances.empty() && s.distances.back() < th.converged) {
    v.status = Status::Converged;
    if (s.config.second < 0)
      v.parameter = s.config.points[0] - s.config.critical;
    finish_floor();
    return v;
  }
  for (std::size_t k = 0; k < s.proxies.size(); ++k)
    if (!s.proxies[k].empty() && s.proxies[k].back() < th.degenerate && decreasing_tail(s.proxies[k], th.window))
      v.shrinking.push_back(static_cast<int>(k));
  if (!v.shrinking.empty())
    v.status = Status::Degenerate;
  finish_floor();
  return v;
}

/// Steps until the run converges, degenerates or uses up `steps`.
template <class Step>
IterationState run(IterationState s, int steps, Step step, const Thresholds &th = {})
{
  for (int n = 0; n < steps && s.status == Status::Running; ++n) {
    s = step(std::move(s), th);
    if (s.status != Status::Running)
      break;
    Status v = classify_iteration(s, th).status;
    if (v != Status::Indeterminate)
      s.status = v;
  }
  return s;
}

} // namespace tkit::teich
