#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "curves.hpp"
#include "error.hpp"
#include "rational.hpp"

namespace tkit {
namespace spectral {

/// Strongly connected components of the support graph i -> j when M[i][j] > 0.
inline std::vector<std::vector<std::size_t>> strong_components(const RationalMatrix &m)
{
  const std::size_t n = m.size();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  int counter = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (std::size_t w = 0; w < n; ++w) {
      if (m[v][w] == 0)
        continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> comp;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0)
      visit(v);
  return out;
}

namespace detail {

/// Collatz-Wielandt bracket min/max (Bx)_i / x_i for a positive vector x.
inline Enclosure collatz_wielandt(const RationalMatrix &b, const std::vector<BigInt> &x)
{
  std::optional<Rational> lo, hi;
  for (std::size_t i = 0; i < b.size(); ++i) {
    Rational s = 0;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (b[i][j] != 0)
        s += b[i][j] * Rational(x[j]);
    Rational q = s / Rational(x[i]);
    if (!lo || q < *lo)
      lo = q;
    if (!hi || q > *hi)
      hi = q;
  }
  return {*lo, *hi};
}

/// Rescales x so that its largest entry is 2^bits, keeping every entry >= 1.
inline std::vector<BigInt> round_vector(const std::vector<Rational> &x, unsigned bits)
{
  Rational top = *std::max_element(x.begin(), x.end());
  BigInt scale = BigInt(1) << bits;
  std::vector<BigInt> out;
  for (const Rational &v : x) {
    Rational s = v * Rational(scale) / top;
    BigInt q = boost::multiprecision::numerator(s) / boost::multiprecision::denominator(s);
    out.push_back(q < 1 ? BigInt(1) : q);
  }
  return out;
}

/// Enclosure of the Perron root of an irreducible nonnegative block.
inline Enclosure irreducible_enclosure(const RationalMatrix &b, const Rational &tol)
{
  const std::size_t k = b.size();
  // Floating power iteration on I + B (primitive) gives a starting vector.
  std::vector<long double> v(k, 1.0L), w(k);
  for (int it = 0; it < 20000; ++it) {
    long double top = 0, change = 0;
    for (std::size_t i = 0; i < k; ++i) {
      long double s = v[i];
      for (std::size_t j = 0; j < k; ++j)
        s += static_cast<long double>(rational::to_double(b[i][j])) * v[j];
      w[i] = s;
      top = std::max(top, s);
    }
    for (std::size_t i = 0; i < k; ++i) {
      long double nv = w[i] / top;
      change = std::max(change, std::fabs(nv - v[i]));
      v[i] = nv;
    }
    if (change < 1e-18L)
      break;
  }
  std::vector<Rational> x;
  for (long double e : v)
    x.push_back(rational::from_double(static_cast<double>(std::max(e, 1e-300L))));
  unsigned bits = 64;
  std::vector<BigInt> xi = round_vector(x, bits);
  Enclosure best = collatz_wielandt(b, xi);
  // Exact refinement: x <- (I + B) x, rounded to growing precision.
  for (int it = 0; it < 100000 && best.width() > tol; ++it) {
    std::vector<Rational> next(k);
    for (std::size_t i = 0; i < k; ++i) {
      Rational s = Rational(xi[i]);
      for (std::size_t j = 0; j < k; ++j)
        if (b[i][j] != 0)
          s += b[i][j] * Rational(xi[j]);
      next[i] = s;
    }
    bits = std::min(bits + 4, 4096u);
    xi = round_vector(next, bits);
    Enclosure e = collatz_wielandt(b, xi);
    best = {std::max(best.lo, e.lo), std::min(best.hi, e.hi)};
  }
  return best;
}

} // namespace detail

/// Rigorous enclosure [lo, hi] of the spectral radius, width <= tol.
/// Reducible matrices are handled blockwise over strongly connected components.
inline Enclosure leading_eigenvalue(const RationalMatrix &m, const Rational &tol)
{
  for (const auto &row : m) {
    if (row.size() != m.size())
      throw Error(ErrorCode::Domain, "transition matrix must be square");
    for (const auto &v : row)
      if (v < 0)
        throw Error(ErrorCode::Domain, "transition matrix must be nonnegative");
  }
  Enclosure out{0, 0};
  for (const auto &comp : strong_components(m)) {
    Enclosure e;
    if (comp.size() == 1) {
      e = {m[comp[0]][comp[0]], m[comp[0]][comp[0]]};
    } else {
      RationalMatrix b(comp.size(), std::vector<Rational>(comp.size()));
      for (std::size_t i = 0; i < comp.size(); ++i)
        for (std::size_t j = 0; j < comp.size(); ++j)
          b[i][j] = m[comp[i]][comp[j]];
      // Normalising by the largest entry makes the result exactly homogeneous:
      // scaling M and tol by t scales the enclosure by t.
      Rational top = 0;
      for (const auto &row : b)
        for (const auto &v : row)
          top = std::max(top, v);
      for (auto &row : b)
        for (auto &v : row)
          v /= top;
      e = detail::irreducible_enclosure(b, tol / top);
      e = {e.lo * top, e.hi * top};
    }
    out.lo = std::max(out.lo, e.lo);
    out.hi = std::max(out.hi, e.hi);
  }
  return out;
}

// ---- exact characteristic polynomial and Sturm sequences ----------------

/// Coefficients low to high.
using Polynomial = std::vector<Rational>;

inline void trim(Polynomial &p)
{
  while (!p.empty() && p.back() == 0)
    p.pop_back();
}

inline Rational evaluate(const Polynomial &p, const Rational &x)
{
  Rational acc = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it)
    acc = acc * x + *it;
  return acc;
}

/// det(t I - M) by the Faddeev-LeVerrier recurrence.
inline Polynomial characteristic_polynomial(const RationalMatrix &m)
{
  const std::size_t n = m.size();
  Polynomial c(n + 1, Rational(0));
  c[n] = 1;
  RationalMatrix mk(n, std::vector<Rational>(n, Rational(0))); // M_0 = 0
  for (std::size_t k = 1; k <= n; ++k) {
    RationalMatrix next(n, std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Rational s = 0;
        for (std::size_t l = 0; l < n; ++l)
          if (m[i][l] != 0)
            s += m[i][l] * mk[l][j];
        next[i][j] = s;
      }
    for (std::size_t i = 0; i < n; ++i)
      next[i][i] += c[n - k + 1];
    Rational trace = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Rational s = 0;
      for (std::size_t l = 0; l < n; ++l)
        if (m[i][l] != 0)
          s += m[i][l] * next[l][i];
      trace += s;
    }
    c[n - k] = -trace / Rational(static_cast<long>(k));
    mk = std::move(next);
  }
  return c;
}

inline Polynomial derivative(const Polynomial &p)
{
  Polynomial out;
  for (std::size_t i = 1; i < p.size(); ++i)
    out.push_back(p[i] * Rational(static_cast<long>(i)));
  trim(out);
  return out;
}

inline Polynomial remainder(Polynomial a, const Polynomial &b)
{
  trim(a);
  while (a.size() >= b.size() && !a.empty()) {
    Rational f = a.back() / b.back();
    std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i)
      a[i + shift] -= f * b[i];
    a.pop_back();
    trim(a);
  }
  return a;
}

inline std::vector<Polynomial> sturm_sequence(Polynomial p)
{
  trim(p);
  std::vector<Polynomial> seq{p, derivative(p)};
  while (!seq.back().empty()) {
    Polynomial r = remainder(seq[seq.size() - 2], seq.back());
    for (auto &c : r)
      c = -c;
    if (r.empty())
      break;
    seq.push_back(std::move(r));
  }
  return seq;
}

inline int sign_changes(const std::vector<Rational> &values)
{
  int changes = 0, last = 0;
  for (const auto &v : values) {
    int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (s == 0)
      continue;
    if (last != 0 && s != last)
      ++changes;
    last = s;
  }
  return changes;
}

/// Number of distinct real roots in (a, +inf), assuming p(a) != 0.
inline int roots_above(const Polynomial &p, const Rational &a)
{
  auto seq = sturm_sequence(p);
  std::vector<Rational> at_a, at_inf;
  for (const auto &q : seq) {
    at_a.push_back(evaluate(q, a));
    at_inf.push_back(q.empty() ? Rational(0) : q.back());
  }
  return sign_changes(at_a) - sign_changes(at_inf);
}

/// Exact decision of spectral radius >= threshold for a nonnegative matrix.
inline bool spectral_radius_at_least(const RationalMatrix &m, const Rational &threshold)
{
  Polynomial p = characteristic_polynomial(m);
  if (evaluate(p, threshold) == 0)
    return true;
  return roots_above(p, threshold) > 0;
}

} // namespace spectral
} // namespace tkit
