#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "error.hpp"

namespace tkit {

/// A word in a free group. Letter +i is the generator x_i, -i its inverse.
using Word = std::vector<int>;

namespace word {

inline Word reduce(const Word &w)
{
  Word out;
  out.reserve(w.size());
  for (int l : w) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

inline Word inverse(const Word &w)
{
  Word out(w.rbegin(), w.rend());
  for (int &l : out)
    l = -l;
  return out;
}

inline Word concat(const Word &a, const Word &b)
{
  Word out;
  out.reserve(a.size() + b.size());
  for (int l : a) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  for (int l : b) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

inline void append(Word &acc, const Word &b)
{
  for (int l : b) {
    if (!acc.empty() && acc.back() == -l)
      acc.pop_back();
    else
      acc.push_back(l);
  }
}

/// Parses "x1X2x3" into {1,-2,3}. The empty string is the identity.
inline Word parse(std::string_view text)
{
  Word out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c != 'x' && c != 'X')
      throw Error(ErrorCode::Parse, "bad word token at '" + std::string(text.substr(i)) + "'");
    std::size_t j = i + 1;
    int value = 0;
    while (j < text.size() && text[j] >= '0' && text[j] <= '9') {
      value = value * 10 + (text[j] - '0');
      if (value > 1000000)
        throw Error(ErrorCode::Parse, "generator index too large");
      ++j;
    }
    if (j == i + 1 || value == 0)
      throw Error(ErrorCode::Parse, "missing generator index in '" + std::string(text) + "'");
    out.push_back(c == 'x' ? value : -value);
    i = j;
  }
  return out;
}

inline std::string format(const Word &w)
{
  std::string out;
  for (int l : w) {
    out += l > 0 ? 'x' : 'X';
    out += std::to_string(std::abs(l));
  }
  return out;
}

/// Free reduction followed by cancellation of inverse letters at both ends.
inline Word cyclic_reduce(const Word &w)
{
  Word r = reduce(w);
  std::size_t lo = 0, hi = r.size();
  while (hi - lo >= 2 && r[lo] == -r[hi - 1]) {
    ++lo;
    --hi;
  }
  return Word(r.begin() + static_cast<long>(lo), r.begin() + static_cast<long>(hi));
}

// x1 < X1 < x2 < X2 < ...
inline int letter_rank(int l)
{ return 2 * std::abs(l) - (l > 0 ? 1 : 0); }

inline bool letter_less(int a, int b)
{ return letter_rank(a) < letter_rank(b); }

/// Lexicographically least rotation (Booth's algorithm).
inline Word min_rotation(const Word &w)
{
  std::size_t n = w.size();
  if (n == 0)
    return w;
  std::vector<int> f(2 * n, -1);
  std::size_t k = 0;
  auto at = [&](std::size_t i) { return letter_rank(w[i % n]); };
  for (std::size_t j = 1; j < 2 * n; ++j) {
    int i = f[j - k - 1];
    while (i != -1 && at(j) != at(k + static_cast<std::size_t>(i) + 1)) {
      if (at(j) < at(k + static_cast<std::size_t>(i) + 1))
        k = j - static_cast<std::size_t>(i) - 1;
      i = f[static_cast<std::size_t>(i)];
    }
    if (i == -1 && at(j) != at(k)) {
      if (at(j) < at(k))
        k = j;
      f[j - k] = -1;
    } else {
      f[j - k] = i + 1;
    }
  }
  Word out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = w[(k + i) % n];
  return out;
}

inline bool lex_less(const Word &a, const Word &b)
{
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), letter_less);
}

/// Canonical representative of the conjugacy class of w.
inline Word oriented_key(const Word &w)
{ return min_rotation(cyclic_reduce(w)); }

/// Canonical representative of the conjugacy class of w or w^{-1}.
inline Word unoriented_key(const Word &w)
{
  Word a = oriented_key(w);
  Word b = oriented_key(inverse(w));
  return lex_less(b, a) ? b : a;
}

inline bool conjugate(const Word &a, const Word &b)
{ return oriented_key(a) == oriented_key(b); }

/// Some u with w = u g u^{-1} in the free group, if w and g are conjugate.
inline std::optional<Word> conjugator(const Word &w, const Word &g)
{
  Word r = reduce(w);
  std::size_t lo = 0, hi = r.size();
  while (hi - lo >= 2 && r[lo] == -r[hi - 1]) {
    ++lo;
    --hi;
  }
  Word v(r.begin(), r.begin() + static_cast<long>(lo));
  Word core(r.begin() + static_cast<long>(lo), r.begin() + static_cast<long>(hi));
  Word gc = reduce(g);
  if (core.size() != gc.size() || cyclic_reduce(gc) != gc)
    return std::nullopt;
  for (std::size_t k = 0; k < gc.size() || k == 0; ++k) {
    // core = q^{-1} g q with q = g[0, k).
    Word rot(gc.begin() + static_cast<long>(k), gc.end());
    rot.insert(rot.end(), gc.begin(), gc.begin() + static_cast<long>(k));
    if (rot == core) {
      Word q(gc.begin(), gc.begin() + static_cast<long>(k));
      return concat(v, inverse(q));
    }
    if (gc.empty())
      break;
  }
  return std::nullopt;
}

} // namespace word
} // namespace tkit
