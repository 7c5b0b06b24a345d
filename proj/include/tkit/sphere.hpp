#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "word.hpp"

namespace tkit {

/// A sphere with n >= 3 ordered, labelled punctures. Generator x_i is a
/// counterclockwise peripheral loop around puncture i and x_1 x_2 ... x_n = 1.
/// Group elements are stored as freely reduced words over x_1..x_{n-1}.
class MarkedSphere
{
public:
  MarkedSphere() = default;

  explicit MarkedSphere(std::vector<std::string> labels)
  : _labels(std::move(labels))
  {
    if (_labels.size() < 3)
      throw Error(ErrorCode::Domain, "a marked sphere needs at least 3 punctures");
    std::set<std::string> seen(_labels.begin(), _labels.end());
    if (seen.size() != _labels.size())
      throw Error(ErrorCode::Domain, "puncture labels must be distinct");
  }

  int size() const { return static_cast<int>(_labels.size()); }
  const std::vector<std::string> &labels() const { return _labels; }
  const std::string &label(int i) const { return _labels.at(static_cast<std::size_t>(i - 1)); }

  /// One-based index of a label, if present.
  std::optional<int> index_of(const std::string &label) const
  {
    for (std::size_t i = 0; i < _labels.size(); ++i)
      if (_labels[i] == label)
        return static_cast<int>(i + 1);
    return std::nullopt;
  }

  /// Normal form of x_i; x_n becomes (x_1 ... x_{n-1})^{-1}.
  Word generator(int i) const
  {
    int n = size();
    if (i < 1 || i > n)
      throw Error(ErrorCode::Domain, "generator index out of range");
    if (i < n)
      return {i};
    Word w;
    for (int j = n - 1; j >= 1; --j)
      w.push_back(-j);
    return w;
  }

  /// Substitutes x_n and freely reduces.
  Word normal_form(const Word &tokens) const
  {
    int n = size();
    Word out;
    for (int l : tokens) {
      int g = l > 0 ? l : -l;
      if (g > n)
        throw Error(ErrorCode::Domain, "generator x" + std::to_string(g) + " on a "
                                           + std::to_string(n) + "-punctured sphere");
      if (g < n) {
        word::append(out, Word{l});
      } else {
        Word xn = generator(n);
        word::append(out, l > 0 ? xn : word::inverse(xn));
      }
    }
    return out;
  }

  Word parse(std::string_view text) const { return normal_form(word::parse(text)); }

  /// Product x_i x_{i+1} ... over a cyclically contiguous block of k punctures.
  Word block(int first, int k) const
  {
    Word w;
    for (int t = 0; t < k; ++t)
      w.push_back((first - 1 + t) % size() + 1);
    return normal_form(w);
  }

  bool operator==(const MarkedSphere &o) const { return _labels == o._labels; }
  bool operator!=(const MarkedSphere &o) const { return !(*this == o); }

private:
  std::vector<std::string> _labels;
};

/// A sequence of generator tokens together with its normal form.
struct SphereWord
{
  Word tokens;
  Word normal;

  SphereWord() = default;
  SphereWord(const MarkedSphere &s, Word t) : tokens(std::move(t)), normal(s.normal_form(tokens)) {}

  bool operator==(const SphereWord &o) const { return normal == o.normal; }
};

} // namespace tkit
