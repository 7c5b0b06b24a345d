#include <gtest/gtest.h>

#include <random>

#include "tkit/curves.hpp"
#include "tkit/sphere.hpp"
#include "tkit/word.hpp"

using namespace tkit;

namespace {

Word brute_min_rotation(const Word &w)
{
  Word best = w;
  for (std::size_t r = 1; r < w.size(); ++r) {
    Word rot(w.begin() + static_cast<long>(r), w.end());
    rot.insert(rot.end(), w.begin(), w.begin() + static_cast<long>(r));
    if (word::lex_less(rot, best))
      best = rot;
  }
  return best;
}

Word random_word(std::mt19937 &rng, int gens, int len)
{
  std::uniform_int_distribution<int> g(1, gens), sign(0, 1);
  Word w;
  for (int i = 0; i < len; ++i)
    w.push_back(sign(rng) ? g(rng) : -g(rng));
  return w;
}

} // namespace

TEST(Word, ParseFormatRoundTrip)
{
  EXPECT_EQ(word::parse("x1X2x13"), (Word{1, -2, 13}));
  EXPECT_EQ(word::format({1, -2, 13}), "x1X2x13");
  EXPECT_TRUE(word::parse("").empty());
  EXPECT_THROW(word::parse("x1y2"), Error);
  EXPECT_THROW(word::parse("x"), Error);
  EXPECT_THROW(word::parse("x0"), Error);
}

TEST(Word, FreeAndCyclicReduction)
{
  EXPECT_TRUE(word::reduce(word::parse("x1x2X2X1")).empty());
  EXPECT_EQ(word::cyclic_reduce(word::parse("x1x2x3X1")), word::parse("x2x3"));
  EXPECT_EQ(word::concat(word::parse("x1x2"), word::parse("X2x3")), word::parse("x1x3"));
}

TEST(Word, BoothMatchesBruteForce)
{
  std::mt19937 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    Word w = word::cyclic_reduce(random_word(rng, 3, 1 + trial % 11));
    EXPECT_EQ(word::min_rotation(w), brute_min_rotation(w)) << word::format(w);
  }
}

TEST(Word, KeysAreConjugacyInvariant)
{
  std::mt19937 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    Word w = random_word(rng, 4, 8);
    Word u = random_word(rng, 4, 5);
    Word c = word::reduce(word::concat(word::concat(u, w), word::inverse(u)));
    EXPECT_EQ(word::oriented_key(w), word::oriented_key(c));
    EXPECT_EQ(word::unoriented_key(w), word::unoriented_key(word::inverse(c)));
  }
}

TEST(Sphere, GeneratorsAndRelation)
{
  MarkedSphere s({"a", "b", "c", "d"});
  EXPECT_EQ(s.generator(4), word::parse("X3X2X1"));
  EXPECT_TRUE(s.parse("x1x2x3x4").empty());
  EXPECT_EQ(s.block(4, 2), s.parse("x4x1"));
  EXPECT_THROW(MarkedSphere({"a", "a", "b"}), Error);
  EXPECT_THROW(MarkedSphere({"a", "b"}), Error);
  EXPECT_THROW(s.parse("x5"), Error);
}

TEST(Curves, NormalizeExamples)
{
  MarkedSphere s4({"a", "b", "c", "d"});
  EXPECT_TRUE(curve(s4, "x1X1").is_identity());
  EXPECT_EQ(curve(s4, "x2x1"), curve(s4, "x1x2"));
  EXPECT_EQ(curve(s4, "x1x2x3"), curve(s4, "X4"));
  EXPECT_EQ(curve(s4, "x1x2x3"), curve(s4, "x4"));
}

TEST(Curves, ClassifyExamples)
{
  MarkedSphere s5({"a", "b", "c", "d", "e"});
  EXPECT_EQ(classify(s5, curve(s5, "x3")), (Classification{Classification::Peripheral, 3}));
  EXPECT_EQ(classify(s5, curve(s5, "x1x2")).kind, Classification::Essential);
  EXPECT_EQ(classify(s5, curve(s5, "x1x2x3x4")), (Classification{Classification::Peripheral, 5}));
  EXPECT_EQ(classify(s5, curve(s5, "")).kind, Classification::Trivial);
}

TEST(Curves, MulticurveOrderedByKey)
{
  MarkedSphere s5({"a", "b", "c", "d", "e"});
  Multicurve m = Multicurve::from({curve(s5, "x3x4"), curve(s5, "x1x2"), curve(s5, "x2x1")});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_TRUE(word::lex_less(m.classes[0].key, m.classes[1].key));
  EXPECT_TRUE(m.contains(curve(s5, "x2x1").key));
  EXPECT_THROW(require_multicurve(s5, Multicurve::from({curve(s5, "x1")})), Error);
}
