#include <gtest/gtest.h>

#include <algorithm>

#include "fixture_path.hpp"
#include "oracles.hpp"
#include "tkit/io.hpp"
#include "tkit/recursion.hpp"

using namespace tkit;
using namespace oracle;

namespace {

BranchedCoverRecursion z2pi() { return io::load_recursion(fixture("z2pi.json")); }

// z^2 on [0, inf, 1].
BranchedCoverRecursion square_map()
{
  MarkedSphere s({"0", "inf", "1"});
  BranchedCoverRecursion r{2, s, s, {}};
  r.generators.push_back({{1, 0}, {{}, s.parse("x1")}});
  r.generators.push_back({{1, 0}, {s.parse("X1"), s.parse("X3")}});
  r.generators.push_back({{0, 1}, {s.parse("x3"), {}}});
  return r;
}

} // namespace

TEST(Validate, SquareMapPasses)
{
  auto rep = validate(square_map());
  EXPECT_TRUE(rep.ok());
  EXPECT_TRUE(rep.find("riemann_hurwitz")->pass);
}

TEST(Validate, RiemannHurwitzFailure)
{
  auto r = square_map();
  r.generators[2].perm = {1, 0};
  auto rep = validate(r);
  EXPECT_FALSE(rep.ok());
  EXPECT_FALSE(rep.find("riemann_hurwitz")->pass);
  EXPECT_EQ(rep.find("riemann_hurwitz")->witness, "sum 3 != 2");
}

TEST(Validate, IntransitiveWitness)
{
  auto r = square_map();
  for (auto &g : r.generators)
    g.perm = {0, 1};
  auto rep = validate(r);
  EXPECT_FALSE(rep.find("transitivity")->pass);
  EXPECT_EQ(rep.find("transitivity")->witness, "{1},{2}");
}

TEST(Validate, CorruptionsRejected)
{
  auto r = square_map();
  r.generators[0].perm = {0, 0};
  EXPECT_FALSE(validate(r).find("permutations")->pass);
  r = square_map();
  r.generators[1].lifts[0] = word::parse("x1");
  EXPECT_FALSE(validate(r).ok());
  r = square_map();
  r.generators[0].lifts[1] = word::parse("X1");
  auto rep = validate(r);
  EXPECT_FALSE(rep.ok());
}

TEST(Validate, Z2piFixture)
{
  auto r = z2pi();
  auto rep = validate(r);
  for (const auto &c : rep.checks)
    EXPECT_TRUE(c.pass) << c.name << ": " << c.witness;
}

TEST(Portrait, Z2pi)
{
  Portrait p = portrait(z2pi());
  // i -> i-1 -> -i -> i-1, inf fixed with degree 2.
  EXPECT_EQ(p.entry(1), (PortraitEntry{2, 1}));
  EXPECT_EQ(p.entry(2), (PortraitEntry{3, 1}));
  EXPECT_EQ(p.entry(3), (PortraitEntry{2, 1}));
  EXPECT_EQ(p.entry(4), (PortraitEntry{4, 2}));
  ASSERT_EQ(p.unmarked_critical.size(), 1u);
  EXPECT_EQ(p.unmarked_critical[0], (UnmarkedCritical{1, 2}));
}

TEST(Portrait, IdentityRecursion)
{
  MarkedSphere s({"a", "b", "c", "d"});
  Portrait p = portrait(identity_recursion(s));
  for (int j = 1; j <= 4; ++j)
    EXPECT_EQ(p.entry(j), (PortraitEntry{j, 1}));
  auto sig = orbifold_signature(p);
  EXPECT_EQ(sig.chi, Rational(2));
  EXPECT_FALSE(is_hyperbolic(sig));
}

TEST(Orbifold, Z2piSignature)
{
  auto sig = orbifold_signature(portrait(z2pi()));
  EXPECT_EQ(sig.at("i"), (Weight{false, 2}));
  EXPECT_EQ(sig.at("i-1"), (Weight{false, 2}));
  EXPECT_EQ(sig.at("-i"), (Weight{false, 2}));
  EXPECT_TRUE(sig.at("inf").infinite);
  EXPECT_EQ(sig.chi, Rational(-1, 2));
  EXPECT_TRUE(is_hyperbolic(sig));
}

TEST(Orbifold, MatchesBruteForce)
{
  for (const auto &r : {z2pi(), square_map()}) {
    Portrait p = portrait(r);
    auto sig = orbifold_signature(p);
    auto brute = brute_weights(p);
    for (std::size_t k = 0; k < brute.size(); ++k) {
      if (brute[k] == 0)
        EXPECT_TRUE(sig.values[k].infinite);
      else
        EXPECT_EQ(sig.values[k], (Weight{false, brute[k]}));
    }
  }
}

TEST(Orbifold, SquareMapIsNotHyperbolic)
{
  auto sig = orbifold_signature(portrait(square_map()));
  EXPECT_TRUE(sig.at("0").infinite);
  EXPECT_TRUE(sig.at("inf").infinite);
  EXPECT_EQ(sig.at("1"), (Weight{false, 1}));
  EXPECT_EQ(sig.chi, Rational(0));
}

TEST(Reorder, PreservesValidityAndWeights)
{
  auto r = z2pi();
  auto base = orbifold_signature(portrait(r));
  std::vector<int> order{3, 1, 0, 2};
  auto q = reorder_punctures(r, order);
  EXPECT_TRUE(validate(q).ok());
  EXPECT_EQ(q.source.label(1), "inf");
  auto sig = orbifold_signature(portrait(q));
  for (const auto &l : base.labels)
    EXPECT_EQ(sig.at(l), base.at(l));
  EXPECT_EQ(sig.chi, base.chi);
}

TEST(Compose, DegreeAndRiemannHurwitz)
{
  auto r = z2pi();
  auto rr = compose(r, r);
  EXPECT_EQ(rr.degree, 4);
  auto rep = validate(rr);
  EXPECT_TRUE(rep.ok());
  long rh = 0;
  for (const auto &g : rr.generators)
    for (const auto &c : perm::cycles(g.perm))
      rh += static_cast<long>(c.size()) - 1;
  EXPECT_EQ(rh, 6);
}

TEST(Compose, PortraitComposes)
{
  for (const auto &r : {z2pi(), square_map()}) {
    Portrait p = portrait(r);
    Portrait pp = portrait(compose(r, r));
    for (int x = 1; x <= r.source.size(); ++x) {
      const auto &e1 = p.entry(x);
      const auto &e2 = p.entry(e1.image);
      EXPECT_EQ(pp.entry(x), (PortraitEntry{e2.image, e1.degree * e2.degree}));
    }
  }
}

TEST(Compose, IdentityIsNeutral)
{
  auto r = z2pi();
  auto id = identity_recursion(r.source);
  auto left = compose(id, r);
  auto right = compose(r, id);
  for (std::size_t i = 0; i < r.generators.size(); ++i) {
    EXPECT_EQ(left.generators[i].perm, r.generators[i].perm);
    EXPECT_EQ(right.generators[i].perm, r.generators[i].perm);
    for (int s = 0; s < 2; ++s) {
      EXPECT_EQ(r.source.normal_form(left.generators[i].lifts[s]), r.generators[i].lifts[s]);
      EXPECT_EQ(r.source.normal_form(right.generators[i].lifts[s]), r.generators[i].lifts[s]);
    }
  }
  EXPECT_THROW(compose(r, identity_recursion(MarkedSphere({"a", "b", "c"}))), Error);
}

TEST(Io, RoundTripIsByteStable)
{
  auto text = io::read_file(fixture("z2pi.json"));
  auto r = io::recursion_from_json(io::parse_json(text, "z2pi"));
  std::string once = io::dump(io::to_json(r));
  std::string twice = io::dump(io::to_json(io::recursion_from_json(io::parse_json(once, "again"))));
  EXPECT_EQ(once, twice);
  EXPECT_THROW(io::parse_json(text.substr(0, text.size() / 2), "truncated"), Error);
}
