#include <gtest/gtest.h>

#include <random>

#include "tkit/teich.hpp"

using namespace tkit;
using namespace tkit::teich;

namespace {

Configuration rabbit_start(std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> radius(1.5, 20.0), jitter(-0.03, 0.03);
  double r = radius(rng);
  return spider_start(Rational(1, 6), r, {jitter(rng), jitter(rng), jitter(rng)});
}

double rabbit_residual(Complex c)
{
  Complex a = c * c + c;
  return std::abs((a * a + c) * (a * a + c) + c - a);
}

} // namespace

TEST(Collar, FixedPoint)
{
  // Independent root of sinh(x) sinh(x/2) = 1 by bisection on x.
  double lo = 0.5, hi = 2;
  for (int k = 0; k < 200; ++k) {
    double m = (lo + hi) / 2;
    (std::sinh(m) * std::sinh(m / 2) > 1 ? hi : lo) = m;
  }
  double x = collar_fixed_point();
  EXPECT_NEAR(x, lo, 1e-12);
  EXPECT_NEAR(collar_width(x), x, 1e-12);
  EXPECT_NEAR(collar_width(collar_width(x)), x, 1e-12);
}

TEST(Collar, ValueAtTwiceAsinhOne)
{
  // sinh(asinh 1) = 1, so s(2 asinh 1) = asinh 1.
  EXPECT_NEAR(collar_width(2 * std::asinh(1.0)), std::asinh(1.0), 1e-15);
}

TEST(Collar, StrictlyDecreasingOnAGrid)
{
  double prev = collar_width(1e-3);
  for (int k = 1; k < 10000; ++k) {
    double x = 1e-3 + k * (20.0 - 1e-3) / 9999;
    double s = collar_width(x);
    ASSERT_LT(s, prev) << x;
    prev = s;
  }
  EXPECT_GT(collar_width(1e-6), 14);
}

TEST(Collar, RejectsNonPositiveLengths)
{
  EXPECT_THROW(collar_width(0), Error);
  EXPECT_THROW(collar_width(-1), Error);
  EXPECT_THROW(collar_width(std::nan("")), Error);
}

TEST(Bipartition, CanonicalSideHoldsPointZero)
{
  EXPECT_EQ(bipartition({2, 3}, 5).side, (std::vector<int>{0, 1, 4}));
  EXPECT_EQ(all_bipartitions(4).size(), 3u);
  EXPECT_EQ(all_bipartitions(6).size(), 25u);
  EXPECT_THROW(bipartition({1}, 5), Error);
  std::vector<std::string> labels{"a", "b", "c", "d"};
  Bipartition b = parse_bipartition("b,c", labels);
  EXPECT_EQ(format(b, labels), "{a,d}|{b,c}");
  EXPECT_THROW(parse_bipartition("b,z", labels), Error);
}

TEST(LengthProxy, InvariantUnderSimilarities)
{
  std::vector<Complex> pts{{0.1, 0.2}, {-0.3, 0.1}, {2, 1}, {-1.5, 2.5}, {0.5, -3}};
  Bipartition b = bipartition({0, 1}, 5);
  double base = length_proxy(pts, b);
  for (Complex a : {Complex(2, 0), Complex(0, 1), Complex(-0.3, 0.7)}) {
    std::vector<Complex> moved;
    for (auto p : pts)
      moved.push_back(a * p + Complex(1, -2));
    EXPECT_NEAR(length_proxy(moved, b), base, 1e-9 * base);
  }
  // Inversion z -> 1/z is a Mobius map too.
  std::vector<Complex> inverted;
  for (auto p : pts)
    inverted.push_back(1.0 / p);
  EXPECT_NEAR(length_proxy(inverted, b), base, 1e-9 * base);
}

TEST(LengthProxy, HandlesInfinity)
{
  std::vector<Complex> pts{{0.01, 0}, {-0.01, 0}, {1, 0}, infinity()};
  double p = length_proxy(pts, bipartition({0, 1}, 4));
  // The curve around two points at distance 0.02 from each other is short.
  EXPECT_LT(p, 2 * std::numbers::pi * std::numbers::pi / std::log(50.0) * 1.01);
  EXPECT_GT(p, 0);
}

TEST(LengthProxy, ShrinksLikeOneOverLogEpsilon)
{
  Bipartition b = bipartition({0, 1}, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
    std::vector<Complex> pts{{0, 0}, {eps, 0}, {1, 0}, infinity()};
    double p = length_proxy(pts, b);
    EXPECT_LT(p, prev);
    EXPECT_NEAR(p * std::log(1 / eps), 2 * std::numbers::pi * std::numbers::pi, 0.05 * p * std::log(1 / eps));
    prev = p;
  }
}

TEST(LengthProxy, DetectsCollisions)
{
  std::vector<Complex> pts{{1, 0}, {1, 0}, {2, 0}, {3, 0}};
  try {
    length_proxy(pts, bipartition({0, 1}, 4));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
}

TEST(Spider, OrbitOfOneSixth)
{
  auto [angles, succ] = doubling_orbit(Rational(1, 6));
  EXPECT_EQ(angles, (std::vector<Rational>{Rational(1, 6), Rational(1, 3), Rational(2, 3)}));
  EXPECT_EQ(succ, (std::vector<int>{1, 2, 1}));
  auto [a, s] = doubling_orbit(Rational(7, 3));
  EXPECT_EQ(a, (std::vector<Rational>{Rational(1, 3), Rational(2, 3)}));
  EXPECT_EQ(s, (std::vector<int>{1, 0}));
}

TEST(Spider, FixedConfigurationIsFixed)
{
  const Complex c(0, 1);
  Configuration conf = spider_start(Rational(1, 6), 2.0);
  conf.points = {c, c * c + c, (c * c + c) * (c * c + c) + c, infinity()};
  conf.legs = conf.points;
  IterationState s = spider_step(start(conf, {}));
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_LT(std::abs(s.config.points[j] - conf.points[j]), 1e-12) << j;
  EXPECT_TRUE(is_infinite(s.config.points[3]));
}

TEST(Spider, StepIsDeterministicAndGaugeInvariant)
{
  std::mt19937_64 rng(7);
  Configuration conf = rabbit_start(rng);
  IterationState a = spider_step(spider_step(start(conf, {})));
  IterationState b = spider_step(spider_step(start(conf, {})));
  EXPECT_EQ(a.config.points, b.config.points);

  Configuration moved = affine(conf, Complex(0.3, -1.7), Complex(4, 2));
  IterationState m = spider_step(spider_step(start(moved, {})));
  auto x = renormalized(a.config), y = renormalized(m.config);
  for (std::size_t j = 0; j + 1 < x.size(); ++j)
    EXPECT_LT(std::abs(x[j] - y[j]), 1e-12) << j;
}

TEST(Spider, RabbitFromRandomStartsConvergesToI)
{
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    SCOPED_TRACE(trial);
    IterationState s = run(start(rabbit_start(rng), {}), 200, [](IterationState x, const Thresholds &t) {
      return spider_step(std::move(x), t);
    });
    IterationVerdict v = classify_iteration(s);
    ASSERT_EQ(v.status, Status::Converged);
    ASSERT_TRUE(v.parameter);
    EXPECT_LE(s.history.size(), 201u);
    EXPECT_LT(rabbit_residual(*v.parameter), 1e-8);
    EXPECT_LT(std::abs(*v.parameter - Complex(0, 1)), 1e-6);
  }
}

TEST(Classify, HalvingProxyIsDegenerate)
{
  IterationState s;
  s.config = spider_start(Rational(1, 6), 2.0);
  s.tracked = {bipartition({0, 1}, 4), bipartition({0, 2}, 4)};
  s.proxies.resize(2);
  for (int n = 0; n <= 30; ++n) {
    s.history.push_back(s.config.points);
    s.proxies[0].push_back(std::ldexp(1.0, -n));
    s.proxies[1].push_back(5.0 + (n % 2));
    if (n > 0)
      s.distances.push_back(0.1);
  }
  IterationVerdict v = classify_iteration(s);
  EXPECT_EQ(v.status, Status::Degenerate);
  EXPECT_EQ(v.shrinking, (std::vector<int>{0}));
  ASSERT_TRUE(v.floor);
  EXPECT_EQ(*v.floor, 5.0);
}

TEST(Classify, NoStepsIsIndeterminate)
{
  IterationState s = start(spider_start(Rational(1, 6), 2.0), {bipartition({0, 1}, 4)});
  EXPECT_EQ(classify_iteration(s).status, Status::Indeterminate);
}

TEST(Classify, ConstantConfigurationConverges)
{
  IterationState s = start(spider_start(Rational(1, 6), 2.0), {});
  s.history.push_back(s.config.points);
  s.distances.push_back(0);
  EXPECT_EQ(classify_iteration(s).status, Status::Converged);
}

#if TKIT_ENABLE_MATING

TEST(Mating, ObstructedSelfMatingDegenerates)
{
  Configuration c = mating_start(Rational(1, 6), Rational(1, 6), 0.5);
  ASSERT_EQ(c.points.size(), 6u);
  IterationState s = run(start(c, all_bipartitions(6)), 100, [](IterationState x, const Thresholds &t) {
    return mating_step(std::move(x), t);
  });
  IterationVerdict v = classify_iteration(s);
  ASSERT_EQ(v.status, Status::Degenerate);
  ASSERT_FALSE(v.shrinking.empty());
  EXPECT_LE(s.history.size(), 101u);
  ASSERT_TRUE(v.floor);
  for (int k : v.shrinking) {
    const auto &p = s.proxies[static_cast<std::size_t>(k)];
    EXPECT_LT(p.back(), *v.floor) << format(s.tracked[static_cast<std::size_t>(k)], s.config.labels);
  }
}

TEST(Mating, TrivialSecondFactorIsTheSpider)
{
  Configuration m = mating_start(Rational(1, 6), Rational(0), 2.0);
  ASSERT_EQ(m.points.size(), 4u);
  EXPECT_TRUE(is_infinite(m.points[3]));
  Configuration sp = spider_start(Rational(1, 6), 2.0);
  IterationState a = start(m, {}), b = start(sp, {});
  for (int n = 0; n < 5; ++n) {
    a = mating_step(std::move(a));
    b = spider_step(std::move(b));
  }
  auto x = renormalized(a.config), y = renormalized(b.config);
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_LT(std::abs(x[j] - y[j]), 1e-10) << j;
}

#endif
