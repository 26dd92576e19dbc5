#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>

#include "ergolab/error.hpp"
#include "ergolab/fixed.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/random.hpp"
#include "ergolab/rational.hpp"
#include "ergolab/sets.hpp"
#include "oracles.hpp"

using namespace ergolab;

TEST(Fixed, AdditionWrapsModuloOne) {
  const Fixed a = Fixed::from_double(0.75);
  EXPECT_EQ((a + a).to_double(), 0.5);
  EXPECT_EQ((-a).to_double(), 0.25);
  EXPECT_EQ(Fixed::ratio(1, 3).times(3), Fixed::from_raw(~u128{0}));
}

TEST(Fixed, RepeatedAdditionEqualsMultiple) {
  const Fixed g = Angle::golden().value;
  Fixed x;
  for (int i = 0; i < 100000; ++i) x += g;
  EXPECT_EQ(x, g.times(100000));
}

TEST(Fixed, HexRoundTrip) {
  const Fixed g = Angle::golden().value;
  EXPECT_EQ(g.to_hex().size(), 32u);
  EXPECT_EQ(Fixed::from_hex(g.to_hex()), g);
  EXPECT_THROW(Fixed::from_hex("abc"), Error);
}

TEST(Fixed, KnownAngles) {
  EXPECT_NEAR(Angle::golden().value.to_double(), static_cast<double>(oracle::golden()), 1e-16);
  EXPECT_NEAR(Angle::silver().value.to_double(), std::sqrt(2.0) - 1, 3e-16);
  EXPECT_NEAR(Angle::sqrt_frac(3).value.to_double(), std::sqrt(3.0) - 1, 3e-16);
  EXPECT_TRUE(Angle::golden().irrational);
  EXPECT_THROW(Angle::sqrt_frac(9), Error);
}

TEST(Fixed, UnitPhaseAndRoots) {
  const auto z = unit_phase(Fixed::from_double(0.25));
  EXPECT_NEAR(z.real(), 0.0, 1e-15);
  EXPECT_NEAR(z.imag(), 1.0, 1e-15);
  EXPECT_TRUE(is_root_of_unity(Fixed::ratio(1, 8), 8));
  EXPECT_FALSE(is_root_of_unity(Fixed::ratio(1, 8), 7));
  EXPECT_FALSE(is_root_of_unity(Angle::golden().value, 1000));
}

TEST(Rational, ParsesForms) {
  EXPECT_EQ(parse_rational("3/10"), Rational(3, 10));
  EXPECT_EQ(parse_rational("0.3"), Rational(3, 10));
  EXPECT_EQ(parse_rational("-2"), Rational(-2));
  EXPECT_THROW(parse_rational("1/0"), Error);
  EXPECT_THROW(parse_rational("x"), Error);
  EXPECT_EQ(exact_rational(0.5), Rational(1, 2));
  EXPECT_EQ(to_string(Rational(6, 4)), "3/2");
}

TEST(Random, CounterBasedAndUniform) {
  EXPECT_EQ(hash64(7, 3), hash64(7, 3));
  EXPECT_NE(hash64(7, 3), hash64(7, 4));
  EXPECT_NE(derive_seed(7, 1), derive_seed(7, 2));
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(11, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 5e-3);
}

TEST(Parallel, EveryIndexOnceAndErrorsPropagate) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw Error(ErrorCode::resource, "boom");
               }),
               Error);
}

TEST(Parallel, ThreadBudgetReadsEnvironment) {
  ::setenv("ERGOLAB_THREADS", "3", 1);
  EXPECT_EQ(thread_budget(), 3u);
  ::setenv("ERGOLAB_THREADS", "junk", 1);
  EXPECT_GE(thread_budget(), 1u);
  ::unsetenv("ERGOLAB_THREADS");
}

TEST(Sets, IntervalUnionAlgebra) {
  const IntervalUnion a({Interval::from_doubles(0, 0.5)});
  const IntervalUnion b({Interval::from_doubles(0.25, 0.75)});
  EXPECT_EQ(a.unite(b).measure(), Rational(3, 4));
  EXPECT_EQ(a.intersect(b).measure(), Rational(1, 4));
  EXPECT_EQ(a.complement().measure(), Rational(1, 2));
  EXPECT_EQ(IntervalUnion::full().measure(), Rational(1));
  // wrapping arc [0.75, 0.25)
  const IntervalUnion w({Interval::from_doubles(0.75, 0.25)});
  EXPECT_EQ(w.measure(), Rational(1, 2));
  EXPECT_TRUE(w.contains(Fixed::from_double(0.9)));
  EXPECT_TRUE(w.contains(Fixed::from_double(0.1)));
  EXPECT_FALSE(w.contains(Fixed::from_double(0.5)));
  EXPECT_EQ(a.shifted(Fixed::from_double(0.75)), w);
}

TEST(Sets, ContainsDispatchesOnPointType) {
  const auto arc = MeasurableSet::arc(0, 0.5);
  EXPECT_TRUE(contains(arc, Point::circle(Fixed::from_double(0.25))));
  EXPECT_FALSE(contains(arc, Point::circle(Fixed::from_double(0.5))));
  const auto tagged = MeasurableSet::tagged(1, arc);
  EXPECT_TRUE(contains(tagged, Point::tagged(1, Point::circle(Fixed::from_double(0.1)))));
  EXPECT_FALSE(contains(tagged, Point::tagged(0, Point::circle(Fixed::from_double(0.1)))));
}
