#include <gtest/gtest.h>

#include "ergolab/error.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/random.hpp"
#include "ergolab/system.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {
Point at(double t) { return Point::circle(Fixed::from_double(t)); }
}  // namespace

TEST(Observable, CharacterAndIndicator) {
  const auto chi = Observable::character(2);
  EXPECT_NEAR(std::abs(chi(at(0.125)) - Complex(0, 1)), 0.0, 1e-15);
  EXPECT_EQ(chi.sup_norm(), 1.0);
  EXPECT_FALSE(chi.real_valued());
  const auto ind = Observable::indicator(MeasurableSet::arc(0, 0.5));
  EXPECT_EQ(ind(at(0.2)), Complex(1));
  EXPECT_EQ(ind(at(0.7)), Complex(0));
  ASSERT_TRUE(ind.simple());
}

TEST(Observable, BitWindowReadsLittleEndianSymbols) {
  const System d = System::doubling(3);
  const Point x = d.sample(1);
  const auto& s = std::get<SeqCoord>(x.v);
  const auto f = Observable::bit_window(1, 2, {0, 1, 2, 3});
  EXPECT_EQ(f(x).real(), s.symbol(1) + 2 * s.symbol(2));
  EXPECT_FALSE(f.accepts(System::rotation(Angle::golden()).space()));
  EXPECT_THROW(Observable::bit_window(0, 0, {0, 1}), Error);
}

TEST(Observable, LinearTensorSupNorms) {
  const auto lin = Observable::linear({{2.0, Observable::character(1)}, {-1.0, Observable::constant(3.0)}});
  EXPECT_LE(lin.sup_norm(), 5.0 + 1e-12);
  EXPECT_NEAR(std::abs(lin(at(0)) - Complex(-1)), 0.0, 1e-12);
  const auto t = Observable::tensor({Observable::character(1), Observable::first_bit()});
  EXPECT_TRUE(t.accepts(System::product({System::rotation(Angle::golden()), System::doubling(1)}, 0).space()));
}

TEST(Integrate, ClosedForms) {
  const System rot = System::rotation(Angle::golden(), 1);
  EXPECT_EQ(*integrate(Observable::indicator(MeasurableSet::arc(0, 0.25)), rot), Complex(0.25));
  EXPECT_EQ(*integrate(Observable::character(3), rot), Complex(0));
  const System b = System::bernoulli(Rational(4, 5), 1);
  EXPECT_NEAR(integrate(Observable::bit_window(0, 1, {-1, 1}), b)->real(), 0.6, 1e-15);
}

TEST(SimpleApprox, ErrorBoundedByTwoOverK) {
  const auto f = Observable::linear({{0.7, Observable::character(1)}, {0.3, Observable::character(-2)}});
  for (std::uint64_t k : {4u, 10u, 100u}) {
    const auto fk = simple_approx(f, k);
    ASSERT_TRUE(fk.simple());
    for (int i = 0; i < 2000; ++i) {
      const auto x = at(uniform01(k, i));
      ASSERT_LE(std::abs(f(x) - fk(x)), 2.0 / static_cast<double>(k));
      // values land on the 1/k grid
      const double re = fk(x).real() * static_cast<double>(k);
      ASSERT_NEAR(re, std::round(re), 1e-9);
    }
  }
}

TEST(SimpleApprox, UnboundedInputRejected) {
  EXPECT_THROW(simple_approx(Observable::power(-0.5), 4), Error);
}

TEST(Truncate, ClipRuleL1MatchesQuadrature) {
  const auto g = Observable::power(-0.5);
  for (double k : {2.0, 5.0, 30.0}) {
    const auto err = truncation_l1_error(g, k);
    ASSERT_TRUE(err.has_value());
    EXPECT_NEAR(*err, 1.0 / k, 1e-12);
    // y = t^2 removes the singularity
    const double q = oracle::gauss_legendre(
        [&](double t) { return 2 * t * std::max(0.0, 1.0 / t - k); }, 0.0, 1.0, 4000);
    EXPECT_NEAR(q, 1.0 / k, 1e-6);
  }
  const auto gk = truncate(g, 4.0);
  EXPECT_TRUE(gk.bounded());
  EXPECT_NEAR(gk(at(0.01)).real(), 4.0, 1e-12);
  EXPECT_NEAR(gk(at(0.25)).real(), 2.0, 1e-12);
}

TEST(Truncate, IndicatorRule) {
  const auto g = Observable::power(-0.5);
  EXPECT_NEAR(*truncation_l1_error(g, 4.0, TruncationRule::indicator), 2.0 / 4.0, 1e-12);
  EXPECT_EQ(truncate(g, 4.0, TruncationRule::indicator)(at(0.01)), Complex(0));
}

TEST(Kronecker, RotationCharacterIsAllDiscrete) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto split = kronecker_split(Observable::character(1), rot);
  EXPECT_NEAR(split.residual_norm_bound, 0.0, 1e-12);
}

TEST(Orbit, ChecksCompatibility) {
  const System rot = System::rotation(Angle::golden(), 1);
  EXPECT_THROW(orbit(rot, rot.sample(0), Observable::first_bit(), 10), Error);
  const auto v = orbit(rot, at(0), Observable::character(1), 3);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_NEAR(std::arg(v[0]), std::arg(unit_phase(Angle::golden().value)), 1e-12);
}
