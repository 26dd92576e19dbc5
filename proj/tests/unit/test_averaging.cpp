#include <gtest/gtest.h>

#include "ergolab/averaging.hpp"
#include "ergolab/error.hpp"
#include "ergolab/random.hpp"
#include "oracles.hpp"

using namespace ergolab;

TEST(Checkpoints, Grids) {
  EXPECT_EQ(geometric_checkpoints(4, 32), (Checkpoints{4, 8, 16, 32}));
  EXPECT_EQ(default_checkpoints().front(), 1024u);
  EXPECT_EQ(default_checkpoints().back(), 1u << 20);
  const auto c = checkpoints_up_to(1000000);
  EXPECT_EQ(c.back(), 1000000u);
  EXPECT_EQ(c.size(), 11u);
}

TEST(Birkhoff, RotationIndicatorAgreesWithLongDouble) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto f = Observable::indicator(MeasurableSet::arc(0, 0.5));
  const double x0 = 0.123;
  const Point x = Point::circle(Fixed::from_double(x0));
  const auto r = birkhoff_average(rot, x, f, {1000, 10000, 100000});
  const double want = oracle::rotation_indicator_average(oracle::golden(), x0, 0, 0.5, 100000);
  EXPECT_NEAR(r.averages.back().real(), want, 1e-12);
  EXPECT_EQ(r.verdict, Verdict::converged);
  ASSERT_TRUE(r.reference.has_value());
  EXPECT_EQ(*r.reference, Complex(0.5));
}

TEST(Birkhoff, StartsAtNEqualsOne) {
  const System rot = System::rotation(Angle::rational(Fixed::ratio(1, 2)), 1);
  const auto f = Observable::indicator(MeasurableSet::arc(0, 0.25));
  // x = 0: T x = 1/2 (miss), T^2 x = 0 (hit)
  const auto r = birkhoff_average(rot, Point::circle(Fixed()), f, {1, 2});
  EXPECT_EQ(r.averages[0], Complex(0));
  EXPECT_EQ(r.averages[1], Complex(0.5));
}

TEST(Birkhoff, NonErgodicHasNoReference) {
  const System rot = System::rotation(Angle::rational(Fixed::ratio(1, 3)), 1);
  const auto r = birkhoff_average(rot, rot.sample(0), Observable::character(1), {3, 6});
  EXPECT_FALSE(r.reference.has_value());
}

TEST(Birkhoff, BudgetEnforced) {
  const System rot = System::rotation(Angle::golden(), 1);
  EXPECT_THROW(birkhoff_average(rot, rot.sample(0), Observable::character(1), {kCheckpointBudget + 1}), Error);
}

TEST(Summarize, OscillatingSeriesIsNotConverged) {
  std::vector<Complex> terms;
  // blocks of +1 and -1 with doubling lengths keep the average swinging
  for (int b = 0; b < 16; ++b)
    for (int i = 0; i < (1 << b); ++i) terms.push_back(b % 2 ? -1.0 : 1.0);
  const auto r = summarize(terms, geometric_checkpoints(1024, 32768), 1.0);
  EXPECT_NE(r.verdict, Verdict::converged);
  EXPECT_GT(r.tail_oscillation, 0.1);
}

TEST(Weighted, ReturnTimesTimesFirstBit) {
  const System rot = System::rotation(Angle::golden(), 1);
  const System d = System::doubling(2);
  const auto w = WeightSequence::return_times(rot, rot.sample(0), MeasurableSet::arc(0, 0.5), 200000);
  const auto r = weighted_average(w, d, d.sample(0), Observable::first_bit(), {50000, 100000, 200000});
  EXPECT_NEAR(r.averages.back().real(), 0.25, 5e-3);
  EXPECT_EQ(w.regenerate().values, w.values);
}

TEST(Weighted, EigenWeightsAreExactPhases) {
  const auto w = WeightSequence::eigen(Angle::golden(), 10);
  for (std::size_t n = 1; n <= 10; ++n)
    EXPECT_EQ(w.values[n - 1], unit_phase(Angle::golden().value.times(static_cast<std::int64_t>(n))));
  EXPECT_THROW(weighted_average(w, System::doubling(1), System::doubling(1).sample(0), Observable::first_bit(), {20}),
               Error);
}

TEST(PairCorrelation, IndependentShiftPairsDecay) {
  const System d = System::doubling(7);
  const auto f = Observable::centered_first_bit();
  const auto a = pair_correlation_averages(d, f, d.sample(1), d.sample(2), {1 << 16});
  EXPECT_LT(std::abs(a.back()), 5 * 0.25 / std::sqrt(65536.0));
}

TEST(Cauchy, CertifiesApproximationLadder) {
  const System rot = System::rotation(Angle::golden(), 1);
  const System d = System::doubling(2);
  const auto f = Observable::character(1);
  const auto fam = approximate_first(rot, rot.sample(0), f, d, d.sample(0), Observable::first_bit(), {4, 16, 64}, 1 << 14);
  const auto rep = cauchy_diagnostic(fam, geometric_checkpoints(1024, 1 << 14), 0.2);
  EXPECT_TRUE(rep.certified);
  ASSERT_TRUE(rep.chosen_level.has_value());
}

TEST(Egorov, KeepsEventuallyCloseCandidates) {
  const Checkpoints grid = {10, 20, 40};
  const std::vector<std::vector<Complex>> series = {{0.5, 0.01, 0.0}, {0.0, 0.0, 0.0}, {0.3, 0.3, 0.3}};
  const auto r = egorov_set(series, {0.0, 0.0, 0.0}, grid, 0.1, 0.5);
  EXPECT_EQ(r.last_bad, (std::vector<int>{0, -1, 2}));
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{0, 1}));
  // candidate 0 is bad at 10 only, so it counts from N_delta = 10 onward
  EXPECT_EQ(r.n_delta, 10u);
}

TEST(Cover, GoldenHalfNeedsThreeImages) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto b = MeasurableSet::arc(0, 0.5);
  const auto r = union_cover(rot, b, Rational(1, 10));
  EXPECT_EQ(r.k, 3u);
  EXPECT_GT(r.measure, Rational(9, 10));
  EXPECT_LE(r.previous_measure, Rational(9, 10));
  for (std::uint64_t k = 1; k <= 4; ++k)
    EXPECT_NEAR(to_double(image_union_measure(rot, b, k)),
                static_cast<double>(oracle::rotated_union_measure(oracle::golden(), 0, 0.5, k)), 1e-15);
}

TEST(Psi, VisitsToCoverApproachOne) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto b = MeasurableSet::arc(0, 0.5);
  std::vector<Point> ys;
  for (int i = 0; i < 4; ++i) ys.push_back(rot.sample(i));
  const auto r = psi_average_check(rot, b, 3, ys, 0.5, geometric_checkpoints(1024, 65536));
  EXPECT_EQ(r.good.size(), 4u);
}
