#include <gtest/gtest.h>

#include "ergolab/spectral.hpp"
#include "oracles.hpp"

using namespace ergolab;

TEST(Autocorrelation, RotationCharacterIsExactPhase) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto est = autocorrelation(rot, Observable::character(1), 16, 1000, {rot.sample(0)});
  ASSERT_TRUE(est.phases.has_value());
  for (std::int64_t n = -16; n <= 16; ++n) EXPECT_NEAR(std::abs(est.at(n)), 1.0, 1e-12);
  for (double w : est.wiener_means) EXPECT_NEAR(w, 1.0, 1e-9);
  EXPECT_EQ(est.wiener.verdict, Continuity::atomic);
}

TEST(Autocorrelation, MatchesNaiveSum) {
  const System d = System::doubling(3);
  const auto f = Observable::bit_window(0, 2, {-1.5, -0.5, 0.5, 1.5});
  const Point x = d.sample(0);
  const std::size_t maxlag = 8, length = 4000;
  auto v = orbit(d, x, f, maxlag + length);
  v.insert(v.begin(), Complex{});
  const auto want = oracle::autocorrelation(v, maxlag, length);
  const auto est = autocorrelation(d, f, static_cast<std::int64_t>(maxlag), length, {x});
  for (std::size_t n = 0; n <= maxlag; ++n) {
    EXPECT_NEAR(std::abs(est.at(static_cast<std::int64_t>(n)) - want[n]), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(est.at(-static_cast<std::int64_t>(n)) - std::conj(want[n])), 0.0, 1e-12);
  }
}

TEST(Wiener, ShiftObservableIsContinuous) {
  const System d = System::doubling(3);
  std::vector<Point> xs = {d.sample(0), d.sample(1)};
  const auto est = autocorrelation(d, Observable::centered_first_bit(), 64, 200000, xs);
  EXPECT_EQ(est.wiener.verdict, Continuity::continuous);
  EXPECT_LT(est.wiener.last_value, 1e-2);
}

TEST(Wiener, FromGammaAndTest) {
  auto est = spectral_from_gamma({1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, 1.0, 1u << 30);
  EXPECT_NEAR(est.wiener_means.back(), 1.0 / 17.0, 1e-15);
  EXPECT_EQ(wiener_test(est, 0.1).verdict, Continuity::continuous);
}

TEST(PairTest, AgreesWithWienerOnRotation) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto f = Observable::character(1);
  const auto est = autocorrelation(rot, f, 16, 1000, {rot.sample(0)});
  const auto pc = pair_correlation_test(rot, f, {{rot.sample(1), rot.sample(2)}}, {4096});
  EXPECT_FALSE(pc.orthocomplement_consistent);
  EXPECT_TRUE(verdicts_agree(est.wiener, pc));
}
