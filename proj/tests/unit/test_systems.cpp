#include <gtest/gtest.h>

#include "ergolab/error.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/system.hpp"
#include "oracles.hpp"

using namespace ergolab;

TEST(Rotation, AdvanceMatchesSteps) {
  const System rot = System::rotation(Angle::golden(), 1);
  Point x = rot.sample(0), y = x;
  for (int i = 0; i < 1000; ++i) rot.step(y);
  EXPECT_EQ(rot.advance(x, 1000), y);
  rot.step_inverse(y);
  EXPECT_EQ(rot.advance(x, 999), y);
  EXPECT_TRUE(rot.ergodic());
  EXPECT_TRUE(rot.invertible());
  EXPECT_FALSE(rot.mixing());
}

TEST(Rotation, RationalAngleIsNotErgodic) {
  EXPECT_FALSE(System::rotation(Angle::rational(Fixed::ratio(1, 4))).ergodic());
}

TEST(Rotation, PreimageKeepsMeasure) {
  const System rot = System::rotation(Angle::golden(), 1);
  const auto b = MeasurableSet::arc(0.1, 0.35);
  for (int j : {1, 5, -3}) EXPECT_EQ(rot.measure(rot.preimage(b, j)), rot.measure(b));
}

TEST(Shift, DoublingSymbolsAndAdvance) {
  const System d = System::doubling(5);
  Point x = d.sample(3);
  const auto first = std::get<SeqCoord>(x.v).symbol(4);
  d.step(x);
  d.step(x);
  d.step(x);
  d.step(x);
  EXPECT_EQ(std::get<SeqCoord>(x.v).symbol(0), first);
  EXPECT_EQ(d.advance(d.sample(3), 4), x);
  EXPECT_TRUE(d.mixing());
  EXPECT_FALSE(d.invertible());
  EXPECT_THROW(d.step_inverse(x), Error);
}

TEST(Shift, CylinderMeasures) {
  const System b = System::bernoulli(Rational(4, 5), 1);
  EXPECT_EQ(b.measure({Cylinder{0, {1, 1, 0}}}), Rational(16, 125));
  EXPECT_EQ(b.measure(b.preimage({Cylinder{0, {1, 0}}}, 3)), Rational(4, 25));
  EXPECT_EQ(b.cylinder_union_measure({Cylinder{0, {1}}, Cylinder{0, {0}}}), Rational(1));
  // overlapping cylinders are not double counted
  EXPECT_EQ(b.cylinder_union_measure({Cylinder{0, {1}}, Cylinder{0, {1, 1}}}), Rational(4, 5));
}

TEST(Shift, BernoulliFrequencies) {
  const System b = System::bernoulli(Rational(4, 5), 2);
  const auto x = b.sample(0);
  std::uint64_t ones = 0;
  for (int i = 0; i < 100000; ++i) ones += std::get<SeqCoord>(x.v).symbol(i);
  EXPECT_NEAR(ones / 1e5, 0.8, 5e-3);
}

TEST(Markov, StationaryLawIsSolvedExactly) {
  const std::vector<std::vector<Rational>> m = {{Rational(1, 2), Rational(1, 2)}, {Rational(1, 4), Rational(3, 4)}};
  const System s = System::markov(m, 1);
  EXPECT_EQ(s.stationary()[0], Rational(1, 3));
  EXPECT_EQ(s.stationary()[1], Rational(2, 3));
  EXPECT_THROW(System::markov(m, 1, std::vector<Rational>{Rational(1, 2), Rational(1, 2)}), Error);
  EXPECT_EQ(s.measure({Cylinder{0, {1, 1}}}), Rational(1, 2));
}

TEST(Product, StepsComponentwise) {
  const System rot = System::rotation(Angle::golden(), 1);
  const System d = System::doubling(2);
  const System p = System::product({rot, d}, 3);
  Point x = p.sample(0);
  const auto parts = std::get<TupleCoord>(x.v).parts;
  p.step(x);
  Point a = parts[0], b = parts[1];
  rot.step(a);
  d.step(b);
  EXPECT_EQ(std::get<TupleCoord>(x.v).parts[0], a);
  EXPECT_EQ(std::get<TupleCoord>(x.v).parts[1], b);
}

TEST(NaturalExtension, CommutesWithProjection) {
  const System d = System::doubling(4);
  const auto ext = natural_extension(d);
  EXPECT_TRUE(ext.system.invertible());
  for (std::uint64_t i = 0; i < 200; ++i) {
    Point x = ext.system.sample(i);
    Point base = ext.project(x);
    ext.system.step(x);
    d.step(base);
    ASSERT_EQ(ext.project(x), base);
  }
}

TEST(NaturalExtension, InverseUndoesStep) {
  const auto ext = natural_extension(System::bernoulli(Rational(1, 3), 2));
  Point x = ext.system.sample(9);
  const Point orig = x;
  ext.system.step(x);
  ext.system.step_inverse(x);
  EXPECT_EQ(x, orig);
}

TEST(DisjointUnion, ComponentsAndMeasures) {
  const System u = System::disjoint_union({{Rational(3, 10), System::rotation(Angle::golden(), 1)},
                                           {Rational(7, 10), System::rotation(Angle::silver(), 2)}},
                                          3);
  EXPECT_FALSE(u.ergodic());
  const auto comps = ergodic_components(u);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0].weight + comps[1].weight, Rational(1));
  EXPECT_EQ(u.measure(MeasurableSet::tagged(1, MeasurableSet::arc(0, 0.5))), Rational(7, 20));
  EXPECT_EQ(u.measure({ComponentSet::of({0})}), Rational(3, 10));
  EXPECT_THROW(System::disjoint_union({{Rational(1, 2), System::doubling(1)}}, 1), Error);
}

TEST(Restricted, ConditionsOnInvariantSet) {
  const System u = System::disjoint_union({{Rational(1, 4), System::rotation(Angle::golden(), 1)},
                                           {Rational(3, 4), System::doubling(2)}},
                                          3);
  const System r = atom_restrict(u, {ComponentSet::of({1})});
  EXPECT_EQ(r.measure({ComponentSet::of({1})}), Rational(1));
  const Point x = r.sample(0);
  EXPECT_EQ(std::get<TaggedCoord>(x.v).component, 1);
}

TEST(EigenProduct, RejectsOffCircleLambda) {
  EXPECT_THROW(eigen_product(std::complex<double>(1.1, 0), System::doubling(1)), Error);
  const System e = eigen_product(Angle::golden(), System::doubling(1));
  EXPECT_FALSE(e.mixing());
}

TEST(Sample, PureFunctionOfIndex) {
  const System d = System::doubling(8);
  EXPECT_EQ(d.sample(5), d.sample(5));
  EXPECT_FALSE(d.sample(5) == d.sample(6));
}
