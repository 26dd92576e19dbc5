#include <gtest/gtest.h>

#include <filesystem>

#include "ergolab/error.hpp"
#include "ergolab/random.hpp"
#include "ergolab/serialize.hpp"

using namespace ergolab;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(SerializeSystem, RoundTripsEveryKind) {
  const System rot = System::rotation(Angle::golden(), 1);
  const std::vector<System> systems = {
      rot,
      System::doubling(2),
      System::bernoulli(Rational(4, 5), 3),
      System::markov({{Rational(1, 2), Rational(1, 2)}, {Rational(1, 3), Rational(2, 3)}}, 4),
      System::product({rot, System::doubling(5)}, 6),
      eigen_product(Angle::silver(), System::doubling(7)),
      natural_extension(System::bernoulli(Rational(1, 3), 8)).system,
      System::disjoint_union({{Rational(3, 10), rot}, {Rational(7, 10), System::doubling(9)}}, 10),
  };
  for (const auto& s : systems) {
    const Json j = to_json(s);
    const System back = system_from_json(j);
    EXPECT_EQ(to_json(back), j) << j.dump();
    EXPECT_EQ(back.sample(3), s.sample(3)) << j.dump();
  }
}

TEST(SerializeSystem, ShorthandAndErrors) {
  const System s = system_from_json(Json::parse(R"({"kind":"rotation","params":{"angle":"golden"},"seed":1})"));
  EXPECT_EQ(s.angle(), Angle::golden());
  EXPECT_EQ(code_of([] { system_from_json(Json::parse(R"({"kind":"rotation","params":{"angle":"golden"}})")); }),
            ErrorCode::schema);
  EXPECT_NE(message_of([] { system_from_json(Json::parse(R"({"kind":"warp","seed":1})")); }).find("/system"),
            std::string::npos);
  const auto msg = message_of([] {
    system_from_json(Json::parse(R"({"kind":"bernoulli","seed":1,"params":{"p":"3/2"}})"));
  });
  EXPECT_NE(msg.find("/system"), std::string::npos) << msg;
}

TEST(SerializeObservable, RoundTrips) {
  const std::vector<Observable> obs = {
      Observable::constant({1.0, -2.0}),
      Observable::character(-3),
      Observable::character_sum({{1, 0.5}, {2, Complex(0, 1)}}),
      Observable::indicator(MeasurableSet::arc(0.1, 0.6)),
      Observable::bit_window(2, 2, {0, 1, 2, 3}),
      Observable::linear({{2.0, Observable::character(1)}, {1.0, Observable::first_bit()}}),
      truncate(Observable::power(-0.5), 3.0),
      simple_approx(Observable::character(1), 10),
  };
  for (const auto& f : obs) {
    const Json j = to_json(f);
    const Observable back = observable_from_json(j);
    EXPECT_EQ(to_json(back), j) << j.dump();
    EXPECT_EQ(back.sup_norm(), f.sup_norm());
  }
}

TEST(SerializeSet, TaggedAndCylinders) {
  const std::vector<MeasurableSet> sets = {
      MeasurableSet::arc(0.75, 0.25),
      {Cylinder{2, {1, 0, 1}}},
      {CylinderUnion{{Cylinder{0, {1}}, Cylinder{3, {0, 0}}}}},
      {ComponentSet::of({1, 0})},
      MeasurableSet::tagged(1, MeasurableSet::arc(0, 0.5)),
  };
  for (const auto& s : sets) EXPECT_EQ(set_from_json(to_json(s)), s);
}

TEST(SerializeBfko, CertificateFamilyAndSidecar) {
  const auto f = oscillating_series(4, 4096, 0.9, 0.05, 1);
  const auto cert = find_bad_intervals(f, 2, {10, 100});
  const auto back = certificate_from_json(to_json(cert));
  EXPECT_EQ(to_json(back), to_json(cert));

  std::vector<std::int32_t> series(500);
  for (std::size_t i = 0; i < series.size(); ++i) series[i] = static_cast<std::int32_t>(hash64(3, i) % 2);
  const std::vector<Complex> pm = {-1.0, 1.0};
  const auto fam = collect_shift_blocks(pm, series, {1, 2, 50}, 5, 20);
  EXPECT_EQ(to_json(family_from_json(to_json(fam))), to_json(fam));
  GoodBlockFamily trie(pm, 5, 20);
  trie.insert(series.data(), 19);
  EXPECT_EQ(to_json(family_from_json(to_json(trie))), to_json(trie));

  LayerConstants k;
  k.j_count = 1;
  k.a = 0.9;
  k.c = 0.5;
  k.delta = 0.4;
  k.delta1 = 0.03;
  k.delta2 = 0.004;
  k.k = 1;
  k.windows = {{30, 33}};
  k.n = 2000;
  const auto visits = VisitPattern::synthetic(k.n, k.windows, k.k, 0.8, 4);
  const auto st = build_layers(k, visits, pm, series, fam, {true});
  const auto bytes = stack_sidecar(st);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ELCS");
  const auto st2 = stack_from_json(to_json(st), bytes);
  EXPECT_EQ(to_json(st2), to_json(st));
  EXPECT_EQ(st2.layers[0].c, st.layers[0].c);
  EXPECT_EQ(st2.in_b, st.in_b);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { stack_from_json(to_json(st), truncated); }), ErrorCode::schema);
}

TEST(SerializeFiles, JsonAndCsv) {
  const auto dir = fs::temp_directory_path() / "ergolab_serialize_test";
  fs::remove_all(dir);
  write_json(dir / "a" / "x.json", Json{{"k", 1}});
  EXPECT_EQ(read_text(dir / "a" / "x.json"), "{\n  \"k\": 1\n}\n");
  write_text(dir / "bad.json", "{\"k\": ");
  const auto msg = message_of([&] { read_json(dir / "bad.json"); });
  EXPECT_NE(msg.find("bad.json"), std::string::npos) << msg;
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  ConvergenceReport r;
  r.checkpoints = {2, 4};
  r.averages = {{0.5, 0}, {0.25, -1}};
  EXPECT_EQ(series_csv(r), "N,re,im\n2,0.5,0\n4,0.25,-1\n");
  fs::remove_all(dir);
}
