#include "ergolab/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "ergolab/error.hpp"

namespace ergolab {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::schema, path + ": " + what);
}

const Json& field(const Json& j, const std::string& path, const char* key) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(path + "/" + key, "missing field");
  return *it;
}

const Json* optional_field(const Json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

std::uint64_t as_u64(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::int64_t as_i64(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

double as_double(const Json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const Json& as_array(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }
std::string at(const std::string& path, const char* key) { return path + "/" + key; }

Json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Rational rational_field(const Json& j, const std::string& path) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  } catch (const Error& e) {
    fail(path, e.what());
  }
  fail(path, "expected a rational string such as \"4/5\"");
}

Json complex_list(const std::vector<Complex>& v) {
  Json out = Json::array();
  for (const auto& z : v) out.push_back(complex_to_json(z));
  return out;
}

std::vector<Complex> complex_list_from(const Json& j, const std::string& path) {
  std::vector<Complex> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(complex_from_json(j[i], at(path, i)));
  return out;
}

Json windows_json(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& w) {
  Json out = Json::array();
  for (const auto& [l, m] : w) out.push_back({l, m});
  return out;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> windows_from(const Json& j, const std::string& path) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) {
    const auto p = at(path, i);
    if (!j[i].is_array() || j[i].size() != 2) fail(p, "expected a pair [L, M]");
    out.emplace_back(as_u64(j[i][0], at(p, std::size_t{0})), as_u64(j[i][1], at(p, std::size_t{1})));
  }
  return out;
}

template <typename T>
std::vector<T> int_list(const Json& j, const std::string& path) {
  std::vector<T> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) {
    if constexpr (std::is_signed_v<T>) {
      out.push_back(static_cast<T>(as_i64(j[i], at(path, i))));
    } else {
      out.push_back(static_cast<T>(as_u64(j[i], at(path, i))));
    }
  }
  return out;
}

Json fixed_json(Fixed f) { return f.to_hex(); }

Fixed fixed_from(const Json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return Fixed::from_hex(j.get<std::string>());
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  if (j.is_number()) {
    const double v = j.get<double>();
    if (v == 1.0) return Fixed();
    if (!(v >= 0.0 && v < 1.0)) fail(path, "circle coordinate outside [0, 1]");
    return Fixed::from_double(v);
  }
  fail(path, "expected a 32-hex-digit fraction or a number");
}

Json cylinder_json(const Cylinder& c) { return {{"offset", c.offset}, {"word", c.word}}; }

Cylinder cylinder_from(const Json& j, const std::string& path) {
  Cylinder c;
  c.offset = as_i64(field(j, path, "offset"), at(path, "offset"));
  c.word = int_list<int>(field(j, path, "word"), at(path, "word"));
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// scalars

Json complex_to_json(Complex z) { return Json::array({number(z.real()), number(z.imag())}); }

Complex complex_from_json(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) fail(path, "expected a number or [re, im]");
  return {as_double(j[0], at(path, std::size_t{0})), as_double(j[1], at(path, std::size_t{1}))};
}

Json angle_to_json(const Angle& a) { return {{"value", a.value.to_hex()}, {"irrational", a.irrational}}; }

Angle angle_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "golden") return Angle::golden();
    if (s == "silver") return Angle::silver();
    if (s.rfind("sqrt:", 0) == 0) {
      std::uint64_t n = 0;
      const auto* b = s.data() + 5;
      const auto* e = s.data() + s.size();
      const auto [p, ec] = std::from_chars(b, e, n);
      if (ec != std::errc() || p != e) fail(path, "bad sqrt:n angle");
      try {
        return Angle::sqrt_frac(n);
      } catch (const Error& err) {
        fail(path, err.what());
      }
    }
    // A bare hex value carries no irrationality claim.
    return Angle::rational(fixed_from(j, path));
  }
  if (j.is_object()) {
    Angle a;
    a.value = fixed_from(field(j, path, "value"), at(path, "value"));
    if (const auto* irr = optional_field(j, "irrational")) a.irrational = as_bool(*irr, at(path, "irrational"));
    return a;
  }
  if (j.is_number()) return Angle::rational(fixed_from(j, path));
  fail(path, "expected an angle");
}

// ---------------------------------------------------------------------------
// sets

Json to_json(const MeasurableSet& s) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntervalUnion>) {
          Json arcs = Json::array();
          for (const auto& iv : v.intervals()) arcs.push_back({fixed_json(iv.lo), fixed_json(iv.hi)});
          return {{"type", "intervals"}, {"arcs", arcs}};
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          Json out = cylinder_json(v);
          out["type"] = "cylinder";
          return out;
        } else if constexpr (std::is_same_v<T, CylinderUnion>) {
          Json parts = Json::array();
          for (const auto& c : v.parts) parts.push_back(cylinder_json(c));
          return {{"type", "cylinders"}, {"parts", parts}};
        } else if constexpr (std::is_same_v<T, ComponentSet>) {
          return {{"type", "components"}, {"ids", v.ids}};
        } else {
          return {{"type", "tagged"}, {"component", v.component}, {"set", to_json(*v.inner)}};
        }
      },
      s.v);
}

MeasurableSet set_from_json(const Json& j, const std::string& path) {
  const auto type = as_string(field(j, path, "type"), at(path, "type"));
  if (type == "intervals") {
    const auto p = at(path, "arcs");
    const Json& arcs = as_array(field(j, path, "arcs"), p);
    std::vector<Interval> ivs;
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const auto q = at(p, i);
      if (!arcs[i].is_array() || arcs[i].size() != 2) fail(q, "expected [lo, hi]");
      ivs.push_back({fixed_from(arcs[i][0], at(q, std::size_t{0})), fixed_from(arcs[i][1], at(q, std::size_t{1}))});
    }
    return {IntervalUnion(ivs)};
  }
  if (type == "cylinder") return {cylinder_from(j, path)};
  if (type == "cylinders") {
    const auto p = at(path, "parts");
    const Json& parts = as_array(field(j, path, "parts"), p);
    CylinderUnion u;
    for (std::size_t i = 0; i < parts.size(); ++i) u.parts.push_back(cylinder_from(parts[i], at(p, i)));
    return {u};
  }
  if (type == "components") return {ComponentSet::of(int_list<int>(field(j, path, "ids"), at(path, "ids")))};
  if (type == "tagged") {
    const auto c = as_i64(field(j, path, "component"), at(path, "component"));
    return MeasurableSet::tagged(static_cast<int>(c), set_from_json(field(j, path, "set"), at(path, "set")));
  }
  fail(at(path, "type"), "unknown set type '" + type + "'");
}

// ---------------------------------------------------------------------------
// systems

Json to_json(const System& sys) {
  Json params = Json::object();
  switch (sys.kind()) {
    case SystemKind::rotation: params = angle_to_json(sys.angle()); break;
    case SystemKind::doubling: break;
    case SystemKind::bernoulli: params["p"] = to_string(sys.bernoulli_p()); break;
    case SystemKind::markov: {
      Json m = Json::array();
      for (const auto& row : sys.markov_matrix()) {
        Json r = Json::array();
        for (const auto& v : row) r.push_back(to_string(v));
        m.push_back(r);
      }
      Json st = Json::array();
      for (const auto& v : sys.stationary()) st.push_back(to_string(v));
      params["matrix"] = m;
      params["stationary"] = st;
      break;
    }
    case SystemKind::product: {
      Json parts = Json::array();
      for (const auto& p : sys.parts()) parts.push_back(to_json(p));
      params["parts"] = parts;
      break;
    }
    case SystemKind::eigen_product:
      params["angle"] = angle_to_json(sys.angle());
      params["base"] = to_json(sys.base());
      break;
    case SystemKind::natural_extension: params["base"] = to_json(sys.base()); break;
    case SystemKind::disjoint_union: {
      Json comps = Json::array();
      for (std::size_t i = 0; i < sys.parts().size(); ++i)
        comps.push_back({{"weight", to_string(sys.weights()[i])}, {"system", to_json(sys.parts()[i])}});
      params["components"] = comps;
      break;
    }
    case SystemKind::restricted:
      params["base"] = to_json(sys.base());
      params["set"] = to_json(*sys.restriction());
      break;
  }
  return {{"kind", std::string(to_string(sys.kind()))}, {"params", params}, {"seed", sys.seed()}};
}

System system_from_json(const Json& j, const std::string& path) {
  const auto kind = as_string(field(j, path, "kind"), at(path, "kind"));
  const std::uint64_t seed = as_u64(field(j, path, "seed"), at(path, "seed"));
  static const Json kEmpty = Json::object();
  const Json* pp = optional_field(j, "params");
  const Json& params = pp ? *pp : kEmpty;
  const auto pa = at(path, "params");
  if (!params.is_object()) fail(pa, "expected an object");

  try {
    if (kind == "rotation") {
      const Json* a = optional_field(params, "angle");
      if (a) {
        Angle angle = angle_from_json(*a, at(pa, "angle"));
        if (const auto* irr = optional_field(params, "irrational")) angle.irrational = as_bool(*irr, at(pa, "irrational"));
        return System::rotation(angle, seed);
      }
      return System::rotation(angle_from_json(params, pa), seed);
    }
    if (kind == "doubling") return System::doubling(seed);
    if (kind == "bernoulli") return System::bernoulli(rational_field(field(params, pa, "p"), at(pa, "p")), seed);
    if (kind == "markov") {
      const auto pm = at(pa, "matrix");
      const Json& m = as_array(field(params, pa, "matrix"), pm);
      std::vector<std::vector<Rational>> matrix;
      for (std::size_t i = 0; i < m.size(); ++i) {
        std::vector<Rational> row;
        for (std::size_t k = 0; k < as_array(m[i], at(pm, i)).size(); ++k)
          row.push_back(rational_field(m[i][k], at(at(pm, i), k)));
        matrix.push_back(std::move(row));
      }
      std::optional<std::vector<Rational>> st;
      if (const auto* s = optional_field(params, "stationary")) {
        st.emplace();
        for (std::size_t i = 0; i < as_array(*s, at(pa, "stationary")).size(); ++i)
          st->push_back(rational_field((*s)[i], at(at(pa, "stationary"), i)));
      }
      return System::markov(matrix, seed, st);
    }
    if (kind == "product") {
      const auto pp2 = at(pa, "parts");
      const Json& parts = as_array(field(params, pa, "parts"), pp2);
      std::vector<System> out;
      for (std::size_t i = 0; i < parts.size(); ++i) out.push_back(system_from_json(parts[i], at(pp2, i)));
      return System::product(std::move(out), seed);
    }
    if (kind == "eigen-product") {
      return eigen_product(angle_from_json(field(params, pa, "angle"), at(pa, "angle")),
                           system_from_json(field(params, pa, "base"), at(pa, "base")));
    }
    if (kind == "natural-extension") {
      return natural_extension(system_from_json(field(params, pa, "base"), at(pa, "base"))).system;
    }
    if (kind == "disjoint-union") {
      const auto pc = at(pa, "components");
      const Json& comps = as_array(field(params, pa, "components"), pc);
      std::vector<std::pair<Rational, System>> parts;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto q = at(pc, i);
        parts.emplace_back(rational_field(field(comps[i], q, "weight"), at(q, "weight")),
                           system_from_json(field(comps[i], q, "system"), at(q, "system")));
      }
      return System::disjoint_union(parts, seed);
    }
    if (kind == "restricted") {
      return atom_restrict(system_from_json(field(params, pa, "base"), at(pa, "base")),
                           set_from_json(field(params, pa, "set"), at(pa, "set")));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::schema) throw;
    fail(path, e.what());
  }
  fail(at(path, "kind"), "unknown system kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// observables

Json to_json(const Observable& f) {
  const auto& n = f.node();
  Json params = Json::object();
  switch (n.kind) {
    case ObservableKind::constant: params["value"] = complex_to_json(n.value); break;
    case ObservableKind::coordinate:
    case ObservableKind::log: break;
    case ObservableKind::character: params["k"] = n.k; break;
    case ObservableKind::character_sum: {
      Json terms = Json::array();
      for (std::size_t i = 0; i < n.frequencies.size(); ++i)
        terms.push_back({{"k", n.frequencies[i]}, {"c", complex_to_json(n.table[i])}});
      params["terms"] = terms;
      break;
    }
    case ObservableKind::indicator: params["set"] = to_json(*n.set); break;
    case ObservableKind::bit_window:
      params["offset"] = n.k;
      params["length"] = n.length;
      params["table"] = complex_list(n.table);
      break;
    case ObservableKind::tensor: {
      Json fs = Json::array();
      for (const auto& c : n.children) fs.push_back(to_json(c));
      params["factors"] = fs;
      break;
    }
    case ObservableKind::linear: {
      Json terms = Json::array();
      for (std::size_t i = 0; i < n.children.size(); ++i)
        terms.push_back({{"c", complex_to_json(n.table[i])}, {"f", to_json(n.children[i])}});
      params["terms"] = terms;
      break;
    }
    case ObservableKind::power: params["exponent"] = n.exponent; break;
    case ObservableKind::truncated:
      params["inner"] = to_json(n.children[0]);
      params["level"] = n.level;
      params["rule"] = n.rule == TruncationRule::clip ? "clip" : "indicator";
      break;
    case ObservableKind::quantized:
      params["inner"] = to_json(n.children[0]);
      params["k"] = static_cast<std::uint64_t>(n.level);
      break;
  }
  Json out = {{"def", std::string(to_string(n.kind))}, {"params", params}, {"supnorm", number(n.sup)}};
  if (n.alphabet) out["alphabet"] = complex_list(*n.alphabet);
  return out;
}

Observable observable_from_json(const Json& j, const std::string& path) {
  const auto def = as_string(field(j, path, "def"), at(path, "def"));
  static const Json kEmpty = Json::object();
  const Json* pp = optional_field(j, "params");
  const Json& params = pp ? *pp : kEmpty;
  const auto pa = at(path, "params");
  if (!params.is_object()) fail(pa, "expected an object");

  try {
    if (def == "constant") return Observable::constant(complex_from_json(field(params, pa, "value"), at(pa, "value")));
    if (def == "coordinate") return Observable::coordinate();
    if (def == "log") return Observable::log_coordinate();
    if (def == "character") return Observable::character(as_i64(field(params, pa, "k"), at(pa, "k")));
    if (def == "character-sum") {
      const auto pt = at(pa, "terms");
      const Json& terms = as_array(field(params, pa, "terms"), pt);
      std::vector<std::pair<std::int64_t, Complex>> out;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto q = at(pt, i);
        out.emplace_back(as_i64(field(terms[i], q, "k"), at(q, "k")),
                         complex_from_json(field(terms[i], q, "c"), at(q, "c")));
      }
      return Observable::character_sum(out);
    }
    if (def == "indicator") return Observable::indicator(set_from_json(field(params, pa, "set"), at(pa, "set")));
    if (def == "bit-window") {
      std::int64_t offset = 0;
      if (const auto* o = optional_field(params, "offset")) offset = as_i64(*o, at(pa, "offset"));
      const auto len = as_i64(field(params, pa, "length"), at(pa, "length"));
      return Observable::bit_window(offset, static_cast<int>(len),
                                    complex_list_from(field(params, pa, "table"), at(pa, "table")));
    }
    if (def == "tensor") {
      const auto pf = at(pa, "factors");
      const Json& fs = as_array(field(params, pa, "factors"), pf);
      std::vector<Observable> out;
      for (std::size_t i = 0; i < fs.size(); ++i) out.push_back(observable_from_json(fs[i], at(pf, i)));
      return Observable::tensor(std::move(out));
    }
    if (def == "linear") {
      const auto pt = at(pa, "terms");
      const Json& terms = as_array(field(params, pa, "terms"), pt);
      std::vector<std::pair<Complex, Observable>> out;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto q = at(pt, i);
        out.emplace_back(complex_from_json(field(terms[i], q, "c"), at(q, "c")),
                         observable_from_json(field(terms[i], q, "f"), at(q, "f")));
      }
      return Observable::linear(out);
    }
    if (def == "power") return Observable::power(as_double(field(params, pa, "exponent"), at(pa, "exponent")));
    if (def == "truncated") {
      auto rule = TruncationRule::clip;
      if (const auto* r = optional_field(params, "rule")) {
        const auto s = as_string(*r, at(pa, "rule"));
        if (s == "indicator") rule = TruncationRule::indicator;
        else if (s != "clip") fail(at(pa, "rule"), "expected clip or indicator");
      }
      return truncate(observable_from_json(field(params, pa, "inner"), at(pa, "inner")),
                      as_double(field(params, pa, "level"), at(pa, "level")), rule);
    }
    if (def == "quantized") {
      return simple_approx(observable_from_json(field(params, pa, "inner"), at(pa, "inner")),
                           as_u64(field(params, pa, "k"), at(pa, "k")));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::schema) throw;
    fail(path, e.what());
  }
  fail(at(path, "def"), "unknown observable '" + def + "'");
}

Json to_json(const Point& x) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CircleCoord>) {
          return {{"circle", v.value.to_hex()}};
        } else if constexpr (std::is_same_v<T, SeqCoord>) {
          return {{"sequence", {{"seed", v.seed}, {"cursor", v.cursor}, {"state", v.state}, {"two_sided", v.two_sided}}}};
        } else if constexpr (std::is_same_v<T, TupleCoord>) {
          Json parts = Json::array();
          for (const auto& p : v.parts) parts.push_back(to_json(p));
          return {{"tuple", parts}};
        } else {
          return {{"tagged", {{"component", v.component}, {"point", to_json(*v.inner)}}}};
        }
      },
      x.v);
}

// ---------------------------------------------------------------------------
// reports

Json to_json(const ConvergenceReport& r) {
  Json out = {
      {"checkpoints", r.checkpoints},
      {"averages", complex_list(r.averages)},
      {"tail_start", r.tail_start},
      {"tail_oscillation", number(r.tail_oscillation)},
      {"limit_estimate", complex_to_json(r.limit_estimate)},
      {"tolerance", number(r.tolerance)},
      {"sup_bound", number(r.sup_bound)},
      {"verdict", std::string(to_string(r.verdict))},
  };
  if (r.reference) {
    out["reference"] = complex_to_json(*r.reference);
    out["reference_error"] = number(std::abs(r.limit_estimate - *r.reference));
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string series_csv(const ConvergenceReport& r) {
  std::string out = "N,re,im\n";
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i) {
    out += std::to_string(r.checkpoints[i]) + "," + format_double(r.averages[i].real()) + "," +
           format_double(r.averages[i].imag()) + "\n";
  }
  return out;
}

Json to_json(const CauchyReport& r) {
  Json levels = Json::array();
  for (const auto& l : r.levels) {
    Json t1 = Json::array();
    for (double v : l.term_one) t1.push_back(number(v));
    levels.push_back({{"level", l.level},
                      {"term_one", t1},
                      {"averages", complex_list(l.averages)},
                      {"worst_slack", number(l.worst_slack)},
                      {"certified", l.certified}});
  }
  Json out = {{"epsilon", r.epsilon},
              {"checkpoints", r.checkpoints},
              {"exact_averages", complex_list(r.exact_averages)},
              {"levels", levels},
              {"term_one_at_n0", number(r.term_one_at_n0)},
              {"term_three_at_n0", number(r.term_three_at_n0)},
              {"exact_oscillation_at_n0", number(r.exact_oscillation_at_n0)},
              {"certified", r.certified},
              {"verdict", std::string(to_string(r.verdict))}};
  out["chosen_level"] = r.chosen_level ? Json(*r.chosen_level) : Json();
  out["n0"] = r.n0 ? Json(*r.n0) : Json();
  return out;
}

Json to_json(const EgorovResult& r) {
  return {{"selected", r.selected}, {"n_delta", r.n_delta},   {"grid_index", r.grid_index},
          {"fraction", r.fraction}, {"bound", r.bound},       {"delta", r.delta},
          {"last_bad", r.last_bad}, {"verdict", std::string(to_string(r.verdict))}};
}

Json to_json(const CoverResult& r) {
  return {{"k", r.k},
          {"measure", to_string(r.measure)},
          {"measure_approx", to_double(r.measure)},
          {"previous_measure", to_string(r.previous_measure)},
          {"cover", to_json(r.cover)}};
}

Json to_json(const PsiResult& r) {
  Json good = Json::array();
  for (bool g : r.good) good.push_back(g);
  return {{"g_fraction", r.g_fraction}, {"m0", r.m0}, {"bound", r.bound}, {"good", good}, {"last_bad", r.last_bad}};
}

Json to_json(const SpectralEstimate& e) {
  Json w = Json::array();
  for (double v : e.wiener_means) w.push_back(number(v));
  Json out = {{"maxlag", e.maxlag},
              {"length", e.length},
              {"samples", e.samples},
              {"sup_bound", number(e.sup_bound)},
              {"band", number(e.band)},
              {"wiener_grid", e.wiener_grid},
              {"wiener_means", w},
              {"wiener",
               {{"verdict", std::string(to_string(e.wiener.verdict))},
                {"threshold", e.wiener.threshold},
                {"last_m", e.wiener.last_m},
                {"last_value", number(e.wiener.last_value)},
                {"tail_slope", number(e.wiener.tail_slope)}}},
              {"exact_phases", e.phases.has_value()}};
  return out;
}

std::string spectral_csv(const SpectralEstimate& e) {
  std::string out = "lag,re,im\n";
  for (std::int64_t n = -e.maxlag; n <= e.maxlag; ++n) {
    const Complex g = e.at(n);
    out += std::to_string(n) + "," + format_double(g.real()) + "," + format_double(g.imag()) + "\n";
  }
  return out;
}

Json to_json(const PairCorrelationResult& r) {
  Json reps = Json::array();
  for (const auto& rep : r.reports) reps.push_back(to_json(rep));
  return {{"tolerance", number(r.tolerance)},
          {"max_final", number(r.max_final)},
          {"orthocomplement_consistent", r.orthocomplement_consistent},
          {"reports", reps}};
}

// ---------------------------------------------------------------------------
// bfko stages

Json to_json(const BadIntervalCertificate& c) {
  return {{"a", c.a},
          {"c", c.c},
          {"branch", std::string(to_string(c.branch))},
          {"intervals", windows_json(c.intervals)},
          {"thresholds", c.thresholds},
          {"samples", c.samples},
          {"divergent", c.divergent},
          {"retained", c.retained},
          {"witnesses", c.witnesses},
          {"retained_counts", c.retained_counts},
          {"limsup_threshold", c.limsup_threshold}};
}

BadIntervalCertificate certificate_from_json(const Json& j, const std::string& path) {
  BadIntervalCertificate c;
  c.a = as_double(field(j, path, "a"), at(path, "a"));
  c.c = as_double(field(j, path, "c"), at(path, "c"));
  try {
    c.branch = branch_from_string(as_string(field(j, path, "branch"), at(path, "branch")));
  } catch (const Error& e) {
    fail(at(path, "branch"), e.what());
  }
  c.intervals = windows_from(field(j, path, "intervals"), at(path, "intervals"));
  c.thresholds = int_list<std::uint64_t>(field(j, path, "thresholds"), at(path, "thresholds"));
  c.samples = as_u64(field(j, path, "samples"), at(path, "samples"));
  c.divergent = int_list<std::size_t>(field(j, path, "divergent"), at(path, "divergent"));
  c.retained = int_list<std::size_t>(field(j, path, "retained"), at(path, "retained"));
  const auto pw = at(path, "witnesses");
  const Json& w = as_array(field(j, path, "witnesses"), pw);
  for (std::size_t i = 0; i < w.size(); ++i) c.witnesses.push_back(int_list<std::uint64_t>(w[i], at(pw, i)));
  c.retained_counts = int_list<std::size_t>(field(j, path, "retained_counts"), at(path, "retained_counts"));
  c.limsup_threshold = as_double(field(j, path, "limsup_threshold"), at(path, "limsup_threshold"));
  if (c.witnesses.size() != c.retained.size()) fail(pw, "one witness row per retained sample");
  return c;
}

Json to_json(const GoodBlockFamily& f) {
  Json out = {{"alphabet", complex_list(f.alphabet())},
              {"window", {f.window_lo(), f.window_hi()}},
              {"references", f.references()},
              {"word_length", f.word_length()}};
  if (f.windowed()) {
    out["series"] = f.series();
    out["starts"] = f.starts();
  } else {
    out["nodes"] = f.node_count();
    out["trie"] = f.trie();
  }
  return out;
}

GoodBlockFamily family_from_json(const Json& j, const std::string& path) {
  auto alphabet = complex_list_from(field(j, path, "alphabet"), at(path, "alphabet"));
  const auto w = windows_from(Json::array({field(j, path, "window")}), at(path, "window"));
  try {
    if (optional_field(j, "series")) {
      return GoodBlockFamily::from_windows(std::move(alphabet), w[0].first, w[0].second,
                                           int_list<std::int32_t>(field(j, path, "series"), at(path, "series")),
                                           int_list<std::uint64_t>(field(j, path, "starts"), at(path, "starts")));
    }
    auto trie = int_list<std::int32_t>(field(j, path, "trie"), at(path, "trie"));
    const auto refs = as_u64(field(j, path, "references"), at(path, "references"));
    return GoodBlockFamily::from_trie(std::move(alphabet), w[0].first, w[0].second, std::move(trie), refs);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::schema && std::string(e.what()).rfind(path, 0) == 0) throw;
    fail(path, e.what());
  }
}

Json to_json(const LayerConstants& k) {
  return {{"j_count", k.j_count}, {"a", k.a},           {"c", k.c},         {"delta", k.delta},
          {"delta1", k.delta1},   {"delta2", k.delta2}, {"k", k.k},         {"m0", k.m0},
          {"n_delta", k.n_delta}, {"windows", windows_json(k.windows)},    {"n", k.n},
          {"branch", std::string(to_string(k.branch))}};
}

LayerConstants constants_from_json(const Json& j, const std::string& path) {
  LayerConstants k;
  k.j_count = as_u64(field(j, path, "j_count"), at(path, "j_count"));
  k.a = as_double(field(j, path, "a"), at(path, "a"));
  k.c = as_double(field(j, path, "c"), at(path, "c"));
  k.delta = as_double(field(j, path, "delta"), at(path, "delta"));
  k.delta1 = as_double(field(j, path, "delta1"), at(path, "delta1"));
  k.delta2 = as_double(field(j, path, "delta2"), at(path, "delta2"));
  k.k = as_u64(field(j, path, "k"), at(path, "k"));
  k.m0 = as_u64(field(j, path, "m0"), at(path, "m0"));
  k.n_delta = as_u64(field(j, path, "n_delta"), at(path, "n_delta"));
  k.windows = windows_from(field(j, path, "windows"), at(path, "windows"));
  k.n = as_u64(field(j, path, "n"), at(path, "n"));
  try {
    k.branch = branch_from_string(as_string(field(j, path, "branch"), at(path, "branch")));
  } catch (const Error& e) {
    fail(at(path, "branch"), e.what());
  }
  if (k.windows.size() != k.j_count) fail(at(path, "windows"), "need one window per layer");
  return k;
}

Json to_json(const LayerStack& st) {
  Json layers = Json::array();
  for (std::size_t j = 0; j < st.layers.size(); ++j) {
    const auto& l = st.layers[j];
    Json ivs = Json::array();
    for (const auto& iv : l.intervals) ivs.push_back({iv.l, iv.m});
    layers.push_back({{"intervals", ivs},
                      {"covered", l.covered},
                      {"density", st.density(j + 1)},
                      {"density_exact", to_string(st.exact_density(j + 1))},
                      {"rejected", l.rejected}});
  }
  Json viol = Json::array();
  for (const auto& v : st.violations) viol.push_back({{"name", v.name}, {"detail", v.detail}});
  return {{"constants", to_json(st.constants)},
          {"alphabet", complex_list(st.alphabet)},
          {"zero_id", st.zero_id},
          {"reference", st.reference},
          {"layers", layers},
          {"relaxed", st.relaxed},
          {"violations", viol}};
}

namespace {

constexpr std::uint32_t kSidecarVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
  const std::vector<std::uint8_t>& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (data.size() - pos < n) throw Error(ErrorCode::schema, "sidecar: truncated");
  }
  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(data[pos++]) << (8 * i);
    return v;
  }
};

}  // namespace

std::vector<std::uint8_t> stack_sidecar(const LayerStack& st) {
  std::vector<std::uint8_t> out = {'E', 'L', 'C', 'S'};
  put_u32(out, kSidecarVersion);
  put_u32(out, static_cast<std::uint32_t>(st.layers.size()));
  put_u64(out, st.constants.n);
  const std::uint32_t width = st.alphabet.size() < 128 ? 1 : 4;
  put_u32(out, width);
  for (const auto& l : st.layers) {
    for (std::int32_t v : l.c) {
      if (width == 1) out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(v)));
      else put_u32(out, static_cast<std::uint32_t>(v));
    }
  }
  out.insert(out.end(), st.in_b.begin(), st.in_b.end());
  out.insert(out.end(), st.in_e.begin(), st.in_e.end());
  return out;
}

LayerStack stack_from_json(const Json& j, const std::vector<std::uint8_t>& sidecar) {
  const std::string path = "/layers";
  LayerStack st;
  st.constants = constants_from_json(field(j, path, "constants"), at(path, "constants"));
  st.alphabet = complex_list_from(field(j, path, "alphabet"), at(path, "alphabet"));
  st.zero_id = static_cast<std::int32_t>(as_i64(field(j, path, "zero_id"), at(path, "zero_id")));
  st.reference = int_list<std::int32_t>(field(j, path, "reference"), at(path, "reference"));
  st.relaxed = as_bool(field(j, path, "relaxed"), at(path, "relaxed"));
  const auto pv = at(path, "violations");
  const Json& viol = as_array(field(j, path, "violations"), pv);
  for (std::size_t i = 0; i < viol.size(); ++i) {
    const auto q = at(pv, i);
    st.violations.push_back({as_string(field(viol[i], q, "name"), at(q, "name")),
                             as_string(field(viol[i], q, "detail"), at(q, "detail"))});
  }
  const auto pl = at(path, "layers");
  const Json& layers = as_array(field(j, path, "layers"), pl);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto q = at(pl, i);
    Layer l;
    for (const auto& [a, b] : windows_from(field(layers[i], q, "intervals"), at(q, "intervals"))) l.intervals.push_back({a, b});
    l.covered = as_u64(field(layers[i], q, "covered"), at(q, "covered"));
    l.rejected = int_list<std::uint64_t>(field(layers[i], q, "rejected"), at(q, "rejected"));
    st.layers.push_back(std::move(l));
  }

  Reader r{sidecar};
  r.need(4);
  if (!(sidecar[0] == 'E' && sidecar[1] == 'L' && sidecar[2] == 'C' && sidecar[3] == 'S'))
    throw Error(ErrorCode::schema, "sidecar: bad magic");
  r.pos = 4;
  if (r.uint(4) != kSidecarVersion) throw Error(ErrorCode::schema, "sidecar: unsupported version");
  const auto jc = r.uint(4);
  const auto n = r.uint(8);
  if (jc != st.layers.size() || n != st.constants.n) throw Error(ErrorCode::schema, "sidecar: does not match the document");
  const auto width = r.uint(4);
  if (width != 1 && width != 4) throw Error(ErrorCode::schema, "sidecar: bad symbol width");
  for (auto& l : st.layers) {
    l.c.resize(n + 1);
    for (auto& v : l.c) {
      v = width == 1 ? static_cast<std::int8_t>(static_cast<std::uint8_t>(r.uint(1)))
                     : static_cast<std::int32_t>(static_cast<std::uint32_t>(r.uint(4)));
    }
  }
  r.need(2 * (n + 1));
  st.in_b.assign(sidecar.begin() + static_cast<std::ptrdiff_t>(r.pos), sidecar.begin() + static_cast<std::ptrdiff_t>(r.pos + n + 1));
  r.pos += n + 1;
  st.in_e.assign(sidecar.begin() + static_cast<std::ptrdiff_t>(r.pos), sidecar.begin() + static_cast<std::ptrdiff_t>(r.pos + n + 1));
  r.pos += n + 1;
  if (r.pos != sidecar.size()) throw Error(ErrorCode::schema, "sidecar: trailing bytes");
  return st;
}

Json to_json(const DensityAudit& a) {
  Json issues = Json::array();
  for (const auto& i : a.issues)
    issues.push_back({{"layer", i.layer}, {"kind", i.kind}, {"at", i.at}, {"detail", i.detail}});
  return {{"covered", a.covered}, {"density", a.density}, {"checked", a.checked}, {"issues", issues}, {"pass", a.pass()}};
}

Json to_json(const AlphaBeta& ab) {
  return {{"alpha", ab.alpha}, {"beta", ab.beta},           {"delta", ab.delta},
          {"a", ab.a},         {"alpha_pass", ab.alpha_pass}, {"beta_pass", ab.beta_pass}};
}

Json to_json(const ChainResult& r) {
  return {{"lower", number(r.lower)},
          {"observed", number(r.observed)},
          {"upper", number(r.upper)},
          {"threshold", number(r.threshold)},
          {"chain_holds", r.chain_holds},
          {"cauchy_schwarz_exact", r.cauchy_schwarz_exact},
          {"verdict", std::string(to_string(r.verdict))}};
}

// ---------------------------------------------------------------------------
// files

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + p.string());
  out << text;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Json read_json(const std::filesystem::path& p) {
  const auto text = read_text(p);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::schema, p.string() + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

void write_json(const std::filesystem::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

}  // namespace ergolab
