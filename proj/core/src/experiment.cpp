#include "ergolab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/random.hpp"

namespace ergolab {

namespace {

// Stream labels for derive_seed; fixed forever so outputs stay reproducible.
enum Stream : std::uint64_t {
  kFirstPoints = 1,
  kSecondPoints = 2,
  kCertifySeries = 3,
  kReferencePoint = 4,
  kVisits = 5,
  kSecondOrbit = 6,
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::schema, path + ": " + what);
}

std::string at(const std::string& path, const char* key) { return path + "/" + key; }

// Thin path-tracking accessor over the config document.
struct Node {
  const Json& j;
  std::string path;

  bool has(const char* key) const { return j.is_object() && j.contains(key) && !j.at(key).is_null(); }
  Node operator[](const char* key) const {
    if (!j.is_object()) fail(path, "expected an object");
    if (!j.contains(key)) fail(at(path, key), "missing field");
    return {j.at(key), at(path, key)};
  }
  std::uint64_t u64() const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
      fail(path, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
  }
  std::uint64_t positive() const {
    const auto v = u64();
    if (v == 0) fail(path, "must be positive");
    return v;
  }
  double number() const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }
  double fraction() const {
    const double v = number();
    if (!(v > 0 && v < 1)) fail(path, "must lie in (0, 1)");
    return v;
  }
  bool boolean() const {
    if (!j.is_boolean()) fail(path, "expected a boolean");
    return j.get<bool>();
  }
  std::string str() const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }
  System system() const { return system_from_json(j, path); }
  Observable observable() const { return observable_from_json(j, path); }
  MeasurableSet set() const { return set_from_json(j, path); }

  Checkpoints checkpoints() const {
    Checkpoints cps;
    if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) {
        Node e{j[i], path + "/" + std::to_string(i)};
        cps.push_back(e.positive());
        if (i > 0 && cps[i] <= cps[i - 1]) fail(e.path, "checkpoints must increase");
      }
      if (cps.empty()) fail(path, "no checkpoints");
    } else if (j.is_object()) {
      const auto last = (*this)["last"].positive();
      if (has("first")) {
        const auto first = (*this)["first"].positive();
        if (first > last) fail(at(path, "first"), "exceeds last");
        cps = geometric_checkpoints(first, last);
      } else {
        cps = checkpoints_up_to(last);
      }
    } else {
      fail(path, "expected an array or {first, last}");
    }
    if (cps.back() > kCheckpointBudget) throw Error(ErrorCode::resource, path + ": beyond the step budget");
    return cps;
  }
};

std::optional<double> opt_number(const Node& n, const char* key) {
  if (!n.has(key)) return std::nullopt;
  return n[key].number();
}

std::vector<Point> sample_points(const System& sys, std::uint64_t seed, Stream stream, std::size_t count) {
  std::vector<Point> out;
  const std::uint64_t s = derive_seed(seed, stream);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sys.sample(derive_seed(s, i)));
  return out;
}

std::string series_rows(const std::vector<ConvergenceReport>& reports) {
  std::string out = "sample,N,re,im\n";
  for (std::size_t s = 0; s < reports.size(); ++s) {
    const auto& r = reports[s];
    for (std::size_t i = 0; i < r.checkpoints.size(); ++i) {
      out += std::to_string(s) + "," + std::to_string(r.checkpoints[i]) + "," + format_double(r.averages[i].real()) +
             "," + format_double(r.averages[i].imag()) + "\n";
    }
  }
  return out;
}

ReportOptions report_options(const Node& body) {
  ReportOptions o;
  o.tolerance = opt_number(body, "tolerance");
  if (body.has("tail_start")) o.tail_start = body["tail_start"].positive();
  return o;
}

// ---------------------------------------------------------------------------
// expectations

struct Outcome {
  std::string verdict;
  bool inconclusive = false;
  std::vector<std::string> failed;
  Json report = Json::object();
};

void expect_verdict(const Node& body, Outcome& o) {
  if (!body.has("expect")) return;
  const Node e = body["expect"];
  if (e.has("verdict") && e["verdict"].str() != o.verdict)
    o.failed.push_back("verdict " + o.verdict + " != expected " + e["verdict"].str());
}

void check_limits(const Node& body, const std::vector<ConvergenceReport>& reports, Outcome& o) {
  if (!body.has("expect")) return;
  const Node e = body["expect"];
  if (e.has("limit")) {
    const Complex target = complex_from_json(e["limit"].j, e["limit"].path);
    const double within = e["within"].number();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const double err = std::abs(reports[i].limit_estimate - target);
      if (!(err <= within))
        o.failed.push_back("sample " + std::to_string(i) + " limit error " + format_double(err) + " > " + format_double(within));
    }
  }
  if (e.has("max_oscillation")) {
    const double cap = e["max_oscillation"].number();
    for (std::size_t i = 0; i < reports.size(); ++i)
      if (!(reports[i].tail_oscillation <= cap))
        o.failed.push_back("sample " + std::to_string(i) + " tail oscillation " + format_double(reports[i].tail_oscillation));
  }
}

std::string aggregate(const std::vector<ConvergenceReport>& reports) {
  for (const auto& r : reports)
    if (r.verdict != Verdict::converged) return std::string(to_string(Verdict::inconclusive));
  return std::string(to_string(Verdict::converged));
}

Json reports_json(const std::vector<ConvergenceReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

Json summary_json(const std::vector<ConvergenceReport>& reports) {
  double osc = 0, ref_err = 0;
  bool has_ref = false;
  for (const auto& r : reports) {
    osc = std::max(osc, r.tail_oscillation);
    if (r.reference) {
      has_ref = true;
      ref_err = std::max(ref_err, std::abs(r.limit_estimate - *r.reference));
    }
  }
  Json s = {{"samples", reports.size()}, {"max_tail_oscillation", osc}};
  if (has_ref) s["max_reference_error"] = ref_err;
  return s;
}

// ---------------------------------------------------------------------------
// kinds

struct Written {
  std::string csv;
};

Outcome run_birkhoff(const ExperimentConfig& c, Written& w) {
  const Node b{c.body, ""};
  const System sys = b["system"].system();
  const Observable f = b["observable"].observable();
  const auto cps = b["checkpoints"].checkpoints();
  const auto xs = sample_points(sys, c.seed, kFirstPoints, b["samples"].positive());
  const auto reports = birkhoff_batch(sys, xs, f, cps, report_options(b));
  Outcome o;
  o.verdict = aggregate(reports);
  o.inconclusive = o.verdict != "converged";
  o.report = {{"summary", summary_json(reports)}, {"reports", reports_json(reports)}};
  check_limits(b, reports, o);
  w.csv = series_rows(reports);
  return o;
}

WeightSequence make_weights(const Node& spec, const Point& x, std::uint64_t n) {
  const auto source = spec["source"].str();
  if (source == "return-times") return WeightSequence::return_times(spec["system"].system(), x, spec["set"].set(), n);
  if (source == "observable")
    return WeightSequence::observable_orbit(spec["system"].system(), x, spec["observable"].observable(), n);
  if (source == "eigen") return WeightSequence::eigen(angle_from_json(spec["angle"].j, spec["angle"].path), n);
  fail(at(spec.path, "source"), "expected return-times, observable or eigen");
}

Outcome run_weighted(const ExperimentConfig& c, Written& w) {
  const Node b{c.body, ""};
  const Node spec = b["weights"];
  const System sys = b["system"].system();
  const Observable g = b["observable"].observable();
  const auto cps = b["checkpoints"].checkpoints();
  const auto count = b["samples"].positive();
  const auto source = spec["source"].str();
  std::vector<Point> xs(count, Point::circle(Fixed()));
  if (source != "eigen") xs = sample_points(spec["system"].system(), c.seed, kFirstPoints, count);
  const auto ys = sample_points(sys, c.seed, kSecondPoints, count);
  const auto opts = report_options(b);
  std::vector<ConvergenceReport> reports(count);
  parallel_for(count, [&](std::size_t i) {
    const auto weights = make_weights(spec, xs[i], cps.back());
    reports[i] = weighted_average(weights, sys, ys[i], g, cps, opts);
  });
  Outcome o;
  o.verdict = aggregate(reports);
  o.inconclusive = o.verdict != "converged";
  o.report = {{"summary", summary_json(reports)}, {"reports", reports_json(reports)}};
  check_limits(b, reports, o);
  w.csv = series_rows(reports);
  return o;
}

std::vector<std::pair<Point, Point>> sample_pairs(const System& sys, std::uint64_t seed, std::size_t count) {
  const auto xs = sample_points(sys, seed, kFirstPoints, count);
  const auto ys = sample_points(sys, seed, kSecondPoints, count);
  std::vector<std::pair<Point, Point>> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(xs[i], ys[i]);
  return out;
}

std::size_t within_count(const PairCorrelationResult& r) {
  std::size_t n = 0;
  for (const auto& rep : r.reports) n += std::abs(rep.averages.back()) <= r.tolerance ? 1 : 0;
  return n;
}

Outcome run_spectral(const ExperimentConfig& c, Written& w) {
  const Node b{c.body, ""};
  const System sys = b["system"].system();
  const Observable f = b["observable"].observable();
  const auto maxlag = static_cast<std::int64_t>(b["maxlag"].positive());
  const auto length = b["length"].positive();
  const auto samples = b["samples"].positive();
  const double threshold = b.has("threshold") ? b["threshold"].number() : 1e-2;
  const auto xs = sample_points(sys, c.seed, kFirstPoints, samples);
  const auto est = autocorrelation(sys, f, maxlag, length, xs, threshold);

  const auto pairs = sample_pairs(sys, c.seed, b.has("pairs") ? b["pairs"].positive() : samples);
  const auto cps = b.has("checkpoints") ? b["checkpoints"].checkpoints() : checkpoints_up_to(length);
  const auto pc = pair_correlation_test(sys, f, pairs, cps, opt_number(b, "pair_tolerance"));
  Outcome o;
  o.verdict = std::string(to_string(est.wiener.verdict));
  o.inconclusive = est.wiener.verdict == Continuity::inconclusive;
  const bool agree = verdicts_agree(est.wiener, pc);
  Json pcj = to_json(pc);
  pcj.erase("reports");
  pcj["final_abs"] = Json::array();
  for (const auto& r : pc.reports) pcj["final_abs"].push_back(std::abs(r.averages.back()));
  o.report = {{"spectral", to_json(est)}, {"pair_correlation", pcj}, {"verdicts_agree", agree}};
  if (!agree) o.failed.push_back("Wiener and pair-correlation verdicts disagree");
  if (b.has("expect") && b["expect"].has("max_wiener")) {
    const double cap = b["expect"]["max_wiener"].number();
    if (!(est.wiener.last_value <= cap)) o.failed.push_back("W_M " + format_double(est.wiener.last_value) + " above cap");
  }
  w.csv = spectral_csv(est);
  return o;
}

Outcome run_pair_correlation(const ExperimentConfig& c, Written& w) {
  const Node b{c.body, ""};
  const System sys = b["system"].system();
  const Observable f = b["observable"].observable();
  const auto cps = b["checkpoints"].checkpoints();
  const auto pairs = sample_pairs(sys, c.seed, b["samples"].positive());
  const auto r = pair_correlation_test(sys, f, pairs, cps, opt_number(b, "tolerance"));
  const auto within = within_count(r);
  Outcome o;
  o.verdict = r.orthocomplement_consistent ? "consistent" : "inconsistent";
  o.report = to_json(r);
  o.report["within"] = within;
  if (b.has("expect") && b["expect"].has("min_within")) {
    const auto need = b["expect"]["min_within"].u64();
    if (within < need) o.failed.push_back(std::to_string(within) + " pairs within tolerance, need " + std::to_string(need));
  } else {
    expect_verdict(b, o);
  }
  w.csv = series_rows(r.reports);
  return o;
}

Outcome run_egorov(const ExperimentConfig& c, Written& w) {
  const Node b{c.body, ""};
  const System sys = b["system"].system();
  const Observable f = b["observable"].observable();
  const auto grid = b["checkpoints"].checkpoints();
  const auto xs = sample_points(sys, c.seed, kFirstPoints, b["samples"].positive());
  const auto limit = integrate(f, sys);
  if (!limit || !sys.ergodic())
    throw Error(ErrorCode::precondition_violation, "egorov: needs an ergodic system with a closed-form mean");
  const auto reports = birkhoff_batch(sys, xs, f, grid);
  std::vector<std::vector<Complex>> series;
  for (const auto& r : reports) series.push_back(r.averages);
  const auto res = egorov_set(series, std::vector<Complex>(series.size(), *limit), grid, b["bound"].number(),
                              b["delta"].fraction());
  Outcome o;
  o.verdict = std::string(to_string(res.verdict));
  o.inconclusive = res.verdict != Verdict::converged;
  o.report = {{"egorov", to_json(res)}, {"limit", complex_to_json(*limit)}};
  w.csv = series_rows(reports);
  return o;
}

Outcome run_cover(const ExperimentConfig& c, Written& w) {
  const Node b{c.body, ""};
  const System sys = b["system"].system();
  const MeasurableSet set = b["set"].set();
  const Node dn = b["delta"];
  const Rational delta = dn.j.is_string() ? parse_rational(dn.str()) : exact_rational(dn.fraction());
  const auto max_k = b.has("max_k") ? b["max_k"].positive() : (std::uint64_t{1} << 20);
  const auto res = union_cover(sys, set, delta, max_k);
  Outcome o;
  o.verdict = "found";
  o.report = {{"cover", to_json(res)}, {"delta", to_string(delta)}};
  std::string csv = "k,measure,measure_exact\n";
  for (std::uint64_t k = 1; k <= res.k; ++k) {
    const auto m = image_union_measure(sys, set, k);
    csv += std::to_string(k) + "," + format_double(to_double(m)) + "," + to_string(m) + "\n";
  }
  w.csv = csv;
  if (b.has("psi")) {
    const Node p = b["psi"];
    const auto ys = sample_points(sys, c.seed, kSecondPoints, p["samples"].positive());
    const auto psi = psi_average_check(sys, set, res.k, ys, p["delta1"].fraction(), p["checkpoints"].checkpoints());
    o.report["psi"] = to_json(psi);
  }
  if (b.has("expect") && b["expect"].has("k") && b["expect"]["k"].u64() != res.k)
    o.failed.push_back("K = " + std::to_string(res.k) + ", expected " + std::to_string(b["expect"]["k"].u64()));
  return o;
}

// Exact mass of an indicator's set inside component i of a disjoint union.
std::optional<Rational> component_mass(const MeasurableSet& s, const System& sys, std::size_t i) {
  if (const auto* c = std::get_if<ComponentSet>(&s.v)) {
    return std::find(c->ids.begin(), c->ids.end(), static_cast<int>(i)) != c->ids.end() ? Rational(1) : Rational(0);
  }
  if (const auto* t = std::get_if<TaggedSet>(&s.v)) {
    if (static_cast<std::size_t>(t->component) != i) return Rational(0);
    return sys.parts()[i].measure(*t->inner);
  }
  return std::nullopt;
}

std::optional<Complex> component_mean(const Observable& h, const System& sys, std::size_t i) {
  const auto& n = h.node();
  if (n.kind == ObservableKind::constant) return n.value;
  if (n.kind == ObservableKind::indicator) {
    const auto m = component_mass(*n.set, sys, i);
    if (!m) return std::nullopt;
    return Complex{to_double(*m), 0.0};
  }
  if (n.kind == ObservableKind::linear) {
    Complex acc = 0.0;
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      const auto v = component_mean(n.children[k], sys, i);
      if (!v) return std::nullopt;
      acc += n.table[k] * *v;
    }
    return acc;
  }
  return std::nullopt;
}

Outcome run_decomposition(const ExperimentConfig& c, Written& w) {
  const Node b{c.body, ""};
  const System sys = b["system"].system();
  if (sys.kind() != SystemKind::disjoint_union) fail("/system", "decomposition needs a disjoint-union system");
  const Observable h = b["observable"].observable();
  const auto cps = b["checkpoints"].checkpoints();
  const auto per = b["samples"].positive();
  const auto opts = report_options(b);
  const std::size_t comps = sys.parts().size();

  std::vector<ConvergenceReport> reports;
  Json comp_json = Json::array();
  Complex weighted{};
  bool all_means = true;
  for (std::size_t i = 0; i < comps; ++i) {
    const auto mean = component_mean(h, sys, i);
    all_means = all_means && mean.has_value();
    ReportOptions o = opts;
    o.reference = mean;
    const auto local = sample_points(sys.parts()[i], derive_seed(c.seed, i), kFirstPoints, per);
    std::vector<Point> xs;
    for (const auto& p : local) xs.push_back(Point::tagged(static_cast<int>(i), p));
    auto reps = birkhoff_batch(sys, xs, h, cps, o);
    Json cj = {{"component", i},
               {"weight", to_string(sys.weights()[i])},
               {"system", to_json(sys.parts()[i])},
               {"reports", reports_json(reps)},
               {"summary", summary_json(reps)}};
    if (mean) {
      cj["mean"] = complex_to_json(*mean);
      weighted += to_double(sys.weights()[i]) * *mean;
    }
    comp_json.push_back(cj);
    reports.insert(reports.end(), reps.begin(), reps.end());
  }

  Json formula = Json::object();
  bool exact_ok = true;
  if (h.kind() == ObservableKind::indicator) {
    const Rational lhs = sys.measure(*h.node().set);
    Rational rhs = 0;
    for (std::size_t i = 0; i < comps; ++i) {
      const auto m = component_mass(*h.node().set, sys, i);
      if (!m) throw Error(ErrorCode::unsupported_set, "decomposition: set does not split over components");
      rhs += sys.weights()[i] * *m;
    }
    exact_ok = lhs == rhs;
    formula = {{"whole", to_string(lhs)}, {"weighted_sum", to_string(rhs)}, {"exact", exact_ok}};
  } else if (const auto whole = integrate(h, sys); whole && all_means) {
    formula = {{"whole", complex_to_json(*whole)},
               {"weighted_sum", complex_to_json(weighted)},
               {"difference", std::abs(*whole - weighted)}};
  }

  Outcome o;
  o.verdict = aggregate(reports);
  o.inconclusive = o.verdict != "converged";
  o.report = {{"components", comp_json}, {"formula", formula}};
  if (!exact_ok) o.failed.push_back("decomposition formula fails");
  if (b.has("expect") && b["expect"].has("within")) {
    const double within = b["expect"]["within"].number();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (!reports[i].reference) continue;
      const double err = std::abs(reports[i].limit_estimate - *reports[i].reference);
      if (!(err <= within)) o.failed.push_back("sample " + std::to_string(i) + " misses its component mean");
    }
  }
  w.csv = series_rows(reports);
  return o;
}

// ---------------------------------------------------------------------------
// bfko pipeline

struct PipelineSpec {
  std::size_t j_count = 0;
  std::uint64_t n = 0;
  double delta = 0, delta1 = 0, delta2 = 0;
  std::uint64_t m0 = 0;
  bool relaxed = false;
  // certify
  std::size_t samples = 0;
  std::uint64_t horizon = 0;
  double amplitude = 0, dip = 0;
  std::vector<std::uint64_t> thresholds;
  CertifyOptions certify;
  // blocks
  Checkpoints grid;
  double selection_delta = 0;
  // visits
  double density = 0;
  std::uint64_t k = 0;
};

PipelineSpec pipeline_spec(const Json& body) {
  const Node b{body, ""};
  PipelineSpec s;
  s.j_count = b["layers"].positive();
  s.n = b["n"].positive();
  s.delta = b["delta"].fraction();
  s.delta1 = b["delta1"].fraction();
  s.delta2 = b["delta2"].fraction();
  s.m0 = b.has("m0") ? b["m0"].u64() : 0;
  s.relaxed = b.has("relaxed") && b["relaxed"].boolean();
  const Node c = b["certify"];
  s.samples = c["samples"].positive();
  s.horizon = c["horizon"].positive();
  s.amplitude = c["amplitude"].number();
  s.dip = c.has("dip") ? c["dip"].number() : 0.0;
  if (!(s.dip >= 0 && s.dip < 1)) fail("/certify/dip", "must lie in [0, 1)");
  const Node th = c["thresholds"];
  if (!th.j.is_array() || th.j.size() != s.j_count) fail(th.path, "need one threshold per layer");
  for (std::size_t i = 0; i < th.j.size(); ++i) s.thresholds.push_back(Node{th.j[i], th.path + "/" + std::to_string(i)}.u64());
  if (c.has("limsup_threshold")) s.certify.limsup_threshold = c["limsup_threshold"].number();
  if (c.has("tail_windows")) s.certify.tail_windows = c["tail_windows"].positive();
  if (c.has("target")) s.certify.target = c["target"].number();
  const Node bl = b["blocks"];
  s.grid = bl["grid"].checkpoints();
  s.selection_delta = bl["egorov_delta"].fraction();
  const Node v = b["visits"];
  s.density = v["density"].fraction();
  s.k = v["k"].positive();
  if (s.horizon * s.samples > kCheckpointBudget) throw Error(ErrorCode::resource, "/certify: series beyond the budget");
  if (s.n > kCheckpointBudget) throw Error(ErrorCode::resource, "/n: beyond the step budget");
  return s;
}

void validate_pipeline(const Json& body) {
  const Node b{body, ""};
  pipeline_spec(body);
  const Observable f = b["observable"].observable();
  b["system"].system();
  if (!f.simple()) fail("/observable", "block families need a simple observable");
  if (b.has("second_system") != b.has("second_observable"))
    fail("/second_system", "second_system and second_observable go together");
  if (b.has("second_system")) {
    b["second_system"].system();
    b["second_observable"].observable();
  }
}

ExperimentConfig config_of(const Json& doc, const char* stage) {
  if (!doc.is_object() || !doc.contains("config")) fail(std::string("/") + stage, "stage document has no config");
  return parse_config(doc.at("config"));
}

std::string stage_file(const std::string& name, const char* stage) { return name + "." + stage + ".json"; }

}  // namespace

std::vector<std::string> bfko_stage_files(const std::string& name) {
  return {stage_file(name, "certify"), stage_file(name, "blocks"), stage_file(name, "layers"),
          stage_file(name, "audit"), stage_file(name, "contradict")};
}

Json bfko_certify(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::bfko_pipeline) fail("/kind", "expected bfko-pipeline");
  const auto s = pipeline_spec(config.body);
  const auto series = oscillating_series(s.samples, s.horizon, s.amplitude, s.dip, derive_seed(config.seed, kCertifySeries));
  const auto cert = find_bad_intervals(series, s.j_count, s.thresholds, s.certify);
  const auto failures = verify_certificate(cert, series);
  return {{"stage", "certify"}, {"config", to_json(config)}, {"certificate", to_json(cert)}, {"verification", failures}};
}

Json bfko_blocks(const Json& certify_doc) {
  const auto config = config_of(certify_doc, "certify");
  const auto s = pipeline_spec(config.body);
  const auto cert = certificate_from_json(certify_doc.at("certificate"));
  const Node b{config.body, ""};
  const System sys = b["system"].system();
  const Observable f = b["observable"].observable();
  const auto& alphabet = *f.alphabet();

  const auto& win = cert.intervals;
  const std::uint64_t max_lag = win.back().second;
  const std::uint64_t lo = win.front().first;
  const std::uint64_t hi = win.size() >= 2 ? win[win.size() - 2].second : win.back().second;
  const std::uint64_t word = hi - 1;
  const std::uint64_t len = std::max(s.grid.back() + max_lag, max_lag + word) + 1;
  if (len > kCheckpointBudget) throw Error(ErrorCode::resource, "bfko blocks: reference orbit beyond the budget");

  const Point x = sys.sample(derive_seed(config.seed, kReferencePoint));
  const auto ids = symbol_series(sys, x, f, len);
  std::vector<Complex> values(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) values[i] = alphabet[static_cast<std::size_t>(ids[i])];

  const auto sel = select_shift_references(values, max_lag, s.grid, s.delta, s.selection_delta);
  std::vector<std::uint64_t> lags;
  for (auto i : sel.selected) lags.push_back(i + 1);
  const auto family = collect_shift_blocks(alphabet, ids, lags, lo, hi);
  const auto density = good_density(ids, family, s.grid, s.delta2);

  Json sel_json = to_json(sel);
  sel_json.erase("last_bad");
  sel_json.erase("selected");
  sel_json["selected_count"] = sel.selected.size();
  sel_json["candidates"] = max_lag;
  Json dens = {{"grid", density.grid}, {"density", density.density}, {"delta2", density.delta2}};
  dens["threshold_n"] = density.threshold_n ? Json(*density.threshold_n) : Json();
  std::vector<std::int32_t> reference(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(max_lag));
  return {{"stage", "blocks"},       {"config", certify_doc.at("config")}, {"certificate", certify_doc.at("certificate")},
          {"selection", sel_json},   {"family", to_json(family)},          {"good_density", dens},
          {"reference", reference}};
}

Json bfko_layers(const Json& blocks_doc, const std::filesystem::path& dir) {
  const auto config = config_of(blocks_doc, "blocks");
  const auto s = pipeline_spec(config.body);
  const auto cert = certificate_from_json(blocks_doc.at("certificate"));
  const auto family = family_from_json(blocks_doc.at("family"));
  std::vector<std::int32_t> reference;
  for (const auto& v : blocks_doc.at("reference")) reference.push_back(v.get<std::int32_t>());

  LayerConstants k;
  k.j_count = s.j_count;
  k.a = cert.a;
  k.c = cert.c;
  k.delta = s.delta;
  k.delta1 = s.delta1;
  k.delta2 = s.delta2;
  k.k = s.k;
  k.m0 = s.m0;
  k.n_delta = blocks_doc.at("selection").at("n_delta").get<std::uint64_t>();
  k.windows = cert.intervals;
  k.n = s.n;
  k.branch = cert.branch;

  std::vector<std::uint8_t> in_b(s.n + 1, 0);
  const std::uint64_t vseed = derive_seed(config.seed, kVisits);
  for (std::uint64_t i = 1; i <= s.n; ++i) in_b[i] = uniform01(vseed, static_cast<std::int64_t>(i)) < s.density ? 1 : 0;
  const auto visits = VisitPattern::from_certificate(cert, std::move(in_b), s.k);
  BuildOptions opts;
  opts.relaxed = s.relaxed;
  const auto stack = build_layers(k, visits, family.alphabet(), reference, family, opts);

  const std::string sidecar = config.name + ".layers.bin";
  write_bytes(dir / sidecar, stack_sidecar(stack));
  return {{"stage", "layers"}, {"config", blocks_doc.at("config")}, {"stack", to_json(stack)}, {"sidecar", sidecar}};
}

namespace {

LayerStack load_stack(const Json& layers_doc, const std::filesystem::path& dir) {
  const auto sidecar = layers_doc.at("sidecar").get<std::string>();
  if (std::filesystem::path(sidecar).has_parent_path()) fail("/sidecar", "must be a bare file name");
  return stack_from_json(layers_doc.at("stack"), read_bytes(dir / sidecar));
}

}  // namespace

Json bfko_audit(const Json& layers_doc, const std::filesystem::path& dir) {
  const auto config = config_of(layers_doc, "layers");
  const auto stack = load_stack(layers_doc, dir);
  const auto audit = audit_layers(stack);
  return {{"stage", "audit"},
          {"config", layers_doc.at("config")},
          {"layers_file", stage_file(config.name, "layers")},
          {"audit", to_json(audit)}};
}

Json bfko_contradict(const Json& audit_doc, const std::filesystem::path& dir) {
  const auto config = config_of(audit_doc, "audit");
  const auto lf = audit_doc.at("layers_file").get<std::string>();
  if (std::filesystem::path(lf).has_parent_path()) fail("/layers_file", "must be a bare file name");
  const auto stack = load_stack(read_json(dir / lf), dir);
  const Node b{config.body, ""};
  const Observable f = b["observable"].observable();
  const std::uint64_t n = stack.constants.n;

  std::vector<Complex> g(n, Complex{1.0, 0.0});
  double g_sup = 1.0;
  if (b.has("second_system")) {
    const System sys2 = b["second_system"].system();
    const Observable go = b["second_observable"].observable();
    g = orbit(sys2, sys2.sample(derive_seed(config.seed, kSecondOrbit)), go, n);
    g_sup = go.sup_norm();
  }
  const auto& k = stack.constants;
  const auto ab = alpha_beta_check(stack, g, k.a, k.delta);
  std::vector<std::vector<Complex>> seqs;
  for (std::size_t j = 1; j <= k.j_count; ++j) seqs.push_back(stack.sequence(j));
  const auto chain = contradiction_chain(ab, seqs, g, {k.j_count, k.a, k.delta, f.sup_norm(), g_sup});
  const bool audit_pass = audit_doc.at("audit").at("pass").get<bool>();
  return {{"stage", "contradict"},
          {"config", audit_doc.at("config")},
          {"alpha_beta", to_json(ab)},
          {"chain", to_json(chain)},
          {"audit_pass", audit_pass},
          {"verdict", audit_pass ? std::string(to_string(chain.verdict)) : std::string("audit-failure")}};
}

namespace {

Outcome run_pipeline(const ExperimentConfig& c, Written& w, std::vector<std::filesystem::path>& files) {
  const auto names = bfko_stage_files(c.name);
  const auto& dir = c.output_dir;
  auto put = [&](std::size_t i, const Json& doc) {
    write_json(dir / names[i], doc);
    files.push_back(dir / names[i]);
  };
  const Json cert = bfko_certify(c);
  put(0, cert);
  const Json blocks = bfko_blocks(cert);
  put(1, blocks);
  const Json layers = bfko_layers(blocks, dir);
  files.push_back(dir / (c.name + ".layers.bin"));
  put(2, layers);
  const Json audit = bfko_audit(layers, dir);
  put(3, audit);
  const Json contra = bfko_contradict(audit, dir);
  put(4, contra);

  Outcome o;
  o.verdict = contra.at("verdict").get<std::string>();
  const auto& st = layers.at("stack");
  std::string csv = "layer,intervals,covered,density\n";
  for (std::size_t j = 0; j < st.at("layers").size(); ++j) {
    const auto& l = st.at("layers")[j];
    csv += std::to_string(j + 1) + "," + std::to_string(l.at("intervals").size()) + "," +
           std::to_string(l.at("covered").get<std::uint64_t>()) + "," + format_double(l.at("density").get<double>()) + "\n";
  }
  w.csv = csv;
  o.report = {{"stages", names},
              {"certificate", {{"a", cert.at("certificate").at("a")},
                               {"c", cert.at("certificate").at("c")},
                               {"intervals", cert.at("certificate").at("intervals")},
                               {"verification", cert.at("verification")}}},
              {"violations", st.at("violations")},
              {"audit_pass", audit.at("audit").at("pass")},
              {"alpha_beta", contra.at("alpha_beta")},
              {"chain", contra.at("chain")}};
  if (o.verdict == "audit-failure") o.failed.push_back("layer audit failed");
  if (!cert.at("verification").empty()) o.failed.push_back("certificate does not verify");
  return o;
}

std::uint64_t pipeline_steps(const Json& body) {
  const auto s = pipeline_spec(body);
  std::uint64_t top = 0;
  for (auto t : s.thresholds) top = std::max(top, t);
  const std::uint64_t span = 2 * top + 2;
  return s.samples * s.horizon + (s.grid.back() + span) * span / 64 + s.n * s.j_count;
}

}  // namespace

// ---------------------------------------------------------------------------
// config

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::birkhoff: return "birkhoff";
    case ExperimentKind::weighted: return "weighted";
    case ExperimentKind::spectral: return "spectral";
    case ExperimentKind::pair_correlation: return "pair-correlation";
    case ExperimentKind::egorov: return "egorov";
    case ExperimentKind::cover: return "cover";
    case ExperimentKind::bfko_pipeline: return "bfko-pipeline";
    case ExperimentKind::decomposition: return "decomposition";
  }
  return "unknown";
}

namespace {

void validate_body(const ExperimentConfig& c) {
  const Node b{c.body, ""};
  auto sys_obs = [&] {
    const System sys = b["system"].system();
    const Observable f = b["observable"].observable();
    if (!f.accepts(sys.space())) fail("/observable", "does not accept the system's space");
  };
  switch (c.kind) {
    case ExperimentKind::birkhoff:
    case ExperimentKind::egorov:
    case ExperimentKind::pair_correlation:
    case ExperimentKind::decomposition:
      sys_obs();
      b["checkpoints"].checkpoints();
      b["samples"].positive();
      if (c.kind == ExperimentKind::egorov) {
        b["bound"].number();
        b["delta"].fraction();
      }
      break;
    case ExperimentKind::weighted: {
      sys_obs();
      b["checkpoints"].checkpoints();
      b["samples"].positive();
      const Node spec = b["weights"];
      const auto source = spec["source"].str();
      if (source == "return-times") {
        spec["system"].system();
        spec["set"].set();
      } else if (source == "observable") {
        spec["system"].system();
        spec["observable"].observable();
      } else if (source == "eigen") {
        angle_from_json(spec["angle"].j, spec["angle"].path);
      } else {
        fail(at(spec.path, "source"), "expected return-times, observable or eigen");
      }
      break;
    }
    case ExperimentKind::spectral:
      sys_obs();
      b["maxlag"].positive();
      b["length"].positive();
      b["samples"].positive();
      if (b.has("checkpoints")) b["checkpoints"].checkpoints();
      break;
    case ExperimentKind::cover: {
      b["system"].system();
      b["set"].set();
      const Node dn = b["delta"];
      if (dn.j.is_string()) {
        try {
          parse_rational(dn.str());
        } catch (const Error& e) {
          fail(dn.path, e.what());
        }
      } else {
        dn.fraction();
      }
      if (b.has("psi")) {
        const Node p = b["psi"];
        p["samples"].positive();
        p["delta1"].fraction();
        p["checkpoints"].checkpoints();
      }
      break;
    }
    case ExperimentKind::bfko_pipeline: validate_pipeline(c.body); break;
  }
  if (b.has("expect") && !b["expect"].j.is_object()) fail("/expect", "expected an object");
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) fail("", "config must be a JSON object");
  const Node b{j, ""};
  ExperimentConfig c;
  c.name = b["name"].str();
  if (c.name.empty() || c.name.size() > 128 ||
      !std::all_of(c.name.begin(), c.name.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
      }) ||
      c.name.front() == '.') {
    fail("/name", "use letters, digits, '-', '_' or '.'");
  }
  const auto kind = b["kind"].str();
  static const std::map<std::string, ExperimentKind> kinds = {
      {"birkhoff", ExperimentKind::birkhoff},          {"weighted", ExperimentKind::weighted},
      {"spectral", ExperimentKind::spectral},          {"pair-correlation", ExperimentKind::pair_correlation},
      {"egorov", ExperimentKind::egorov},              {"cover", ExperimentKind::cover},
      {"bfko-pipeline", ExperimentKind::bfko_pipeline}, {"decomposition", ExperimentKind::decomposition}};
  const auto it = kinds.find(kind);
  if (it == kinds.end()) fail("/kind", "unknown experiment kind '" + kind + "'");
  c.kind = it->second;
  c.seed = b["seed"].u64();
  c.output_dir = b["output_dir"].str();
  c.body = j;
  validate_body(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& p) { return parse_config(read_json(p)); }

Json to_json(const ExperimentConfig& c) {
  Json out = c.body;
  out["name"] = c.name;
  out["kind"] = std::string(to_string(c.kind));
  out["seed"] = c.seed;
  out["output_dir"] = c.output_dir.generic_string();
  return out;
}

int exit_code_for(const Error&) { return 1; }

RunResult run(const ExperimentConfig& config) {
  RunResult r;
  Written w;
  Outcome o;
  std::filesystem::create_directories(config.output_dir);
  switch (config.kind) {
    case ExperimentKind::birkhoff: o = run_birkhoff(config, w); break;
    case ExperimentKind::weighted: o = run_weighted(config, w); break;
    case ExperimentKind::spectral: o = run_spectral(config, w); break;
    case ExperimentKind::pair_correlation: o = run_pair_correlation(config, w); break;
    case ExperimentKind::egorov: o = run_egorov(config, w); break;
    case ExperimentKind::cover: o = run_cover(config, w); break;
    case ExperimentKind::bfko_pipeline: o = run_pipeline(config, w, r.files); break;
    case ExperimentKind::decomposition: o = run_decomposition(config, w); break;
  }
  const Node b{config.body, ""};
  if (config.kind != ExperimentKind::pair_correlation) expect_verdict(b, o);

  const bool expected_inconclusive =
      b.has("expect") && b["expect"].has("verdict") && b["expect"]["verdict"].str() == o.verdict;
  if (o.inconclusive && !expected_inconclusive) {
    r.exit_code = 2;
  } else {
    r.exit_code = o.failed.empty() ? 0 : 1;
  }
  r.verdict = o.verdict;

  Json report = {{"name", config.name},
                 {"kind", std::string(to_string(config.kind))},
                 {"seed", config.seed},
                 {"verdict", o.verdict},
                 {"exit_code", r.exit_code},
                 {"expectation_failures", o.failed},
                 {"config", to_json(config)},
                 {"result", o.report}};
  const auto csv_path = config.output_dir / (config.name + ".series.csv");
  const auto json_path = config.output_dir / (config.name + ".report.json");
  write_text(csv_path, w.csv);
  write_json(json_path, report);
  r.files.insert(r.files.begin(), {csv_path, json_path});
  r.report = std::move(report);
  return r;
}

// ---------------------------------------------------------------------------
// describe

std::uint64_t estimated_steps(const ExperimentConfig& c) {
  const Node b{c.body, ""};
  switch (c.kind) {
    case ExperimentKind::birkhoff:
    case ExperimentKind::egorov:
      return b["samples"].positive() * b["checkpoints"].checkpoints().back();
    case ExperimentKind::weighted:
    case ExperimentKind::pair_correlation:
      return 2 * b["samples"].positive() * b["checkpoints"].checkpoints().back();
    case ExperimentKind::decomposition: {
      const System sys = b["system"].system();
      return sys.parts().size() * b["samples"].positive() * b["checkpoints"].checkpoints().back();
    }
    case ExperimentKind::spectral: {
      const auto samples = b["samples"].positive();
      const auto length = b["length"].positive();
      const auto maxlag = b["maxlag"].positive();
      const auto pairs = b.has("pairs") ? b["pairs"].positive() : samples;
      const auto cps = b.has("checkpoints") ? b["checkpoints"].checkpoints() : checkpoints_up_to(length);
      return samples * (length + maxlag) * (maxlag + 1) + 2 * pairs * cps.back();
    }
    case ExperimentKind::cover: {
      std::uint64_t steps = 0;
      if (b.has("psi")) steps += b["psi"]["samples"].positive() * b["psi"]["checkpoints"].checkpoints().back();
      return steps;
    }
    case ExperimentKind::bfko_pipeline: return pipeline_steps(c.body);
  }
  return 0;
}

std::string describe(const ExperimentConfig& c) {
  const Node b{c.body, ""};
  std::ostringstream os;
  os << "experiment " << c.name << " (" << to_string(c.kind) << "), seed " << c.seed << "\n";
  std::vector<std::string> ops;
  auto sys_line = [&](const char* key) { return b[key].system().describe(); };
  auto obs_line = [&](const char* key) { return b[key].observable().describe(); };
  auto cps_line = [&] {
    const auto cps = b["checkpoints"].checkpoints();
    return std::to_string(cps.size()) + " checkpoints " + std::to_string(cps.front()) + ".." + std::to_string(cps.back());
  };
  switch (c.kind) {
    case ExperimentKind::birkhoff:
      ops = {"System::sample: " + std::to_string(b["samples"].positive()) + " start points of " + sys_line("system"),
             "birkhoff_batch: f = " + obs_line("observable") + ", " + cps_line(),
             "report_from_sums: tail oscillation and verdict per sample"};
      break;
    case ExperimentKind::weighted:
      ops = {"System::sample: " + std::to_string(b["samples"].positive()) + " (x, y) pairs",
             "WeightSequence::" + b["weights"]["source"].str() + ": weights a_n",
             "weighted_average: g = " + obs_line("observable") + " on " + sys_line("system") + ", " + cps_line()};
      break;
    case ExperimentKind::spectral:
      ops = {"autocorrelation: " + obs_line("observable") + " on " + sys_line("system") + ", maxlag " +
                 std::to_string(b["maxlag"].positive()) + ", length " + std::to_string(b["length"].positive()),
             "compute_wiener_means and wiener_test", "pair_correlation_test on independent pairs",
             "verdicts_agree"};
      break;
    case ExperimentKind::pair_correlation:
      ops = {"System::sample: " + std::to_string(b["samples"].positive()) + " independent pairs",
             "pair_correlation_test: " + obs_line("observable") + ", " + cps_line()};
      break;
    case ExperimentKind::egorov:
      ops = {"birkhoff_batch: " + std::to_string(b["samples"].positive()) + " candidates, " + cps_line(),
             "integrate: closed-form limit", "egorov_set: bound and delta"};
      break;
    case ExperimentKind::cover:
      ops = {"union_cover: doubling search then bisection over image_union_measure"};
      if (b.has("psi")) ops.push_back("psi_average_check: visits to the cover along sample orbits");
      break;
    case ExperimentKind::decomposition:
      ops = {"ergodic components of " + sys_line("system"),
             "birkhoff_batch per component: " + std::to_string(b["samples"].positive()) + " points, " + cps_line(),
             "exact decomposition formula"};
      break;
    case ExperimentKind::bfko_pipeline:
      ops = {"certify: oscillating_series, find_bad_intervals, verify_certificate -> " + bfko_stage_files(c.name)[0],
             "blocks: symbol_series, select_shift_references, collect_shift_blocks, good_density -> " +
                 bfko_stage_files(c.name)[1],
             "layers: check_constraints, VisitPattern::from_certificate, build_layers -> " + bfko_stage_files(c.name)[2] +
                 " + " + c.name + ".layers.bin",
             "audit: audit_layers -> " + bfko_stage_files(c.name)[3],
             "contradict: alpha_beta_check, contradiction_chain -> " + bfko_stage_files(c.name)[4]};
      break;
  }
  for (std::size_t i = 0; i < ops.size(); ++i) os << "  " << (i + 1) << ". " << ops[i] << "\n";
  os << "outputs: " << (c.output_dir / (c.name + ".series.csv")).generic_string() << ", "
     << (c.output_dir / (c.name + ".report.json")).generic_string() << "\n";
  os << "budget: " << estimated_steps(c) << " steps (per-orbit cap " << kCheckpointBudget << ")\n";
  os << "threads: " << thread_budget() << "\n";
  return os.str();
}

}  // namespace ergolab
