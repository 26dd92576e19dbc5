// Observables as immutable descriptor trees.
//
// Every node knows its sup-norm and, when it takes finitely many values, its
// alphabet. Unbounded nodes (power laws, log) only exist so that truncation
// has something closed-form to act on.

#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/point.hpp"
#include "ergolab/sets.hpp"
#include "ergolab/system.hpp"

namespace ergolab {

using Complex = std::complex<double>;

enum class ObservableKind {
  constant,
  coordinate,
  character,
  character_sum,
  indicator,
  bit_window,
  tensor,
  linear,
  power,
  log,
  truncated,
  quantized,
};

std::string_view to_string(ObservableKind kind);

/// How truncate() cuts |g| above the level k.
///   clip:      g * min(1, k / |g|)   (|g - g_k| = (|g| - k)^+)
///   indicator: g * 1{|g| <= k}       (|g - g_k| = |g| 1{|g| > k})
enum class TruncationRule { clip, indicator };

class Observable {
 public:
  struct Node;

  static Observable constant(Complex c);
  /// x on the circle; the 64-bit binary value on a binary stream.
  static Observable coordinate();
  /// e^{2 pi i k x}.
  static Observable character(std::int64_t k);
  static Observable character_sum(const std::vector<std::pair<std::int64_t, Complex>>& terms);
  static Observable indicator(const MeasurableSet& set);
  /// table[sum_i s_{offset+i} d^i] over `length` consecutive symbols.
  static Observable bit_window(std::int64_t offset, int length, std::vector<Complex> table);
  static Observable first_bit() { return bit_window(0, 1, {0.0, 1.0}); }
  static Observable centered_first_bit() { return bit_window(0, 1, {-0.5, 0.5}); }
  static Observable tensor(std::vector<Observable> factors);
  static Observable linear(const std::vector<std::pair<Complex, Observable>>& terms);
  /// x^s of the coordinate; unbounded for s < 0.
  static Observable power(double exponent);
  static Observable log_coordinate();

  ObservableKind kind() const;
  Complex operator()(const Point& x) const;
  double sup_norm() const;
  bool bounded() const;
  bool real_valued() const;
  /// Present iff the observable is simple.
  const std::optional<std::vector<Complex>>& alphabet() const;
  bool simple() const { return alphabet().has_value(); }
  bool accepts(const Space& space) const;
  std::string describe() const;

  const Node& node() const { return *node_; }

 private:
  explicit Observable(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  friend Observable make_observable(std::shared_ptr<const Node> n);
  std::shared_ptr<const Node> node_;
};

struct Observable::Node {
  ObservableKind kind = ObservableKind::constant;
  Complex value{};
  std::int64_t k = 0;       // character frequency, window offset
  int length = 0;           // window length
  std::vector<std::int64_t> frequencies;
  std::vector<Complex> table;  // window table, character-sum / linear coefficients
  std::optional<MeasurableSet> set;
  std::vector<Observable> children;
  double exponent = 0.0;
  double level = 0.0;       // truncation level or quantization k
  TruncationRule rule = TruncationRule::clip;

  double sup = 0.0;
  bool real = true;
  std::optional<std::vector<Complex>> alphabet;
};

/// Floor-grid quantization: floor(k Re f)/k + i floor(k Im f)/k.
Observable simple_approx(const Observable& f, std::uint64_t k);

Observable truncate(const Observable& g, double k, TruncationRule rule = TruncationRule::clip);

/// Closed-form integral against the invariant measure, when one is known.
std::optional<Complex> integrate(const Observable& f, const System& sys);

/// Closed-form L1 norm of g - truncate(g, k) under Lebesgue measure on the
/// coordinate, for power-law descriptors.
std::optional<double> truncation_l1_error(const Observable& g, double k,
                                          TruncationRule rule = TruncationRule::clip);

/// Closed-form L1 norm under Lebesgue measure, when finite.
std::optional<double> l1_norm(const Observable& g);

struct KroneckerSplit {
  Observable f1;
  Observable f2;
  double residual_norm_bound = 0.0;
};

/// Projection onto the Kronecker factor for rotations, mixing systems, and a
/// rotation times mixing systems. `samples` sets the residual estimate.
KroneckerSplit kronecker_split(const Observable& f, const System& sys, std::uint64_t samples = 4096);

/// f(T^1 x), ..., f(T^N x).
std::vector<Complex> orbit(const System& sys, const Point& x, const Observable& f, std::uint64_t n);

void check_compatible(const System& sys, const Point& x, const Observable& f);

}  // namespace ergolab
