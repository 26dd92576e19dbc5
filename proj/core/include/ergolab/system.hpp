// Concrete measure-preserving systems.
//
// A System is an immutable handle; copies share the node. Orbits are pure
// functions of (system, point, length).

#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/fixed.hpp"
#include "ergolab/point.hpp"
#include "ergolab/rational.hpp"
#include "ergolab/sets.hpp"

namespace ergolab {

enum class SystemKind {
  rotation,
  doubling,
  bernoulli,
  markov,
  product,
  eigen_product,
  natural_extension,
  disjoint_union,
  restricted,
};

std::string_view to_string(SystemKind kind);

struct Space {
  enum class Kind { circle, sequence, tuple, tagged };

  Kind kind = Kind::circle;
  int alphabet = 0;
  bool two_sided = false;
  std::vector<Space> parts;

  bool contains(const Point& x) const;
  bool operator==(const Space&) const = default;
};

class System {
 public:
  struct Node;

  static System rotation(Angle alpha, std::uint64_t seed = 0);
  static System doubling(std::uint64_t seed);
  /// One-sided i.i.d. shift on {0,1} with P(1) = p.
  static System bernoulli(const Rational& p, std::uint64_t seed);
  /// Stationary Markov shift. The stationary law is solved exactly when not
  /// supplied; a supplied one is verified exactly.
  static System markov(const std::vector<std::vector<Rational>>& matrix, std::uint64_t seed,
                       const std::optional<std::vector<Rational>>& stationary = std::nullopt);
  static System product(std::vector<System> parts, std::uint64_t seed);
  static System disjoint_union(const std::vector<std::pair<Rational, System>>& parts, std::uint64_t seed);

  SystemKind kind() const;
  bool ergodic() const;
  bool invertible() const;
  /// Mixing in the measure-theoretic sense; only the trivially known cases are flagged.
  bool mixing() const;
  std::uint64_t seed() const;
  Space space() const;
  std::string describe() const;

  const Angle& angle() const;                              // rotation, eigen-product
  const Rational& bernoulli_p() const;                     // bernoulli, or its extension
  const std::vector<std::vector<Rational>>& markov_matrix() const;
  const std::vector<Rational>& stationary() const;
  const std::vector<System>& parts() const;                // product / union components
  const std::vector<Rational>& weights() const;            // union weights
  const System& base() const;                              // eigen, extension, restricted
  const std::optional<MeasurableSet>& restriction() const;
  const Rational& restriction_mass() const;

  bool in_space(const Point& x) const { return space().contains(x); }
  void step(Point& x) const;
  void step_inverse(Point& x) const;
  /// T^n x; exact and O(1) for rotations and i.i.d. shifts.
  Point advance(const Point& x, std::uint64_t n) const;
  /// Draw from the invariant measure; a pure function of (seed, index).
  Point sample(std::uint64_t index) const;

  Rational measure(const MeasurableSet& set) const;
  /// T^{-j} B.
  MeasurableSet preimage(const MeasurableSet& set, std::int64_t j) const;
  /// S^j B = T^{-(-j)} B; requires an invertible system.
  MeasurableSet image(const MeasurableSet& set, std::int64_t j) const;
  /// Exact measure of a union of cylinders.
  Rational cylinder_union_measure(const std::vector<Cylinder>& cylinders) const;

  const Node& node() const { return *node_; }

 private:
  explicit System(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  friend System make_system(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// (z, y) -> (lambda z, S y) on circle x base, with lambda = e^{2 pi i beta}.
System eigen_product(const Angle& beta, const System& base);
/// |lambda| must be 1 within the tolerance documented in the README.
System eigen_product(std::complex<double> lambda, const System& base);

struct NaturalExtension {
  System system;
  System base;
  bool already_invertible = false;

  /// Factor map back to the base space.
  Point project(const Point& x) const;
};

NaturalExtension natural_extension(const System& base);

/// sys with its measure conditioned on the invariant set A.
System atom_restrict(const System& sys, const MeasurableSet& atom);

struct Component {
  Rational weight;
  System system;
};

std::vector<Component> ergodic_components(const System& sys);

}  // namespace ergolab
