#pragma once

#include "capra/subsets.hpp"

#include <functional>
#include <string>
#include <vector>

namespace capra {

/// F : 2^V -> extended reals, stored as a full table in bitmask order.
/// Flags are computed from the table on construction.
class SetFunction {
 public:
  SetFunction(int d, std::vector<ExtReal> values);

  static SetFunction from_generator(int d, const std::function<ExtReal(const SubsetMask&)>& gen);
  /// F(K) = |K|.
  static SetFunction cardinality(int d);
  /// F(K) = sqrt(|K|).
  static SetFunction sqrt_cardinality(int d);
  /// F(K) = a + b|K| for K nonempty, F(empty) = 0.
  static SetFunction affine(int d, double a, double b);
  /// Named generator: "cardinality", "sqrt-cardinality", "affine".
  static SetFunction named(int d, const std::string& name, double a = 0.0, double b = 1.0);

  int dim() const { return d_; }
  const ExtReal& operator()(const SubsetMask& K) const;
  const ExtReal& at(std::uint32_t bits) const { return values_.at(bits); }
  const std::vector<ExtReal>& values() const { return values_; }
  /// Finite value at K; throws when F(K) is infinite.
  double finite(const SubsetMask& K) const { return (*this)(K).value(); }

  bool nondecreasing() const { return nondecreasing_; }
  bool finite_valued() const { return finite_valued_; }
  bool normalized() const { return normalized_; }
  /// Name of the generator, or "table".
  const std::string& label() const { return label_; }

  /// Value at supp(x).
  template <typename Derived>
  const ExtReal& of_support(const Eigen::MatrixBase<Derived>& x) const {
    return (*this)(support(x));
  }

 private:
  int d_;
  std::vector<ExtReal> values_;
  bool nondecreasing_ = false;
  bool finite_valued_ = false;
  bool normalized_ = false;
  std::string label_ = "table";
};

}  // namespace capra
