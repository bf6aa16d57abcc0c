#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <string>

namespace capra {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest dimension accepted by routines that enumerate all 2^d subsets.
inline constexpr int kMaxDim = 16;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine exhausts its budget. Carries the best bound reached.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_bound)
      : std::runtime_error(what), best_bound_(best_bound) {}
  double best_bound() const noexcept { return best_bound_; }

 private:
  double best_bound_;
};

void require_dim(int d);
void require_same_dim(int a, int b, const char* where);
void require_finite(const Vector& x, const char* where);

/// A subset K of V = {1,...,d}, stored as the low d bits of a word.
/// Bit i (0-based) stands for coordinate i+1.
class SubsetMask {
 public:
  SubsetMask() = default;
  SubsetMask(std::uint32_t bits, int dim);

  static SubsetMask empty(int dim) { return {0u, dim}; }
  static SubsetMask full(int dim);
  /// 0-based coordinate indices.
  static SubsetMask from_indices(int dim, std::initializer_list<int> idx);

  std::uint32_t bits() const { return bits_; }
  int dim() const { return dim_; }
  int size() const;
  bool is_empty() const { return bits_ == 0; }
  bool contains(int i) const { return (bits_ >> i) & 1u; }
  bool is_subset_of(const SubsetMask& other) const { return (bits_ & ~other.bits_) == 0; }

  SubsetMask complement() const;
  SubsetMask operator&(const SubsetMask& o) const { return {bits_ & o.bits_, dim_}; }
  SubsetMask operator|(const SubsetMask& o) const { return {bits_ | o.bits_, dim_}; }
  bool operator==(const SubsetMask& o) const { return bits_ == o.bits_ && dim_ == o.dim_; }
  bool operator!=(const SubsetMask& o) const { return !(*this == o); }

  /// 1-based listing, e.g. "{1,3}"; the empty set prints as "{}".
  std::string to_string() const;

 private:
  std::uint32_t bits_ = 0;
  int dim_ = 1;
};

/// Iterates over all 2^d subsets in bitmask order: the empty set first, V last.
class SubsetRange {
 public:
  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = SubsetMask;
    using difference_type = std::ptrdiff_t;
    using pointer = const SubsetMask*;
    using reference = SubsetMask;

    iterator(std::uint64_t b, int d) : b_(b), d_(d) {}
    SubsetMask operator*() const { return {static_cast<std::uint32_t>(b_), d_}; }
    iterator& operator++() { ++b_; return *this; }
    iterator operator++(int) { auto t = *this; ++b_; return t; }
    bool operator==(const iterator& o) const { return b_ == o.b_; }
    bool operator!=(const iterator& o) const { return b_ != o.b_; }

   private:
    std::uint64_t b_;
    int d_;
  };

  explicit SubsetRange(int d) : d_(d) {}
  iterator begin() const { return {0, d_}; }
  iterator end() const { return {std::uint64_t{1} << d_, d_}; }
  std::size_t size() const { return std::size_t{1} << d_; }

 private:
  int d_;
};

SubsetRange enumerate_subsets(int d);

/// Calls fn(J) for every J ⊆ K, including the empty set and K itself.
template <typename Fn>
void for_each_subset_of(const SubsetMask& K, Fn&& fn) {
  const std::uint32_t k = K.bits();
  std::uint32_t j = k;
  while (true) {
    fn(SubsetMask(j, K.dim()));
    if (j == 0) break;
    j = (j - 1) & k;
  }
}

/// Extended real: finite, +inf or -inf. Never NaN.
class ExtReal {
 public:
  enum class Kind { finite, pos_inf, neg_inf };

  ExtReal() = default;
  ExtReal(double v);  // NOLINT: implicit from double is intended
  static ExtReal pos_inf() { ExtReal r; r.kind_ = Kind::pos_inf; return r; }
  static ExtReal neg_inf() { ExtReal r; r.kind_ = Kind::neg_inf; return r; }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::finite; }
  bool is_pos_inf() const { return kind_ == Kind::pos_inf; }
  bool is_neg_inf() const { return kind_ == Kind::neg_inf; }
  /// Finite value; throws for infinite entries.
  double value() const;
  /// IEEE view: ±infinity for infinite entries.
  double to_double() const;

  ExtReal operator-() const;
  /// Moreau lower addition: (+inf) + (-inf) = -inf.
  friend ExtReal lower_add(const ExtReal& a, const ExtReal& b);
  /// Moreau upper addition: (+inf) + (-inf) = +inf.
  friend ExtReal upper_add(const ExtReal& a, const ExtReal& b);

  friend bool operator<(const ExtReal& a, const ExtReal& b);
  friend bool operator==(const ExtReal& a, const ExtReal& b);
  friend bool operator>(const ExtReal& a, const ExtReal& b) { return b < a; }
  friend bool operator<=(const ExtReal& a, const ExtReal& b) { return !(b < a); }
  friend bool operator>=(const ExtReal& a, const ExtReal& b) { return !(a < b); }
  friend bool operator!=(const ExtReal& a, const ExtReal& b) { return !(a == b); }

  std::string to_string() const;

 private:
  Kind kind_ = Kind::finite;
  double v_ = 0.0;
};

ExtReal lower_add(const ExtReal& a, const ExtReal& b);
ExtReal upper_add(const ExtReal& a, const ExtReal& b);
inline ExtReal max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }
inline ExtReal min(const ExtReal& a, const ExtReal& b) { return b < a ? b : a; }

/// supp(x) = { j : x_j != 0 } with exact zero comparison.
template <typename Derived>
SubsetMask support(const Eigen::MatrixBase<Derived>& x) {
  const int d = static_cast<int>(x.size());
  require_dim(d);
  std::uint32_t bits = 0;
  for (int i = 0; i < d; ++i)
    if (x(i) != 0.0) bits |= (1u << i);
  return {bits, d};
}

/// Support with |x_j| > eps, for measured data.
template <typename Derived>
SubsetMask support_with_tol(const Eigen::MatrixBase<Derived>& x, double eps) {
  const int d = static_cast<int>(x.size());
  require_dim(d);
  std::uint32_t bits = 0;
  for (int i = 0; i < d; ++i)
    if (std::abs(x(i)) > eps) bits |= (1u << i);
  return {bits, d};
}

/// x_K: equal to x on K and zero elsewhere.
template <typename Derived>
typename Derived::PlainObject project(const Eigen::MatrixBase<Derived>& x, const SubsetMask& K) {
  require_same_dim(static_cast<int>(x.size()), K.dim(), "project");
  typename Derived::PlainObject out = x;
  for (int i = 0; i < K.dim(); ++i)
    if (!K.contains(i)) out(i) = 0;
  return out;
}

/// True iff supp(x) ⊆ K, i.e. x lies on the coordinate subspace of K.
template <typename Derived>
bool level_set_membership(const Eigen::MatrixBase<Derived>& x, const SubsetMask& K) {
  require_same_dim(static_cast<int>(x.size()), K.dim(), "level_set_membership");
  return support(x).is_subset_of(K);
}

}  // namespace capra
