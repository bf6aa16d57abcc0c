#include "capra/subsets.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace capra {

void require_dim(int d) {
  if (d < 1 || d > kMaxDim)
    throw DimensionError("dimension " + std::to_string(d) + " outside [1, " +
                         std::to_string(kMaxDim) + "]");
}

void require_same_dim(int a, int b, const char* where) {
  if (a != b)
    throw DimensionError(std::string(where) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
}

void require_finite(const Vector& x, const char* where) {
  if (!x.allFinite()) throw std::invalid_argument(std::string(where) + ": non-finite entry");
}

SubsetMask::SubsetMask(std::uint32_t bits, int dim) : bits_(bits), dim_(dim) {
  require_dim(dim);
  if (dim < 32 && (bits >> dim) != 0)
    throw std::invalid_argument("SubsetMask: bits outside the low " + std::to_string(dim));
}

SubsetMask SubsetMask::full(int dim) {
  require_dim(dim);
  return {(1u << dim) - 1u, dim};
}

SubsetMask SubsetMask::from_indices(int dim, std::initializer_list<int> idx) {
  require_dim(dim);
  std::uint32_t b = 0;
  for (int i : idx) {
    if (i < 0 || i >= dim) throw std::out_of_range("SubsetMask: index out of range");
    b |= 1u << i;
  }
  return {b, dim};
}

int SubsetMask::size() const { return std::popcount(bits_); }

SubsetMask SubsetMask::complement() const { return {~bits_ & full(dim_).bits(), dim_}; }

std::string SubsetMask::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (int i = 0; i < dim_; ++i) {
    if (!contains(i)) continue;
    if (!first) os << ',';
    os << i + 1;
    first = false;
  }
  os << '}';
  return os.str();
}

SubsetRange enumerate_subsets(int d) {
  require_dim(d);
  return SubsetRange(d);
}

ExtReal::ExtReal(double v) {
  if (std::isnan(v)) throw std::invalid_argument("ExtReal: NaN");
  if (v == std::numeric_limits<double>::infinity()) {
    kind_ = Kind::pos_inf;
  } else if (v == -std::numeric_limits<double>::infinity()) {
    kind_ = Kind::neg_inf;
  } else {
    v_ = v;
  }
}

double ExtReal::value() const {
  if (!is_finite()) throw std::domain_error("ExtReal::value on infinite entry");
  return v_;
}

double ExtReal::to_double() const {
  switch (kind_) {
    case Kind::pos_inf: return std::numeric_limits<double>::infinity();
    case Kind::neg_inf: return -std::numeric_limits<double>::infinity();
    default: return v_;
  }
}

ExtReal ExtReal::operator-() const {
  switch (kind_) {
    case Kind::pos_inf: return neg_inf();
    case Kind::neg_inf: return pos_inf();
    default: return ExtReal(-v_);
  }
}

ExtReal lower_add(const ExtReal& a, const ExtReal& b) {
  if (a.is_neg_inf() || b.is_neg_inf()) return ExtReal::neg_inf();
  if (a.is_pos_inf() || b.is_pos_inf()) return ExtReal::pos_inf();
  return ExtReal(a.v_ + b.v_);
}

ExtReal upper_add(const ExtReal& a, const ExtReal& b) {
  if (a.is_pos_inf() || b.is_pos_inf()) return ExtReal::pos_inf();
  if (a.is_neg_inf() || b.is_neg_inf()) return ExtReal::neg_inf();
  return ExtReal(a.v_ + b.v_);
}

bool operator<(const ExtReal& a, const ExtReal& b) { return a.to_double() < b.to_double(); }
bool operator==(const ExtReal& a, const ExtReal& b) { return a.to_double() == b.to_double(); }

std::string ExtReal::to_string() const {
  if (is_pos_inf()) return "+inf";
  if (is_neg_inf()) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v_;
  return os.str();
}

}  // namespace capra
