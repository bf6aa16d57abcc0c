#include "capra/set_function.hpp"

#include <cmath>

namespace capra {

SetFunction::SetFunction(int d, std::vector<ExtReal> values) : d_(d), values_(std::move(values)) {
  require_dim(d);
  if (values_.size() != (std::size_t{1} << d))
    throw std::invalid_argument("SetFunction: expected 2^d = " + std::to_string(1u << d) +
                                " values, got " + std::to_string(values_.size()));
  finite_valued_ = true;
  for (const auto& v : values_) finite_valued_ = finite_valued_ && v.is_finite();
  normalized_ = values_[0] == ExtReal(0.0);
  // J ⊆ K pairs reduce to covering pairs K \ {i} ⊆ K by transitivity.
  nondecreasing_ = true;
  for (std::uint32_t k = 1; k < values_.size() && nondecreasing_; ++k)
    for (int i = 0; i < d; ++i)
      if (((k >> i) & 1u) && values_[k & ~(1u << i)] > values_[k]) {
        nondecreasing_ = false;
        break;
      }
}

SetFunction SetFunction::from_generator(int d, const std::function<ExtReal(const SubsetMask&)>& gen) {
  require_dim(d);
  std::vector<ExtReal> v;
  v.reserve(std::size_t{1} << d);
  for (auto K : enumerate_subsets(d)) v.push_back(gen(K));
  return SetFunction(d, std::move(v));
}

SetFunction SetFunction::cardinality(int d) {
  auto F = from_generator(d, [](const SubsetMask& K) { return ExtReal(K.size()); });
  F.label_ = "cardinality";
  return F;
}

SetFunction SetFunction::sqrt_cardinality(int d) {
  auto F = from_generator(d, [](const SubsetMask& K) { return ExtReal(std::sqrt(K.size())); });
  F.label_ = "sqrt-cardinality";
  return F;
}

SetFunction SetFunction::affine(int d, double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("affine set function: non-finite coefficient");
  auto F = from_generator(d, [a, b](const SubsetMask& K) {
    return K.is_empty() ? ExtReal(0.0) : ExtReal(a + b * K.size());
  });
  F.label_ = "affine";
  return F;
}

SetFunction SetFunction::named(int d, const std::string& name, double a, double b) {
  if (name == "cardinality") return cardinality(d);
  if (name == "sqrt-cardinality") return sqrt_cardinality(d);
  if (name == "affine") return affine(d, a, b);
  throw std::invalid_argument("unknown set function name: " + name);
}

const ExtReal& SetFunction::operator()(const SubsetMask& K) const {
  require_same_dim(K.dim(), d_, "SetFunction");
  return values_[K.bits()];
}

}  // namespace capra
