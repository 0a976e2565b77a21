#include "dslm/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dslm/common/error.hpp"

namespace dslm::num {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, Real fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw Error("tensor shape " + shape_string(shape_) + " does not match " + std::to_string(data_.size()) +
                " values");
  }
}

template <typename Real>
std::size_t Tensor<Real>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw Error("axis out of range for shape " + shape_string(shape_));
  return shape_[axis];
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (data_.size() != 1) throw Error("item() on non-scalar tensor " + shape_string(shape_));
  return data_[0];
}

template <typename Real>
void Tensor<Real>::fill(Real value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw Error("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename Real>
Tensor<Real> Tensor<Real>::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw Error("slice_rows out of range for " + shape_string(shape_));
  const std::size_t c = cols();
  std::vector<Real> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                        data_.begin() + static_cast<std::ptrdiff_t>(end * c));
  return Tensor(Shape{end - begin, c}, std::move(out));
}

template <typename Real>
bool Tensor<Real>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

template <typename Real>
bool bitwise_equal(const Tensor<Real>& a, const Tensor<Real>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.size() * sizeof(Real)) == 0;
}

template <typename Real>
Real max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) {
    throw Error("max_abs_diff: shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template class Tensor<float>;
template class Tensor<double>;
template bool bitwise_equal(const Tensor<float>&, const Tensor<float>&);
template bool bitwise_equal(const Tensor<double>&, const Tensor<double>&);
template float max_abs_diff(const Tensor<float>&, const Tensor<float>&);
template double max_abs_diff(const Tensor<double>&, const Tensor<double>&);

}  // namespace dslm::num
