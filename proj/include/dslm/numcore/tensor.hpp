#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dslm::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. Real is double by default throughout the project;
// float instantiations exist for faster training runs.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor scalar(Real value) { return Tensor(Shape{1}, std::vector<Real>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  // Extent of the last axis, and the product of all leading axes.
  std::size_t cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }
  std::size_t rows() const noexcept { return cols() == 0 ? 0 : size() / cols(); }

  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }
  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }
  std::vector<Real>& storage() noexcept { return data_; }
  const std::vector<Real>& storage() const noexcept { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  Real item() const;

  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const Real> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool flag) noexcept { requires_grad_ = flag; }

  void fill(Real value);
  Tensor reshaped(Shape shape) const;
  // Rows [begin, end) of a tensor viewed as (rows() x cols()).
  Tensor slice_rows(std::size_t begin, std::size_t end) const;
  bool all_finite() const;

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, std::vector<Other>(data_.begin(), data_.end()));
  }

 private:
  Shape shape_;
  std::vector<Real> data_;
  bool requires_grad_ = false;
};

template <typename Real>
bool bitwise_equal(const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Real max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b);

}  // namespace dslm::num
