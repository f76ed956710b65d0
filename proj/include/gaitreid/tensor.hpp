#pragma once

#include <cassert>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaitreid {

// Dense row-major tensor of doubles. All network math runs in 64-bit;
// checkpoints quantize to float32 at the persistence boundary.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    v_.assign(static_cast<std::size_t>(numel_of(shape_)), 0.0);
  }
  Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static long numel_of(const std::vector<int>& shape) {
    long n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("negative tensor dimension");
      n *= d;
    }
    return n;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  long numel() const { return static_cast<long>(v_.size()); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double& operator[](long i) { return v_[static_cast<std::size_t>(i)]; }
  double operator[](long i) const { return v_[static_cast<std::size_t>(i)]; }

  double& at2(int i, int j) { return v_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  double at2(int i, int j) const { return v_[static_cast<std::size_t>(i) * shape_[1] + j]; }

  // (b, c, y, x) for rank-4 tensors
  double& at4(int b, int c, int y, int x) {
    return v_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  double at4(int b, int c, int y, int x) const {
    return v_[((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

  Tensor reshaped(std::vector<int> shape) const {
    if (numel_of(shape) != numel()) throw std::invalid_argument("reshape changes element count");
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_ = v_;
    return t;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

  std::vector<double>& vec() { return v_; }
  const std::vector<double>& vec() const { return v_; }

 private:
  std::vector<int> shape_;
  std::vector<double> v_;
};

inline void add_into(Tensor& dst, const Tensor& src) {
  assert(dst.numel() == src.numel());
  double* d = dst.data();
  const double* s = src.data();
  for (long i = 0; i < dst.numel(); ++i) d[i] += s[i];
}

inline void scale(Tensor& t, double a) {
  double* d = t.data();
  for (long i = 0; i < t.numel(); ++i) d[i] *= a;
}

}  // namespace gaitreid
