#pragma once

#include <string>
#include <vector>

#include "gaitreid/rng.hpp"
#include "gaitreid/tensor.hpp"

namespace gaitreid::nn {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
// op(A) is m x k, op(B) is k x n, C is m x n. Backed by Eigen.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc);

// Patch gather/scatter shared by convolution and its transpose.
// Positions (py, px) index a PH x PW grid; element (c, ky, kx) at a position
// maps to image pixel (py*stride + ky - pad, px*stride + kx - pad).
void im2col(const double* img, int channels, int ih, int iw, int k, int stride,
            int pad, int ph, int pw, double* cols);
void col2im_add(const double* cols, int channels, int ih, int iw, int k,
                int stride, int pad, int ph, int pw, double* img);

struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;  // null for non-trainable buffers
  bool trainable = true;
};

class Conv2d {
 public:
  Conv2d(int in_c, int out_c, int k, int stride, int pad);
  void init(Rng& rng);
  Tensor forward(const Tensor& x);  // (B, in_c, H, W) -> (B, out_c, OH, OW)
  Tensor backward(const Tensor& gy);
  void collect(std::vector<ParamRef>& out, const std::string& prefix);
  int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }
  int out_w(int w) const { return (w + 2 * pad_ - k_) / stride_ + 1; }

  int in_c_, out_c_, k_, stride_, pad_;
  Tensor w_, b_, gw_, gb_;

 private:
  Tensor x_;  // cached input
};

class ConvTranspose2d {
 public:
  ConvTranspose2d(int in_c, int out_c, int k, int stride, int pad);
  void init(Rng& rng);
  Tensor forward(const Tensor& x);  // (B, in_c, H, W) -> (B, out_c, OH, OW)
  Tensor backward(const Tensor& gy);
  void collect(std::vector<ParamRef>& out, const std::string& prefix);
  int out_h(int h) const { return (h - 1) * stride_ - 2 * pad_ + k_; }
  int out_w(int w) const { return (w - 1) * stride_ - 2 * pad_ + k_; }

  int in_c_, out_c_, k_, stride_, pad_;
  Tensor w_, b_, gw_, gb_;  // w: (in_c, out_c*k*k)

 private:
  Tensor x_;
};

class Linear {
 public:
  Linear(int in_dim, int out_dim);
  void init(Rng& rng);
  Tensor forward(const Tensor& x);  // (B, in) -> (B, out)
  Tensor backward(const Tensor& gy);
  void collect(std::vector<ParamRef>& out, const std::string& prefix);

  int in_dim_, out_dim_;
  Tensor w_, b_, gw_, gb_;  // w: (out, in)

 private:
  Tensor x_;
};

class BatchNorm2d {
 public:
  explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.1);
  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& gy);  // valid after a train-mode forward
  void collect(std::vector<ParamRef>& out, const std::string& prefix);

  int c_;
  double eps_, momentum_;
  Tensor gamma_, beta_, ggamma_, gbeta_;
  Tensor running_mean_, running_var_;

 private:
  Tensor xhat_;
  std::vector<double> invstd_;
  bool last_train_ = false;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  std::vector<char> pos_;
};

class LeakyReLU {
 public:
  explicit LeakyReLU(double slope = 0.01) : slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  double slope_;
  std::vector<char> pos_;
};

class Sigmoid {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  Tensor y_;
};

// 2x2, stride 2
class MaxPool2d {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& gy);

 private:
  std::vector<int> argmax_;
  std::vector<int> in_shape_;
};

void zero_grads(std::vector<ParamRef>& params);

}  // namespace gaitreid::nn
