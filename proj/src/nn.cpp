#include "gaitreid/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace gaitreid::nn {

void im2col(const double* img, int channels, int ih, int iw, int k, int stride,
            int pad, int ph, int pw, double* cols) {
  const long npos = static_cast<long>(ph) * pw;
  long row = 0;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        double* dst = cols + row * npos;
        for (int py = 0; py < ph; ++py) {
          const int y = py * stride + ky - pad;
          if (y < 0 || y >= ih) {
            for (int px = 0; px < pw; ++px) dst[py * pw + px] = 0.0;
            continue;
          }
          const double* src = img + (static_cast<long>(c) * ih + y) * iw;
          for (int px = 0; px < pw; ++px) {
            const int x = px * stride + kx - pad;
            dst[py * pw + px] = (x < 0 || x >= iw) ? 0.0 : src[x];
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, int channels, int ih, int iw, int k,
                int stride, int pad, int ph, int pw, double* img) {
  const long npos = static_cast<long>(ph) * pw;
  long row = 0;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        const double* src = cols + row * npos;
        for (int py = 0; py < ph; ++py) {
          const int y = py * stride + ky - pad;
          if (y < 0 || y >= ih) continue;
          double* dst = img + (static_cast<long>(c) * ih + y) * iw;
          for (int px = 0; px < pw; ++px) {
            const int x = px * stride + kx - pad;
            if (x >= 0 && x < iw) dst[x] += src[py * pw + px];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_c, int out_c, int k, int stride, int pad)
    : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
      w_({out_c, in_c * k * k}), b_({out_c}),
      gw_({out_c, in_c * k * k}), gb_({out_c}) {}

void Conv2d::init(Rng& rng) {
  const double std = std::sqrt(2.0 / (in_c_ * k_ * k_));
  for (long i = 0; i < w_.numel(); ++i) w_[i] = rng.normal(0.0, std);
  b_.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != in_c_)
    throw std::invalid_argument("Conv2d: bad input shape " + x.shape_str());
  x_ = x;
  const int bsz = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = out_h(h), ow = out_w(w);
  const long npos = static_cast<long>(oh) * ow;
  const int ckk = in_c_ * k_ * k_;
  Tensor y({bsz, out_c_, oh, ow});
  std::vector<double> cols(static_cast<std::size_t>(ckk) * npos);
  for (int b = 0; b < bsz; ++b) {
    im2col(x.data() + static_cast<long>(b) * in_c_ * h * w, in_c_, h, w, k_,
           stride_, pad_, oh, ow, cols.data());
    double* yb = y.data() + static_cast<long>(b) * out_c_ * npos;
    gemm(false, false, out_c_, static_cast<int>(npos), ckk, 1.0, w_.data(), ckk,
         cols.data(), static_cast<int>(npos), 0.0, yb, static_cast<int>(npos));
    for (int f = 0; f < out_c_; ++f) {
      const double bias = b_[f];
      double* row = yb + static_cast<long>(f) * npos;
      for (long i = 0; i < npos; ++i) row[i] += bias;
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  const int bsz = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
  const int oh = out_h(h), ow = out_w(w);
  const long npos = static_cast<long>(oh) * ow;
  const int ckk = in_c_ * k_ * k_;
  Tensor gx({bsz, in_c_, h, w});
  std::vector<double> cols(static_cast<std::size_t>(ckk) * npos);
  std::vector<double> dcols(static_cast<std::size_t>(ckk) * npos);
  for (int b = 0; b < bsz; ++b) {
    const double* gyb = gy.data() + static_cast<long>(b) * out_c_ * npos;
    im2col(x_.data() + static_cast<long>(b) * in_c_ * h * w, in_c_, h, w, k_,
           stride_, pad_, oh, ow, cols.data());
    // dW += gy . cols^T
    gemm(false, true, out_c_, ckk, static_cast<int>(npos), 1.0, gyb,
         static_cast<int>(npos), cols.data(), static_cast<int>(npos), 1.0,
         gw_.data(), ckk);
    // dcols = W^T . gy
    gemm(true, false, ckk, static_cast<int>(npos), out_c_, 1.0, w_.data(), ckk,
         gyb, static_cast<int>(npos), 0.0, dcols.data(), static_cast<int>(npos));
    col2im_add(dcols.data(), in_c_, h, w, k_, stride_, pad_, oh, ow,
               gx.data() + static_cast<long>(b) * in_c_ * h * w);
    for (int f = 0; f < out_c_; ++f) {
      const double* row = gyb + static_cast<long>(f) * npos;
      double s = 0.0;
      for (long i = 0; i < npos; ++i) s += row[i];
      gb_[f] += s;
    }
  }
  return gx;
}

void Conv2d::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + ".weight", &w_, &gw_, true});
  out.push_back({prefix + ".bias", &b_, &gb_, true});
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_c, int out_c, int k, int stride, int pad)
    : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
      w_({in_c, out_c * k * k}), b_({out_c}),
      gw_({in_c, out_c * k * k}), gb_({out_c}) {}

void ConvTranspose2d::init(Rng& rng) {
  const double std = std::sqrt(2.0 / (in_c_ * k_ * k_));
  for (long i = 0; i < w_.numel(); ++i) w_[i] = rng.normal(0.0, std);
  b_.fill(0.0);
}

Tensor ConvTranspose2d::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != in_c_)
    throw std::invalid_argument("ConvTranspose2d: bad input shape " + x.shape_str());
  x_ = x;
  const int bsz = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = out_h(h), ow = out_w(w);
  const long npos = static_cast<long>(h) * w;
  const int ckk = out_c_ * k_ * k_;
  Tensor y({bsz, out_c_, oh, ow});
  std::vector<double> cols(static_cast<std::size_t>(ckk) * npos);
  for (int b = 0; b < bsz; ++b) {
    const double* xb = x.data() + static_cast<long>(b) * in_c_ * npos;
    // cols = W^T . x
    gemm(true, false, ckk, static_cast<int>(npos), in_c_, 1.0, w_.data(), ckk,
         xb, static_cast<int>(npos), 0.0, cols.data(), static_cast<int>(npos));
    double* yb = y.data() + static_cast<long>(b) * out_c_ * oh * ow;
    col2im_add(cols.data(), out_c_, oh, ow, k_, stride_, pad_, h, w, yb);
    for (int f = 0; f < out_c_; ++f) {
      const double bias = b_[f];
      double* row = yb + static_cast<long>(f) * oh * ow;
      for (long i = 0; i < static_cast<long>(oh) * ow; ++i) row[i] += bias;
    }
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& gy) {
  const int bsz = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
  const int oh = out_h(h), ow = out_w(w);
  const long npos = static_cast<long>(h) * w;
  const int ckk = out_c_ * k_ * k_;
  Tensor gx({bsz, in_c_, h, w});
  std::vector<double> dcols(static_cast<std::size_t>(ckk) * npos);
  for (int b = 0; b < bsz; ++b) {
    const double* gyb = gy.data() + static_cast<long>(b) * out_c_ * oh * ow;
    im2col(gyb, out_c_, oh, ow, k_, stride_, pad_, h, w, dcols.data());
    // dx = W . dcols
    gemm(false, false, in_c_, static_cast<int>(npos), ckk, 1.0, w_.data(), ckk,
         dcols.data(), static_cast<int>(npos), 0.0,
         gx.data() + static_cast<long>(b) * in_c_ * npos, static_cast<int>(npos));
    // dW += x . dcols^T
    gemm(false, true, in_c_, ckk, static_cast<int>(npos), 1.0,
         x_.data() + static_cast<long>(b) * in_c_ * npos, static_cast<int>(npos),
         dcols.data(), static_cast<int>(npos), 1.0, gw_.data(), ckk);
    for (int f = 0; f < out_c_; ++f) {
      const double* row = gyb + static_cast<long>(f) * oh * ow;
      double s = 0.0;
      for (long i = 0; i < static_cast<long>(oh) * ow; ++i) s += row[i];
      gb_[f] += s;
    }
  }
  return gx;
}

void ConvTranspose2d::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + ".weight", &w_, &gw_, true});
  out.push_back({prefix + ".bias", &b_, &gb_, true});
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_dim, int out_dim)
    : in_dim_(in_dim), out_dim_(out_dim),
      w_({out_dim, in_dim}), b_({out_dim}),
      gw_({out_dim, in_dim}), gb_({out_dim}) {}

void Linear::init(Rng& rng) {
  const double std = std::sqrt(2.0 / in_dim_);
  for (long i = 0; i < w_.numel(); ++i) w_[i] = rng.normal(0.0, std);
  b_.fill(0.0);
}

Tensor Linear::forward(const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != in_dim_)
    throw std::invalid_argument("Linear: bad input shape " + x.shape_str());
  x_ = x;
  const int bsz = x.dim(0);
  Tensor y({bsz, out_dim_});
  gemm(false, true, bsz, out_dim_, in_dim_, 1.0, x.data(), in_dim_, w_.data(),
       in_dim_, 0.0, y.data(), out_dim_);
  for (int b = 0; b < bsz; ++b)
    for (int j = 0; j < out_dim_; ++j) y.at2(b, j) += b_[j];
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  const int bsz = x_.dim(0);
  gemm(true, false, out_dim_, in_dim_, bsz, 1.0, gy.data(), out_dim_, x_.data(),
       in_dim_, 1.0, gw_.data(), in_dim_);
  Tensor gx({bsz, in_dim_});
  gemm(false, false, bsz, in_dim_, out_dim_, 1.0, gy.data(), out_dim_,
       w_.data(), in_dim_, 0.0, gx.data(), in_dim_);
  for (int b = 0; b < bsz; ++b)
    for (int j = 0; j < out_dim_; ++j) gb_[j] += gy.at2(b, j);
  return gx;
}

void Linear::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + ".weight", &w_, &gw_, true});
  out.push_back({prefix + ".bias", &b_, &gb_, true});
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, double eps, double momentum)
    : c_(channels), eps_(eps), momentum_(momentum),
      gamma_({channels}), beta_({channels}),
      ggamma_({channels}), gbeta_({channels}),
      running_mean_({channels}), running_var_({channels}) {
  gamma_.fill(1.0);
  running_var_.fill(1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
  if (x.rank() != 4 || x.dim(1) != c_)
    throw std::invalid_argument("BatchNorm2d: bad input shape " + x.shape_str());
  last_train_ = train;
  const int bsz = x.dim(0), h = x.dim(2), w = x.dim(3);
  const long plane = static_cast<long>(h) * w;
  const long n = static_cast<long>(bsz) * plane;
  Tensor y(x.shape());
  xhat_ = Tensor(x.shape());
  invstd_.assign(c_, 0.0);
  for (int c = 0; c < c_; ++c) {
    double mean, var;
    if (train) {
      double s = 0.0;
      for (int b = 0; b < bsz; ++b) {
        const double* p = x.data() + (static_cast<long>(b) * c_ + c) * plane;
        for (long i = 0; i < plane; ++i) s += p[i];
      }
      mean = s / n;
      double sq = 0.0;
      for (int b = 0; b < bsz; ++b) {
        const double* p = x.data() + (static_cast<long>(b) * c_ + c) * plane;
        for (long i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = sq / n;
      const double unbiased = n > 1 ? sq / (n - 1) : var;
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    invstd_[c] = inv;
    const double g = gamma_[c], be = beta_[c];
    for (int b = 0; b < bsz; ++b) {
      const double* p = x.data() + (static_cast<long>(b) * c_ + c) * plane;
      double* xh = xhat_.data() + (static_cast<long>(b) * c_ + c) * plane;
      double* yo = y.data() + (static_cast<long>(b) * c_ + c) * plane;
      for (long i = 0; i < plane; ++i) {
        xh[i] = (p[i] - mean) * inv;
        yo[i] = g * xh[i] + be;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy) {
  const int bsz = gy.dim(0), h = gy.dim(2), w = gy.dim(3);
  const long plane = static_cast<long>(h) * w;
  const long n = static_cast<long>(bsz) * plane;
  Tensor gx(gy.shape());
  for (int c = 0; c < c_; ++c) {
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int b = 0; b < bsz; ++b) {
      const double* g = gy.data() + (static_cast<long>(b) * c_ + c) * plane;
      const double* xh = xhat_.data() + (static_cast<long>(b) * c_ + c) * plane;
      for (long i = 0; i < plane; ++i) {
        sum_gy += g[i];
        sum_gy_xhat += g[i] * xh[i];
      }
    }
    ggamma_[c] += sum_gy_xhat;
    gbeta_[c] += sum_gy;
    const double gm = gamma_[c], inv = invstd_[c];
    if (last_train_) {
      const double k = gm * inv / n;
      for (int b = 0; b < bsz; ++b) {
        const double* g = gy.data() + (static_cast<long>(b) * c_ + c) * plane;
        const double* xh = xhat_.data() + (static_cast<long>(b) * c_ + c) * plane;
        double* o = gx.data() + (static_cast<long>(b) * c_ + c) * plane;
        for (long i = 0; i < plane; ++i)
          o[i] = k * (n * g[i] - sum_gy - xh[i] * sum_gy_xhat);
      }
    } else {
      const double k = gm * inv;
      for (int b = 0; b < bsz; ++b) {
        const double* g = gy.data() + (static_cast<long>(b) * c_ + c) * plane;
        double* o = gx.data() + (static_cast<long>(b) * c_ + c) * plane;
        for (long i = 0; i < plane; ++i) o[i] = k * g[i];
      }
    }
  }
  return gx;
}

void BatchNorm2d::collect(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + ".gamma", &gamma_, &ggamma_, true});
  out.push_back({prefix + ".beta", &beta_, &gbeta_, true});
  out.push_back({prefix + ".running_mean", &running_mean_, nullptr, false});
  out.push_back({prefix + ".running_var", &running_var_, nullptr, false});
}

// ---------------------------------------------------------------------------
// Activations

Tensor ReLU::forward(const Tensor& x) {
  Tensor y(x.shape());
  pos_.assign(static_cast<std::size_t>(x.numel()), 0);
  for (long i = 0; i < x.numel(); ++i) {
    if (x[i] > 0.0) {
      y[i] = x[i];
      pos_[static_cast<std::size_t>(i)] = 1;
    }
  }
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  for (long i = 0; i < gy.numel(); ++i)
    gx[i] = pos_[static_cast<std::size_t>(i)] ? gy[i] : 0.0;
  return gx;
}

Tensor LeakyReLU::forward(const Tensor& x) {
  Tensor y(x.shape());
  pos_.assign(static_cast<std::size_t>(x.numel()), 0);
  for (long i = 0; i < x.numel(); ++i) {
    if (x[i] > 0.0) {
      y[i] = x[i];
      pos_[static_cast<std::size_t>(i)] = 1;
    } else {
      y[i] = slope_ * x[i];
    }
  }
  return y;
}

Tensor LeakyReLU::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  for (long i = 0; i < gy.numel(); ++i)
    gx[i] = pos_[static_cast<std::size_t>(i)] ? gy[i] : slope_ * gy[i];
  return gx;
}

Tensor Sigmoid::forward(const Tensor& x) {
  y_ = Tensor(x.shape());
  for (long i = 0; i < x.numel(); ++i) y_[i] = 1.0 / (1.0 + std::exp(-x[i]));
  return y_;
}

Tensor Sigmoid::backward(const Tensor& gy) {
  Tensor gx(gy.shape());
  for (long i = 0; i < gy.numel(); ++i) gx[i] = gy[i] * y_[i] * (1.0 - y_[i]);
  return gx;
}

// ---------------------------------------------------------------------------
// MaxPool2d (2x2, stride 2)

Tensor MaxPool2d::forward(const Tensor& x) {
  const int bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = h / 2, ow = w / 2;
  in_shape_ = x.shape();
  Tensor y({bsz, c, oh, ow});
  argmax_.assign(static_cast<std::size_t>(y.numel()), 0);
  long o = 0;
  for (int b = 0; b < bsz; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const double* plane = x.data() + (static_cast<long>(b) * c + ch) * h * w;
      for (int py = 0; py < oh; ++py) {
        for (int px = 0; px < ow; ++px, ++o) {
          int best = (2 * py) * w + 2 * px;
          double bv = plane[best];
          const int cand[3] = {(2 * py) * w + 2 * px + 1, (2 * py + 1) * w + 2 * px,
                               (2 * py + 1) * w + 2 * px + 1};
          for (int idx : cand) {
            if (plane[idx] > bv) {
              bv = plane[idx];
              best = idx;
            }
          }
          y[o] = bv;
          argmax_[static_cast<std::size_t>(o)] =
              static_cast<int>((static_cast<long>(b) * c + ch) * h * w + best);
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& gy) {
  Tensor gx(in_shape_);
  for (long i = 0; i < gy.numel(); ++i)
    gx[argmax_[static_cast<std::size_t>(i)]] += gy[i];
  return gx;
}

void zero_grads(std::vector<ParamRef>& params) {
  for (auto& p : params)
    if (p.grad) p.grad->fill(0.0);
}

}  // namespace gaitreid::nn
