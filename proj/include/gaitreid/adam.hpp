#pragma once

#include <cmath>
#include <vector>

#include "gaitreid/nn.hpp"

namespace gaitreid::nn {

// Adam with decoupled-from-schedule L2 weight decay folded into the gradient.
class Adam {
 public:
  explicit Adam(std::vector<ParamRef> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& p : params_) {
      slots_.push_back({Tensor(p.value->shape()), Tensor(p.value->shape())});
    }
  }

  void zero_grad() { zero_grads(params_); }

  void step(double lr, double weight_decay) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (!p.trainable || !p.grad) continue;
      Tensor& m = slots_[i].m;
      Tensor& v = slots_[i].v;
      double* w = p.value->data();
      const double* g = p.grad->data();
      for (long j = 0; j < p.value->numel(); ++j) {
        const double grad = g[j] + weight_decay * w[j];
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * grad;
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * grad * grad;
        w[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
      }
    }
  }

  const std::vector<ParamRef>& params() const { return params_; }

 private:
  struct Slot {
    Tensor m, v;
  };
  std::vector<ParamRef> params_;
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Step schedule: the realized rate at `epoch` (0-based) is
// base * factor^(number of milestones <= epoch).
inline double scheduled_lr(double base, const std::vector<int>& milestones,
                           double factor, int epoch) {
  double lr = base;
  for (int m : milestones)
    if (epoch >= m) lr *= factor;
  return lr;
}

}  // namespace gaitreid::nn
