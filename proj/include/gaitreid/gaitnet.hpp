#pragma once

#include <vector>

#include "gaitreid/checkpoint.hpp"
#include "gaitreid/nn.hpp"

namespace gaitreid {

// Permutation-invariant elementwise max over per-frame feature maps.
Tensor set_pool(const std::vector<Tensor>& frame_maps);

// Number of horizontal strips across all pyramid scales: sum of 2^s for
// s = 0..scales-1.
constexpr int hpm_strip_count(int scales) {
  int n = 0;
  for (int s = 0; s < scales; ++s) n += 1 << s;
  return n;
}

// Set-based gait feature extractor: per-frame CNN, max set pooling,
// horizontal pyramid mapping with one affine map per strip.
class GaitNet {
 public:
  struct Options {
    std::vector<int> channels = {32, 64, 128};  // (C1,C2), (C3,C4), (C5,C6)
    int scales = 5;                             // S
    int strip_dim = 64;                         // d
    int frame = 64;
  };

  struct Out {
    Tensor strips;  // (B, strips, d)
    Tensor g;       // (B, strips*d), flattened view of strips
  };

  explicit GaitNet(const Options& opt);
  void init(Rng& rng);

  Out forward(const Tensor& seqs);          // (B, N, 64, 64), N >= 1
  Tensor backward(const Tensor& d_strips);  // -> (B, N, 64, 64)

  std::vector<nn::ParamRef> params();
  std::vector<nn::ParamRef> arrays();
  ModelState state(const std::string& fingerprint);
  void load_state(const ModelState& st);

  int strip_count() const { return hpm_strip_count(opt_.scales); }
  int feature_dim() const { return strip_count() * opt_.strip_dim; }
  const Options& options() const { return opt_; }

 private:
  Options opt_;
  std::vector<nn::Conv2d> conv_;
  std::vector<nn::LeakyReLU> act_;
  nn::MaxPool2d pool1_, pool2_;
  std::vector<nn::Linear> strip_fc_;  // one per strip

  // caches
  int batch_ = 0, frames_ = 0, map_c_ = 0, map_h_ = 0, map_w_ = 0;
  std::vector<int> set_argmax_;        // per (b, c, y, x): winning frame index
  std::vector<int> strip_max_idx_;     // per (b, strip, c): flat offset in the set map
  std::vector<Tensor> strip_inputs_;   // pooled strip vectors, cached per strip
};

// Hinge triplet loss computed independently per strip over all valid
// (anchor, positive, negative) triples, then averaged over strips.
double separate_triplet_loss(const Tensor& strips, const std::vector<int>& labels,
                             double margin, Tensor* d_strips);

}  // namespace gaitreid
