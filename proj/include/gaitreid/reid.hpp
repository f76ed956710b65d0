#pragma once

#include <vector>

#include "gaitreid/checkpoint.hpp"
#include "gaitreid/nn.hpp"

namespace gaitreid {

// Small image backbone: four conv+BN+ReLU+pool stages, global average pool,
// an affine map to the feature r, and an identity classifier head on top.
class ReidNet {
 public:
  struct Options {
    std::vector<int> channels = {32, 64, 128, 256};
    int feature_dim = 256;
    int in_channels = 3;  // 4 adds the silhouette as an extra input plane
    int image_h = 128;
    int image_w = 64;
    int num_classes = 1;  // training-identity count
  };

  struct Out {
    Tensor r;       // (B, feature_dim)
    Tensor logits;  // (B, num_classes)
  };

  explicit ReidNet(const Options& opt);
  void init(Rng& rng);

  Out forward(const Tensor& img, bool train);  // (B, in_channels, H, W)
  Tensor backward(const Tensor& d_r, const Tensor& d_logits);

  std::vector<nn::ParamRef> params();
  std::vector<nn::ParamRef> arrays();
  ModelState state(const std::string& fingerprint);
  void load_state(const ModelState& st);
  const Options& options() const { return opt_; }

 private:
  Options opt_;
  std::vector<nn::Conv2d> conv_;
  std::vector<nn::BatchNorm2d> bn_;
  std::vector<nn::ReLU> relu_;
  std::vector<nn::MaxPool2d> pool_;
  nn::Linear feat_fc_;
  nn::Linear classifier_;
  int gap_h_ = 0, gap_w_ = 0, gap_c_ = 0, batch_ = 0;
};

// Softmax cross-entropy over identity classes, mean over the batch.
double classification_loss(const Tensor& logits, const std::vector<int>& labels,
                           Tensor* d_logits);

// Batch-hard triplet: per anchor, hinge over the hardest positive and
// hardest negative Euclidean distances; mean over anchors.
double batch_hard_triplet_loss(const Tensor& r, const std::vector<int>& labels,
                               double margin, Tensor* d_r);

}  // namespace gaitreid
