#pragma once

#include <memory>
#include <vector>

#include "gaitreid/checkpoint.hpp"
#include "gaitreid/nn.hpp"

namespace gaitreid {

// One silhouette in, an N-frame gait sequence out. Encoder and position
// embedder share the trunk *shape* (not parameters); the aggregator folds the
// predicted position into the latent before decoding.
class GspNet {
 public:
  struct Options {
    int n_pred = 8;
    int latent_dim = 100;
    std::vector<int> channels = {8, 16, 32, 64};  // four stride-2 stages
    bool use_position = true;   // false = the no-position-prior ablation
    bool onehot_position = false;
    int frame = 64;
  };

  struct Out {
    Tensor latent;      // (B, latent_dim)
    Tensor pos_out;     // (B, 1) regression head, or (B, n_pred) logits
    Tensor pos_scalar;  // (B) scalar position estimate fed to the aggregator
    Tensor agg;         // (B, latent_dim)
    Tensor pred;        // (B, n_pred, 64, 64), sigmoid range
  };

  explicit GspNet(const Options& opt);

  void init(Rng& rng);
  Out forward(const Tensor& sil, bool train);  // sil: (B, 1, 64, 64)
  // d_pred: gradient wrt the predicted sequence; d_pos: gradient wrt pos_out
  // (empty tensor = no position-loss contribution). Returns gradient wrt the
  // input silhouettes.
  Tensor backward(const Tensor& d_pred, const Tensor& d_pos);

  std::vector<nn::ParamRef> params();
  std::vector<nn::ParamRef> arrays();  // params + batch-norm buffers
  ModelState state(const std::string& fingerprint);
  void load_state(const ModelState& st);

  int aggregator_input_dim() const { return opt_.use_position ? opt_.latent_dim + 1 : 0; }
  const Options& options() const { return opt_; }

 private:
  struct Trunk {  // conv4x4 s2 + BN + ReLU, four stages, then flatten + fc
    Trunk(int latent, const std::vector<int>& ch, int frame);
    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<nn::ParamRef>& out, const std::string& prefix);
    void init(Rng& rng);

    std::vector<nn::Conv2d> conv;
    std::vector<nn::BatchNorm2d> bn;
    std::vector<nn::ReLU> relu;
    nn::Linear fc;
    int flat_dim;
    std::vector<int> pre_fc_shape;
  };

  Options opt_;
  Trunk encoder_;
  Trunk pos_trunk_;
  nn::ReLU pos_relu_;
  nn::Linear pos_head_;  // latent -> 1 (or n_pred logits)
  nn::Linear agg_;       // latent+1 -> latent
  nn::Linear dec_fc_;
  nn::ReLU dec_fc_relu_;
  std::vector<nn::ConvTranspose2d> dec_conv_;
  std::vector<nn::BatchNorm2d> dec_bn_;
  std::vector<nn::ReLU> dec_relu_;
  nn::Sigmoid dec_sigmoid_;

  // forward caches for backward
  Tensor softmax_;  // onehot mode
  int last_batch_ = 0;
};

// Position-loss targets per input-position policy.
double position_loss(const Tensor& pos_out, const std::vector<double>& targets,
                     Tensor* d_pos);  // squared error, mean over batch
double position_loss_onehot(const Tensor& logits, const std::vector<int>& targets,
                            Tensor* d_logits);  // cross-entropy

// Full prediction loss: MSE against the ground-truth sequence, mean over all
// elements.
double pred_loss_full(const Tensor& pred, const Tensor& target, Tensor* d_pred);
// Weak prediction loss: L1 between predicted frame `mid` and the input
// silhouette, mean over elements of that frame.
double pred_loss_weak(const Tensor& pred, const Tensor& input_sil, int mid,
                      Tensor* d_pred);

}  // namespace gaitreid
