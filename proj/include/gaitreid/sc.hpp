#pragma once

#include <utility>
#include <vector>

#include "gaitreid/checkpoint.hpp"
#include "gaitreid/nn.hpp"

namespace gaitreid {

// Shared-space coupling of the two streams: affine embeddings into a common
// dimension, a distribution-matching loss, and affine reconstructions back.
class ScNet {
 public:
  struct Options {
    int r_dim = 256;
    int g_dim = 1984;
    int common_dim = 256;  // c
  };

  struct Embedded {
    Tensor r_hat, g_hat;  // both (B, c)
  };
  struct Recon {
    Tensor r_tilde, g_tilde;  // (B, r_dim), (B, g_dim)
  };

  explicit ScNet(const Options& opt);
  void init(Rng& rng);

  Embedded embed(const Tensor& r, const Tensor& g);
  Recon reconstruct(const Tensor& r_hat, const Tensor& g_hat);

  Tensor embed_r(const Tensor& r) { return emb_r_.forward(r); }
  Tensor embed_g(const Tensor& g) { return emb_g_.forward(g); }
  Tensor recon_r(const Tensor& r_hat) { return rec_r_.forward(r_hat); }
  Tensor recon_g(const Tensor& g_hat) { return rec_g_.forward(g_hat); }

  // Gradients wrt the reconstruction outputs -> gradients wrt (r_hat, g_hat).
  std::pair<Tensor, Tensor> backward_recon(const Tensor& d_r_tilde, const Tensor& d_g_tilde);
  // Accumulated gradients wrt (r_hat, g_hat) -> gradients wrt (r, g).
  std::pair<Tensor, Tensor> backward_embed(const Tensor& d_r_hat, const Tensor& d_g_hat);

  std::vector<nn::ParamRef> params();
  ModelState state(const std::string& fingerprint);
  void load_state(const ModelState& st);
  const Options& options() const { return opt_; }

 private:
  Options opt_;
  nn::Linear emb_r_, emb_g_, rec_r_, rec_g_;
};

// Distribution-alignment loss between the embedded batches: squared L2
// between per-dimension means plus squared L2 between per-dimension
// population variances (or standard deviations when use_std is set).
double mmd_loss(const Tensor& g_hat, const Tensor& r_hat, Tensor* d_g_hat,
                Tensor* d_r_hat, bool use_std = false);

// Elementwise pairing ablation: mean over the batch of ||g_hat_i - r_hat_i||^2.
double mmd_mse_loss(const Tensor& g_hat, const Tensor& r_hat, Tensor* d_g_hat,
                    Tensor* d_r_hat);

// ||g_tilde - g||^2 + ||r_tilde - r||^2, mean over the batch. Gradients flow
// into the originals as well (no stop-gradient).
double recon_loss(const Tensor& r_tilde, const Tensor& r, const Tensor& g_tilde,
                  const Tensor& g, Tensor* d_r_tilde, Tensor* d_g_tilde, Tensor* d_r,
                  Tensor* d_g);

}  // namespace gaitreid
