#include "gaitreid/gsp.hpp"

#include <cmath>
#include <stdexcept>

namespace gaitreid {

GspNet::Trunk::Trunk(int latent, const std::vector<int>& ch, int frame)
    : fc(0, 0), flat_dim(0) {
  if (ch.size() != 4) throw std::invalid_argument("gsp: channel plan must have 4 stages");
  int in_c = 1;
  int size = frame;
  for (int i = 0; i < 4; ++i) {
    conv.emplace_back(in_c, ch[i], 4, 2, 1);
    bn.emplace_back(ch[i]);
    relu.emplace_back();
    in_c = ch[i];
    size /= 2;
  }
  flat_dim = ch[3] * size * size;
  pre_fc_shape = {0, ch[3], size, size};
  fc = nn::Linear(flat_dim, latent);
}

Tensor GspNet::Trunk::forward(const Tensor& x, bool train) {
  Tensor h = x;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    h = conv[i].forward(h);
    h = bn[i].forward(h, train);
    h = relu[i].forward(h);
  }
  pre_fc_shape = h.shape();
  return fc.forward(h.reshaped({h.dim(0), flat_dim}));
}

Tensor GspNet::Trunk::backward(const Tensor& gy) {
  Tensor g = fc.backward(gy).reshaped(pre_fc_shape);
  for (int i = static_cast<int>(conv.size()) - 1; i >= 0; --i) {
    g = relu[i].backward(g);
    g = bn[i].backward(g);
    g = conv[i].backward(g);
  }
  return g;
}

void GspNet::Trunk::collect(std::vector<nn::ParamRef>& out, const std::string& prefix) {
  for (std::size_t i = 0; i < conv.size(); ++i) {
    conv[i].collect(out, prefix + ".conv" + std::to_string(i + 1));
    bn[i].collect(out, prefix + ".bn" + std::to_string(i + 1));
  }
  fc.collect(out, prefix + ".fc");
}

void GspNet::Trunk::init(Rng& rng) {
  for (auto& c : conv) c.init(rng);
  fc.init(rng);
}

GspNet::GspNet(const Options& opt)
    : opt_(opt),
      encoder_(opt.latent_dim, opt.channels, opt.frame),
      pos_trunk_(opt.latent_dim, opt.channels, opt.frame),
      pos_head_(opt.latent_dim, opt.onehot_position ? opt.n_pred : 1),
      agg_(opt.latent_dim + 1, opt.latent_dim),
      dec_fc_(opt.latent_dim, encoder_.flat_dim) {
  if (opt.frame != 64) throw std::invalid_argument("gsp: only 64x64 silhouettes supported");
  if (opt.n_pred < 2) throw std::invalid_argument("gsp: n_pred must be >= 2");
  const auto& ch = opt.channels;
  // mirror of the encoder: three upsampling stages with BN+ReLU, then a
  // final transposed conv to n_pred channels under a sigmoid
  dec_conv_.emplace_back(ch[3], ch[2], 4, 2, 1);
  dec_conv_.emplace_back(ch[2], ch[1], 4, 2, 1);
  dec_conv_.emplace_back(ch[1], ch[0], 4, 2, 1);
  dec_conv_.emplace_back(ch[0], opt.n_pred, 4, 2, 1);
  for (int i = 0; i < 3; ++i) {
    dec_bn_.emplace_back(dec_conv_[i].out_c_);
    dec_relu_.emplace_back();
  }
}

void GspNet::init(Rng& rng) {
  encoder_.init(rng);
  pos_trunk_.init(rng);
  pos_head_.init(rng);
  agg_.init(rng);
  dec_fc_.init(rng);
  for (auto& c : dec_conv_) c.init(rng);
}

GspNet::Out GspNet::forward(const Tensor& sil, bool train) {
  if (sil.rank() != 4 || sil.dim(1) != 1 || sil.dim(2) != opt_.frame || sil.dim(3) != opt_.frame)
    throw std::invalid_argument("gsp: expected (B,1,64,64) input, got " + sil.shape_str());
  for (long i = 0; i < sil.numel(); ++i)
    if (!std::isfinite(sil[i])) throw std::invalid_argument("gsp: non-finite input value");

  Out out;
  const int bsz = sil.dim(0);
  last_batch_ = bsz;
  out.latent = encoder_.forward(sil, train);

  out.pos_scalar = Tensor({bsz});
  if (opt_.use_position) {
    Tensor ph = pos_trunk_.forward(sil, train);
    ph = pos_relu_.forward(ph);
    out.pos_out = pos_head_.forward(ph);
    if (opt_.onehot_position) {
      // scalar estimate = expectation under the softmax, keeps the
      // aggregator input differentiable
      softmax_ = Tensor({bsz, opt_.n_pred});
      for (int b = 0; b < bsz; ++b) {
        double mx = out.pos_out.at2(b, 0);
        for (int j = 1; j < opt_.n_pred; ++j) mx = std::max(mx, out.pos_out.at2(b, j));
        double z = 0.0;
        for (int j = 0; j < opt_.n_pred; ++j) {
          softmax_.at2(b, j) = std::exp(out.pos_out.at2(b, j) - mx);
          z += softmax_.at2(b, j);
        }
        double expect = 0.0;
        for (int j = 0; j < opt_.n_pred; ++j) {
          softmax_.at2(b, j) /= z;
          expect += j * softmax_.at2(b, j);
        }
        out.pos_scalar[b] = expect;
      }
    } else {
      for (int b = 0; b < bsz; ++b) out.pos_scalar[b] = out.pos_out.at2(b, 0);
    }
    Tensor cat({bsz, opt_.latent_dim + 1});
    for (int b = 0; b < bsz; ++b) {
      for (int j = 0; j < opt_.latent_dim; ++j) cat.at2(b, j) = out.latent.at2(b, j);
      cat.at2(b, opt_.latent_dim) = out.pos_scalar[b];
    }
    out.agg = agg_.forward(cat);
  } else {
    out.agg = out.latent;
  }

  Tensor h = dec_fc_.forward(out.agg);
  h = dec_fc_relu_.forward(h);
  h = h.reshaped({bsz, opt_.channels[3], opt_.frame / 16, opt_.frame / 16});
  for (int i = 0; i < 3; ++i) {
    h = dec_conv_[i].forward(h);
    h = dec_bn_[i].forward(h, train);
    h = dec_relu_[i].forward(h);
  }
  h = dec_conv_[3].forward(h);
  out.pred = dec_sigmoid_.forward(h);
  out.pred = out.pred.reshaped({bsz, opt_.n_pred, opt_.frame, opt_.frame});
  return out;
}

Tensor GspNet::backward(const Tensor& d_pred, const Tensor& d_pos) {
  const int bsz = last_batch_;
  Tensor g = d_pred.reshaped({bsz, opt_.n_pred, opt_.frame, opt_.frame});
  g = dec_sigmoid_.backward(g);
  g = dec_conv_[3].backward(g);
  for (int i = 2; i >= 0; --i) {
    g = dec_relu_[i].backward(g);
    g = dec_bn_[i].backward(g);
    g = dec_conv_[i].backward(g);
  }
  Tensor d_agg = dec_fc_.backward(dec_fc_relu_.backward(g.reshaped({bsz, encoder_.flat_dim})));

  Tensor d_sil;
  if (opt_.use_position) {
    Tensor d_cat = agg_.backward(d_agg);
    Tensor d_latent({bsz, opt_.latent_dim});
    Tensor d_pos_scalar({bsz});
    for (int b = 0; b < bsz; ++b) {
      for (int j = 0; j < opt_.latent_dim; ++j) d_latent.at2(b, j) = d_cat.at2(b, j);
      d_pos_scalar[b] = d_cat.at2(b, opt_.latent_dim);
    }
    Tensor d_head;
    if (opt_.onehot_position) {
      d_head = Tensor({bsz, opt_.n_pred});
      for (int b = 0; b < bsz; ++b) {
        // d expectation / d logit_j = p_j * (j - expectation)
        double expect = 0.0;
        for (int j = 0; j < opt_.n_pred; ++j) expect += j * softmax_.at2(b, j);
        for (int j = 0; j < opt_.n_pred; ++j)
          d_head.at2(b, j) = d_pos_scalar[b] * softmax_.at2(b, j) * (j - expect);
      }
    } else {
      d_head = Tensor({bsz, 1});
      for (int b = 0; b < bsz; ++b) d_head.at2(b, 0) = d_pos_scalar[b];
    }
    if (d_pos.numel() > 0) add_into(d_head, d_pos);
    Tensor d_ph = pos_relu_.backward(pos_head_.backward(d_head));
    d_sil = pos_trunk_.backward(d_ph);
    add_into(d_sil, encoder_.backward(d_latent));
  } else {
    d_sil = encoder_.backward(d_agg);
  }
  return d_sil;
}

std::vector<nn::ParamRef> GspNet::params() {
  std::vector<nn::ParamRef> out;
  for (auto& p : arrays())
    if (p.trainable) out.push_back(p);
  return out;
}

std::vector<nn::ParamRef> GspNet::arrays() {
  std::vector<nn::ParamRef> out;
  encoder_.collect(out, "encoder");
  if (opt_.use_position) {
    pos_trunk_.collect(out, "position");
    pos_head_.collect(out, "position.head");
    agg_.collect(out, "aggregator");
  }
  dec_fc_.collect(out, "decoder.fc");
  for (std::size_t i = 0; i < dec_conv_.size(); ++i)
    dec_conv_[i].collect(out, "decoder.deconv" + std::to_string(i + 1));
  for (std::size_t i = 0; i < dec_bn_.size(); ++i)
    dec_bn_[i].collect(out, "decoder.bn" + std::to_string(i + 1));
  return out;
}

ModelState GspNet::state(const std::string& fingerprint) {
  ModelState st;
  st.component = "gsp";
  st.config_fingerprint = fingerprint;
  for (auto& p : arrays()) {
    ModelState::Array a;
    a.shape = p.value->shape();
    a.values.resize(static_cast<std::size_t>(p.value->numel()));
    for (long i = 0; i < p.value->numel(); ++i)
      a.values[static_cast<std::size_t>(i)] = static_cast<float>((*p.value)[i]);
    st.arrays.emplace(p.name, std::move(a));
  }
  return st;
}

void GspNet::load_state(const ModelState& st) {
  for (auto& p : arrays()) {
    auto it = st.arrays.find(p.name);
    if (it == st.arrays.end())
      throw std::runtime_error("gsp: checkpoint is missing array '" + p.name + "'");
    if (it->second.shape != p.value->shape())
      throw std::runtime_error("gsp: checkpoint array '" + p.name +
                               "' shape does not match the current architecture");
    for (long i = 0; i < p.value->numel(); ++i)
      (*p.value)[i] = static_cast<double>(it->second.values[static_cast<std::size_t>(i)]);
  }
}

double position_loss(const Tensor& pos_out, const std::vector<double>& targets,
                     Tensor* d_pos) {
  const int bsz = pos_out.dim(0);
  if (static_cast<int>(targets.size()) != bsz)
    throw std::invalid_argument("position_loss: target count mismatch");
  if (d_pos) *d_pos = Tensor({bsz, 1});
  double loss = 0.0;
  for (int b = 0; b < bsz; ++b) {
    const double diff = pos_out.at2(b, 0) - targets[static_cast<std::size_t>(b)];
    loss += diff * diff;
    if (d_pos) d_pos->at2(b, 0) = 2.0 * diff / bsz;
  }
  return loss / bsz;
}

double position_loss_onehot(const Tensor& logits, const std::vector<int>& targets,
                            Tensor* d_logits) {
  const int bsz = logits.dim(0), n = logits.dim(1);
  if (d_logits) *d_logits = Tensor({bsz, n});
  double loss = 0.0;
  for (int b = 0; b < bsz; ++b) {
    double mx = logits.at2(b, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at2(b, j));
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(logits.at2(b, j) - mx);
    const int t = targets[static_cast<std::size_t>(b)];
    loss += -(logits.at2(b, t) - mx - std::log(z));
    if (d_logits) {
      for (int j = 0; j < n; ++j) {
        const double p = std::exp(logits.at2(b, j) - mx) / z;
        d_logits->at2(b, j) = (p - (j == t ? 1.0 : 0.0)) / bsz;
      }
    }
  }
  return loss / bsz;
}

double pred_loss_full(const Tensor& pred, const Tensor& target, Tensor* d_pred) {
  if (pred.shape() != target.shape())
    throw std::invalid_argument("pred_loss_full: prediction " + pred.shape_str() +
                                " vs target " + target.shape_str());
  if (d_pred) *d_pred = Tensor(pred.shape());
  const long n = pred.numel();
  double loss = 0.0;
  for (long i = 0; i < n; ++i) {
    const double diff = pred[i] - target[i];
    loss += diff * diff;
    if (d_pred) (*d_pred)[i] = 2.0 * diff / n;
  }
  return loss / n;
}

double pred_loss_weak(const Tensor& pred, const Tensor& input_sil, int mid,
                      Tensor* d_pred) {
  const int bsz = pred.dim(0), n = pred.dim(1), h = pred.dim(2), w = pred.dim(3);
  if (mid < 0 || mid >= n) throw std::invalid_argument("pred_loss_weak: bad frame index");
  if (input_sil.numel() != static_cast<long>(bsz) * h * w)
    throw std::invalid_argument("pred_loss_weak: silhouette batch mismatch");
  if (d_pred) *d_pred = Tensor(pred.shape());
  const long plane = static_cast<long>(h) * w;
  double loss = 0.0;
  for (int b = 0; b < bsz; ++b) {
    const double* pf = pred.data() + (static_cast<long>(b) * n + mid) * plane;
    const double* sf = input_sil.data() + static_cast<long>(b) * plane;
    double* df = d_pred ? d_pred->data() + (static_cast<long>(b) * n + mid) * plane : nullptr;
    for (long i = 0; i < plane; ++i) {
      const double diff = pf[i] - sf[i];
      loss += std::abs(diff);
      if (df) df[i] = (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) / (bsz * plane);
    }
  }
  return loss / (static_cast<double>(bsz) * plane);
}

}  // namespace gaitreid
