#include "gaitreid/reid.hpp"

#include <cmath>
#include <stdexcept>

namespace gaitreid {

ReidNet::ReidNet(const Options& opt)
    : opt_(opt),
      feat_fc_(opt.channels.back(), opt.feature_dim),
      classifier_(opt.feature_dim, opt.num_classes) {
  if (opt.channels.size() != 4)
    throw std::invalid_argument("reid: channel plan must have 4 stages");
  if (opt.in_channels != 3 && opt.in_channels != 4)
    throw std::invalid_argument("reid: in_channels must be 3 or 4");
  if (opt.image_h % 16 != 0 || opt.image_w % 16 != 0)
    throw std::invalid_argument("reid: image dims must be multiples of 16");
  if (opt.num_classes < 1) throw std::invalid_argument("reid: num_classes must be >= 1");
  int in_c = opt.in_channels;
  for (int i = 0; i < 4; ++i) {
    conv_.emplace_back(in_c, opt.channels[i], 3, 1, 1);
    bn_.emplace_back(opt.channels[i]);
    relu_.emplace_back();
    pool_.emplace_back();
    in_c = opt.channels[i];
  }
}

void ReidNet::init(Rng& rng) {
  for (auto& c : conv_) c.init(rng);
  feat_fc_.init(rng);
  classifier_.init(rng);
}

ReidNet::Out ReidNet::forward(const Tensor& img, bool train) {
  if (img.rank() != 4 || img.dim(1) != opt_.in_channels || img.dim(2) != opt_.image_h ||
      img.dim(3) != opt_.image_w)
    throw std::invalid_argument("reid: expected (B," + std::to_string(opt_.in_channels) + "," +
                                std::to_string(opt_.image_h) + "," +
                                std::to_string(opt_.image_w) + ") input, got " + img.shape_str());
  batch_ = img.dim(0);
  Tensor h = img;
  for (int i = 0; i < 4; ++i) {
    h = conv_[i].forward(h);
    h = bn_[i].forward(h, train);
    h = relu_[i].forward(h);
    h = pool_[i].forward(h);
  }
  gap_c_ = h.dim(1);
  gap_h_ = h.dim(2);
  gap_w_ = h.dim(3);
  const long plane = static_cast<long>(gap_h_) * gap_w_;
  Tensor pooled({batch_, gap_c_});
  for (int b = 0; b < batch_; ++b)
    for (int c = 0; c < gap_c_; ++c) {
      const double* p = h.data() + (static_cast<long>(b) * gap_c_ + c) * plane;
      double s = 0.0;
      for (long i = 0; i < plane; ++i) s += p[i];
      pooled.at2(b, c) = s / plane;
    }
  Out out;
  out.r = feat_fc_.forward(pooled);
  out.logits = classifier_.forward(out.r);
  return out;
}

Tensor ReidNet::backward(const Tensor& d_r, const Tensor& d_logits) {
  Tensor dr = d_r;
  if (d_logits.numel() > 0) add_into(dr, classifier_.backward(d_logits));
  Tensor d_pooled = feat_fc_.backward(dr);
  const long plane = static_cast<long>(gap_h_) * gap_w_;
  Tensor dh({batch_, gap_c_, gap_h_, gap_w_});
  for (int b = 0; b < batch_; ++b)
    for (int c = 0; c < gap_c_; ++c) {
      const double g = d_pooled.at2(b, c) / plane;
      double* p = dh.data() + (static_cast<long>(b) * gap_c_ + c) * plane;
      for (long i = 0; i < plane; ++i) p[i] = g;
    }
  Tensor g = dh;
  for (int i = 3; i >= 0; --i) {
    g = pool_[i].backward(g);
    g = relu_[i].backward(g);
    g = bn_[i].backward(g);
    g = conv_[i].backward(g);
  }
  return g;
}

std::vector<nn::ParamRef> ReidNet::params() {
  std::vector<nn::ParamRef> out;
  for (auto& p : arrays())
    if (p.trainable) out.push_back(p);
  return out;
}

std::vector<nn::ParamRef> ReidNet::arrays() {
  std::vector<nn::ParamRef> out;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    conv_[i].collect(out, "conv" + std::to_string(i + 1));
    bn_[i].collect(out, "bn" + std::to_string(i + 1));
  }
  feat_fc_.collect(out, "feature");
  classifier_.collect(out, "classifier");
  return out;
}

ModelState ReidNet::state(const std::string& fingerprint) {
  ModelState st;
  st.component = "reid";
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

void ReidNet::load_state(const ModelState& st) {
  for (auto& p : arrays()) {
    auto it = st.arrays.find(p.name);
    if (it == st.arrays.end())
      throw std::runtime_error("reid: checkpoint is missing array '" + p.name + "'");
    if (it->second.shape != p.value->shape())
      throw std::runtime_error("reid: checkpoint array '" + p.name +
                               "' shape does not match the current architecture");
    for (long i = 0; i < p.value->numel(); ++i)
      (*p.value)[i] = static_cast<double>(it->second.values[static_cast<std::size_t>(i)]);
  }
}

double classification_loss(const Tensor& logits, const std::vector<int>& labels,
                           Tensor* d_logits) {
  const int bsz = logits.dim(0), n = logits.dim(1);
  if (static_cast<int>(labels.size()) != bsz)
    throw std::invalid_argument("classification_loss: label count mismatch");
  for (int label : labels)
    if (label < 0 || label >= n)
      throw std::invalid_argument("classification_loss: label " + std::to_string(label) +
                                  " is absent from the classifier index");
  if (d_logits) *d_logits = Tensor({bsz, n});
  double loss = 0.0;
  for (int b = 0; b < bsz; ++b) {
    double mx = logits.at2(b, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at2(b, j));
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(logits.at2(b, j) - mx);
    const int t = labels[static_cast<std::size_t>(b)];
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

double batch_hard_triplet_loss(const Tensor& r, const std::vector<int>& labels,
                               double margin, Tensor* d_r) {
  const int bsz = r.dim(0), d = r.dim(1);
  if (static_cast<int>(labels.size()) != bsz)
    throw std::invalid_argument("batch_hard_triplet_loss: label count mismatch");
  if (margin < 0.0) throw std::invalid_argument("batch_hard_triplet_loss: negative margin");
  std::vector<double> dist(static_cast<std::size_t>(bsz) * bsz);
  for (int a = 0; a < bsz; ++a)
    for (int b = 0; b < bsz; ++b) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = r.at2(a, j) - r.at2(b, j);
        acc += diff * diff;
      }
      dist[static_cast<std::size_t>(a) * bsz + b] = std::sqrt(acc);
    }
  if (d_r) *d_r = Tensor(r.shape());

  auto add_pair_grad = [&](int a, int b, double coef) {
    const double dab = dist[static_cast<std::size_t>(a) * bsz + b];
    if (dab < 1e-12) return;
    const double k = coef / dab;
    for (int j = 0; j < d; ++j) {
      const double diff = r.at2(a, j) - r.at2(b, j);
      d_r->at2(a, j) += k * diff;
      d_r->at2(b, j) -= k * diff;
    }
  };

  double loss = 0.0;
  for (int a = 0; a < bsz; ++a) {
    int hp = -1, hn = -1;
    for (int b = 0; b < bsz; ++b) {
      if (b == a) continue;
      if (labels[b] == labels[a]) {
        if (hp < 0 || dist[static_cast<std::size_t>(a) * bsz + b] >
                          dist[static_cast<std::size_t>(a) * bsz + hp])
          hp = b;
      } else {
        if (hn < 0 || dist[static_cast<std::size_t>(a) * bsz + b] <
                          dist[static_cast<std::size_t>(a) * bsz + hn])
          hn = b;
      }
    }
    if (hp < 0 || hn < 0)
      throw std::invalid_argument(
          "batch_hard_triplet_loss: batch lacks a positive or negative for anchor " +
          std::to_string(a));
    const double t = margin + dist[static_cast<std::size_t>(a) * bsz + hp] -
                     dist[static_cast<std::size_t>(a) * bsz + hn];
    if (t > 0.0) {
      loss += t;
      if (d_r) {
        add_pair_grad(a, hp, 1.0 / bsz);
        add_pair_grad(a, hn, -1.0 / bsz);
      }
    }
  }
  return loss / bsz;
}

}  // namespace gaitreid
