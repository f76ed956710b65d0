#include "gaitreid/gaitnet.hpp"

#include <cmath>
#include <stdexcept>

namespace gaitreid {

Tensor set_pool(const std::vector<Tensor>& frame_maps) {
  if (frame_maps.empty()) throw std::invalid_argument("set_pool: empty frame list");
  Tensor out = frame_maps[0];
  for (std::size_t f = 1; f < frame_maps.size(); ++f) {
    if (frame_maps[f].shape() != out.shape())
      throw std::invalid_argument("set_pool: frame map shapes differ");
    for (long i = 0; i < out.numel(); ++i)
      if (frame_maps[f][i] > out[i]) out[i] = frame_maps[f][i];
  }
  return out;
}

namespace {

// Adaptive horizontal bins: bin i of n covers rows [floor(i*h/n), ceil((i+1)*h/n)).
void bin_rows(int h, int n, int i, int* y0, int* y1) {
  *y0 = (i * h) / n;
  *y1 = ((i + 1) * h + n - 1) / n;
  if (*y1 > h) *y1 = h;
  if (*y1 <= *y0) *y1 = *y0 + 1;
}

}  // namespace

GaitNet::GaitNet(const Options& opt) : opt_(opt) {
  if (opt.channels.size() != 3)
    throw std::invalid_argument("gaitnet: channel plan must have 3 stages");
  if (opt.scales < 1) throw std::invalid_argument("gaitnet: scales must be >= 1");
  const auto& ch = opt.channels;
  conv_.emplace_back(1, ch[0], 5, 1, 2);
  conv_.emplace_back(ch[0], ch[0], 3, 1, 1);
  conv_.emplace_back(ch[0], ch[1], 3, 1, 1);
  conv_.emplace_back(ch[1], ch[1], 3, 1, 1);
  conv_.emplace_back(ch[1], ch[2], 3, 1, 1);
  conv_.emplace_back(ch[2], ch[2], 3, 1, 1);
  act_.resize(6);
  const int strips = strip_count();
  strip_fc_.reserve(static_cast<std::size_t>(strips));
  for (int i = 0; i < strips; ++i) strip_fc_.emplace_back(ch[2], opt.strip_dim);
}

void GaitNet::init(Rng& rng) {
  for (auto& c : conv_) c.init(rng);
  for (auto& f : strip_fc_) f.init(rng);
}

GaitNet::Out GaitNet::forward(const Tensor& seqs) {
  if (seqs.rank() != 4 || seqs.dim(2) != opt_.frame || seqs.dim(3) != opt_.frame)
    throw std::invalid_argument("gaitnet: expected (B,N,64,64) input, got " + seqs.shape_str());
  batch_ = seqs.dim(0);
  frames_ = seqs.dim(1);
  if (frames_ < 1) throw std::invalid_argument("gaitnet: empty sequence");

  // per-frame CNN over the flattened (B*N, 1, H, W) stack
  Tensor h = seqs.reshaped({batch_ * frames_, 1, opt_.frame, opt_.frame});
  h = act_[0].forward(conv_[0].forward(h));
  h = act_[1].forward(conv_[1].forward(h));
  h = pool1_.forward(h);
  h = act_[2].forward(conv_[2].forward(h));
  h = act_[3].forward(conv_[3].forward(h));
  h = pool2_.forward(h);
  h = act_[4].forward(conv_[4].forward(h));
  h = act_[5].forward(conv_[5].forward(h));

  map_c_ = h.dim(1);
  map_h_ = h.dim(2);
  map_w_ = h.dim(3);
  const long plane = static_cast<long>(map_c_) * map_h_ * map_w_;

  // set pooling: elementwise max over the frame axis
  Tensor set_map({batch_, map_c_, map_h_, map_w_});
  set_argmax_.assign(static_cast<std::size_t>(batch_) * plane, 0);
  for (int b = 0; b < batch_; ++b) {
    double* out = set_map.data() + b * plane;
    int* am = set_argmax_.data() + b * plane;
    const double* first = h.data() + (static_cast<long>(b) * frames_) * plane;
    for (long i = 0; i < plane; ++i) out[i] = first[i];
    for (int f = 1; f < frames_; ++f) {
      const double* src = h.data() + (static_cast<long>(b) * frames_ + f) * plane;
      for (long i = 0; i < plane; ++i) {
        if (src[i] > out[i]) {
          out[i] = src[i];
          am[i] = f;
        }
      }
    }
  }

  // horizontal pyramid mapping
  const int strips = strip_count();
  Out out;
  out.strips = Tensor({batch_, strips, opt_.strip_dim});
  strip_max_idx_.assign(static_cast<std::size_t>(batch_) * strips * map_c_, 0);
  strip_inputs_.clear();
  strip_inputs_.reserve(static_cast<std::size_t>(strips));

  int strip = 0;
  for (int s = 0; s < opt_.scales; ++s) {
    const int nbins = 1 << s;
    for (int bin = 0; bin < nbins; ++bin, ++strip) {
      int y0, y1;
      bin_rows(map_h_, nbins, bin, &y0, &y1);
      const long count = static_cast<long>(y1 - y0) * map_w_;
      Tensor vec({batch_, map_c_});
      for (int b = 0; b < batch_; ++b) {
        for (int c = 0; c < map_c_; ++c) {
          const double* plane_p = set_map.data() + (static_cast<long>(b) * map_c_ + c) * map_h_ * map_w_;
          double mx = plane_p[static_cast<long>(y0) * map_w_];
          int mi = y0 * map_w_;
          double mean = 0.0;
          for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < map_w_; ++x) {
              const double v = plane_p[static_cast<long>(y) * map_w_ + x];
              mean += v;
              if (v > mx) {
                mx = v;
                mi = y * map_w_ + x;
              }
            }
          }
          vec.at2(b, c) = mx + mean / count;
          strip_max_idx_[(static_cast<std::size_t>(b) * strips + strip) * map_c_ + c] = mi;
        }
      }
      Tensor f = strip_fc_[static_cast<std::size_t>(strip)].forward(vec);
      strip_inputs_.push_back(std::move(vec));
      for (int b = 0; b < batch_; ++b)
        for (int j = 0; j < opt_.strip_dim; ++j)
          out.strips[(static_cast<long>(b) * strips + strip) * opt_.strip_dim + j] = f.at2(b, j);
    }
  }
  out.g = out.strips.reshaped({batch_, strips * opt_.strip_dim});
  return out;
}

Tensor GaitNet::backward(const Tensor& d_strips) {
  const int strips = strip_count();
  const long plane = static_cast<long>(map_c_) * map_h_ * map_w_;
  Tensor d_set({batch_, map_c_, map_h_, map_w_});

  int strip = 0;
  for (int s = 0; s < opt_.scales; ++s) {
    const int nbins = 1 << s;
    for (int bin = 0; bin < nbins; ++bin, ++strip) {
      int y0, y1;
      bin_rows(map_h_, nbins, bin, &y0, &y1);
      const long count = static_cast<long>(y1 - y0) * map_w_;
      Tensor df({batch_, opt_.strip_dim});
      for (int b = 0; b < batch_; ++b)
        for (int j = 0; j < opt_.strip_dim; ++j)
          df.at2(b, j) = d_strips[(static_cast<long>(b) * strips + strip) * opt_.strip_dim + j];
      Tensor dvec = strip_fc_[static_cast<std::size_t>(strip)].backward(df);
      for (int b = 0; b < batch_; ++b) {
        for (int c = 0; c < map_c_; ++c) {
          const double dv = dvec.at2(b, c);
          double* plane_p = d_set.data() + (static_cast<long>(b) * map_c_ + c) * map_h_ * map_w_;
          // max path
          plane_p[strip_max_idx_[(static_cast<std::size_t>(b) * strips + strip) * map_c_ + c]] += dv;
          // mean path
          const double dmean = dv / count;
          for (int y = y0; y < y1; ++y)
            for (int x = 0; x < map_w_; ++x) plane_p[static_cast<long>(y) * map_w_ + x] += dmean;
        }
      }
    }
  }

  // route through the set-pool argmax back to the winning frames
  Tensor d_frames({batch_ * frames_, map_c_, map_h_, map_w_});
  for (int b = 0; b < batch_; ++b) {
    const double* src = d_set.data() + b * plane;
    const int* am = set_argmax_.data() + b * plane;
    for (long i = 0; i < plane; ++i)
      d_frames[(static_cast<long>(b) * frames_ + am[i]) * plane + i] += src[i];
  }

  Tensor g = act_[5].backward(d_frames);
  g = conv_[5].backward(g);
  g = act_[4].backward(g);
  g = conv_[4].backward(g);
  g = pool2_.backward(g);
  g = act_[3].backward(g);
  g = conv_[3].backward(g);
  g = act_[2].backward(g);
  g = conv_[2].backward(g);
  g = pool1_.backward(g);
  g = act_[1].backward(g);
  g = conv_[1].backward(g);
  g = act_[0].backward(g);
  g = conv_[0].backward(g);
  return g.reshaped({batch_, frames_, opt_.frame, opt_.frame});
}

std::vector<nn::ParamRef> GaitNet::params() { return arrays(); }

std::vector<nn::ParamRef> GaitNet::arrays() {
  std::vector<nn::ParamRef> out;
  for (std::size_t i = 0; i < conv_.size(); ++i)
    conv_[i].collect(out, "conv" + std::to_string(i + 1));
  for (std::size_t i = 0; i < strip_fc_.size(); ++i)
    strip_fc_[i].collect(out, "hpm.strip" + std::to_string(i));
  return out;
}

ModelState GaitNet::state(const std::string& fingerprint) {
  ModelState st;
  st.component = "gaitnet";
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

void GaitNet::load_state(const ModelState& st) {
  for (auto& p : arrays()) {
    auto it = st.arrays.find(p.name);
    if (it == st.arrays.end())
      throw std::runtime_error("gaitnet: checkpoint is missing array '" + p.name + "'");
    if (it->second.shape != p.value->shape())
      throw std::runtime_error("gaitnet: checkpoint array '" + p.name +
                               "' shape does not match the current architecture");
    for (long i = 0; i < p.value->numel(); ++i)
      (*p.value)[i] = static_cast<double>(it->second.values[static_cast<std::size_t>(i)]);
  }
}

double separate_triplet_loss(const Tensor& strips, const std::vector<int>& labels,
                             double margin, Tensor* d_strips) {
  const int bsz = strips.dim(0), ns = strips.dim(1), d = strips.dim(2);
  if (static_cast<int>(labels.size()) != bsz)
    throw std::invalid_argument("separate_triplet_loss: label count mismatch");
  if (margin < 0.0) throw std::invalid_argument("separate_triplet_loss: negative margin");
  for (int a = 0; a < bsz; ++a) {
    bool has_pos = false, has_neg = false;
    for (int b = 0; b < bsz; ++b) {
      if (b == a) continue;
      (labels[b] == labels[a] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
      throw std::invalid_argument(
          "separate_triplet_loss: batch lacks a positive or negative for anchor " +
          std::to_string(a));
  }
  if (d_strips) *d_strips = Tensor(strips.shape());

  auto feat = [&](int b, int s) { return strips.data() + (static_cast<long>(b) * ns + s) * d; };
  auto dfeat = [&](int b, int s) { return d_strips->data() + (static_cast<long>(b) * ns + s) * d; };

  double total = 0.0;
  std::vector<double> dist(static_cast<std::size_t>(bsz) * bsz);
  std::vector<double> pair_coef(static_cast<std::size_t>(bsz) * bsz);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < bsz; ++a) {
      for (int b = 0; b < bsz; ++b) {
        double acc = 0.0;
        const double *fa = feat(a, s), *fb = feat(b, s);
        for (int j = 0; j < d; ++j) {
          const double diff = fa[j] - fb[j];
          acc += diff * diff;
        }
        dist[static_cast<std::size_t>(a) * bsz + b] = std::sqrt(acc);
      }
    }
    long triples = 0;
    for (int a = 0; a < bsz; ++a)
      for (int p = 0; p < bsz; ++p) {
        if (p == a || labels[p] != labels[a]) continue;
        for (int n = 0; n < bsz; ++n)
          if (labels[n] != labels[a]) ++triples;
      }

    std::fill(pair_coef.begin(), pair_coef.end(), 0.0);
    double strip_loss = 0.0;
    for (int a = 0; a < bsz; ++a) {
      for (int p = 0; p < bsz; ++p) {
        if (p == a || labels[p] != labels[a]) continue;
        const double dap = dist[static_cast<std::size_t>(a) * bsz + p];
        for (int n = 0; n < bsz; ++n) {
          if (labels[n] == labels[a]) continue;
          const double t = margin + dap - dist[static_cast<std::size_t>(a) * bsz + n];
          if (t > 0.0) {
            strip_loss += t;
            pair_coef[static_cast<std::size_t>(a) * bsz + p] += 1.0;
            pair_coef[static_cast<std::size_t>(a) * bsz + n] -= 1.0;
          }
        }
      }
    }
    total += strip_loss / triples;
    if (d_strips) {
      const double norm = 1.0 / (static_cast<double>(triples) * ns);
      for (int a = 0; a < bsz; ++a) {
        for (int b = 0; b < bsz; ++b) {
          const double coef = pair_coef[static_cast<std::size_t>(a) * bsz + b];
          if (coef == 0.0) continue;
          const double dab = dist[static_cast<std::size_t>(a) * bsz + b];
          if (dab < 1e-12) continue;  // subgradient at coincident points
          const double k = coef * norm / dab;
          double *ga = dfeat(a, s), *gb = dfeat(b, s);
          const double *fa = feat(a, s), *fb = feat(b, s);
          for (int j = 0; j < d; ++j) {
            const double diff = fa[j] - fb[j];
            ga[j] += k * diff;
            gb[j] -= k * diff;
          }
        }
      }
    }
  }
  return total / ns;
}

}  // namespace gaitreid
