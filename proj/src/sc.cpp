#include "gaitreid/sc.hpp"

#include <cmath>
#include <stdexcept>

namespace gaitreid {

ScNet::ScNet(const Options& opt)
    : opt_(opt),
      emb_r_(opt.r_dim, opt.common_dim),
      emb_g_(opt.g_dim, opt.common_dim),
      rec_r_(opt.common_dim, opt.r_dim),
      rec_g_(opt.common_dim, opt.g_dim) {
  if (opt.r_dim < 1 || opt.g_dim < 1 || opt.common_dim < 1)
    throw std::invalid_argument("sc: dimensions must be >= 1");
}

void ScNet::init(Rng& rng) {
  emb_r_.init(rng);
  emb_g_.init(rng);
  rec_r_.init(rng);
  rec_g_.init(rng);
}

ScNet::Embedded ScNet::embed(const Tensor& r, const Tensor& g) {
  Embedded out;
  out.r_hat = embed_r(r);
  out.g_hat = embed_g(g);
  return out;
}

ScNet::Recon ScNet::reconstruct(const Tensor& r_hat, const Tensor& g_hat) {
  Recon out;
  out.r_tilde = recon_r(r_hat);
  out.g_tilde = recon_g(g_hat);
  return out;
}

std::pair<Tensor, Tensor> ScNet::backward_recon(const Tensor& d_r_tilde,
                                                const Tensor& d_g_tilde) {
  return {rec_r_.backward(d_r_tilde), rec_g_.backward(d_g_tilde)};
}

std::pair<Tensor, Tensor> ScNet::backward_embed(const Tensor& d_r_hat,
                                                const Tensor& d_g_hat) {
  return {emb_r_.backward(d_r_hat), emb_g_.backward(d_g_hat)};
}

std::vector<nn::ParamRef> ScNet::params() {
  std::vector<nn::ParamRef> out;
  emb_r_.collect(out, "emb_r");
  emb_g_.collect(out, "emb_g");
  rec_r_.collect(out, "recon_r");
  rec_g_.collect(out, "recon_g");
  return out;
}

ModelState ScNet::state(const std::string& fingerprint) {
  ModelState st;
  st.component = "sc";
  st.config_fingerprint = fingerprint;
  for (auto& p : params()) {
    ModelState::Array a;
    a.shape = p.value->shape();
    a.values.resize(static_cast<std::size_t>(p.value->numel()));
    for (long i = 0; i < p.value->numel(); ++i)
      a.values[static_cast<std::size_t>(i)] = static_cast<float>((*p.value)[i]);
    st.arrays.emplace(p.name, std::move(a));
  }
  return st;
}

void ScNet::load_state(const ModelState& st) {
  for (auto& p : params()) {
    auto it = st.arrays.find(p.name);
    if (it == st.arrays.end())
      throw std::runtime_error("sc: checkpoint is missing array '" + p.name + "'");
    if (it->second.shape != p.value->shape())
      throw std::runtime_error("sc: checkpoint array '" + p.name +
                               "' shape does not match the current architecture");
    for (long i = 0; i < p.value->numel(); ++i)
      (*p.value)[i] = static_cast<double>(it->second.values[static_cast<std::size_t>(i)]);
  }
}

double mmd_loss(const Tensor& g_hat, const Tensor& r_hat, Tensor* d_g_hat,
                Tensor* d_r_hat, bool use_std) {
  if (g_hat.rank() != 2 || r_hat.rank() != 2 || g_hat.dim(1) != r_hat.dim(1))
    throw std::invalid_argument("mmd_loss: batches must share the embedded dimension");
  const int bg = g_hat.dim(0), br = r_hat.dim(0), c = g_hat.dim(1);
  if (bg < 2 || br < 2)
    throw std::invalid_argument("mmd_loss: batch size must be >= 2 for the variance term");
  if (d_g_hat) *d_g_hat = Tensor(g_hat.shape());
  if (d_r_hat) *d_r_hat = Tensor(r_hat.shape());

  double loss = 0.0;
  for (int j = 0; j < c; ++j) {
    double mg = 0.0, mr = 0.0;
    for (int i = 0; i < bg; ++i) mg += g_hat.at2(i, j);
    for (int i = 0; i < br; ++i) mr += r_hat.at2(i, j);
    mg /= bg;
    mr /= br;
    double vg = 0.0, vr = 0.0;
    for (int i = 0; i < bg; ++i) {
      const double diff = g_hat.at2(i, j) - mg;
      vg += diff * diff;
    }
    for (int i = 0; i < br; ++i) {
      const double diff = r_hat.at2(i, j) - mr;
      vr += diff * diff;
    }
    vg /= bg;
    vr /= br;

    const double dmean = mg - mr;
    double sg = vg, sr = vr;   // spread statistic: variance by default
    double dsg_dv = 1.0, dsr_dv = 1.0;
    if (use_std) {
      sg = std::sqrt(vg + 1e-12);
      sr = std::sqrt(vr + 1e-12);
      dsg_dv = 0.5 / sg;
      dsr_dv = 0.5 / sr;
    }
    const double dspread = sg - sr;
    loss += dmean * dmean + dspread * dspread;

    if (d_g_hat) {
      for (int i = 0; i < bg; ++i)
        d_g_hat->at2(i, j) += 2.0 * dmean / bg +
                              2.0 * dspread * dsg_dv * 2.0 * (g_hat.at2(i, j) - mg) / bg;
    }
    if (d_r_hat) {
      for (int i = 0; i < br; ++i)
        d_r_hat->at2(i, j) += -2.0 * dmean / br -
                              2.0 * dspread * dsr_dv * 2.0 * (r_hat.at2(i, j) - mr) / br;
    }
  }
  return loss;
}

double mmd_mse_loss(const Tensor& g_hat, const Tensor& r_hat, Tensor* d_g_hat,
                    Tensor* d_r_hat) {
  if (g_hat.shape() != r_hat.shape())
    throw std::invalid_argument("mmd_mse_loss: batches must be elementwise pairable");
  const int bsz = g_hat.dim(0);
  if (d_g_hat) *d_g_hat = Tensor(g_hat.shape());
  if (d_r_hat) *d_r_hat = Tensor(r_hat.shape());
  double loss = 0.0;
  for (long i = 0; i < g_hat.numel(); ++i) {
    const double diff = g_hat[i] - r_hat[i];
    loss += diff * diff;
    if (d_g_hat) (*d_g_hat)[i] = 2.0 * diff / bsz;
    if (d_r_hat) (*d_r_hat)[i] = -2.0 * diff / bsz;
  }
  return loss / bsz;
}

double recon_loss(const Tensor& r_tilde, const Tensor& r, const Tensor& g_tilde,
                  const Tensor& g, Tensor* d_r_tilde, Tensor* d_g_tilde, Tensor* d_r,
                  Tensor* d_g) {
  if (r_tilde.shape() != r.shape() || g_tilde.shape() != g.shape())
    throw std::invalid_argument("recon_loss: reconstruction shapes must match the originals");
  const int bsz = r.dim(0);
  if (g.dim(0) != bsz) throw std::invalid_argument("recon_loss: batch sizes differ");
  if (d_r_tilde) *d_r_tilde = Tensor(r_tilde.shape());
  if (d_g_tilde) *d_g_tilde = Tensor(g_tilde.shape());
  if (d_r) *d_r = Tensor(r.shape());
  if (d_g) *d_g = Tensor(g.shape());
  double loss = 0.0;
  for (long i = 0; i < r.numel(); ++i) {
    const double diff = r_tilde[i] - r[i];
    loss += diff * diff;
    if (d_r_tilde) (*d_r_tilde)[i] = 2.0 * diff / bsz;
    if (d_r) (*d_r)[i] = -2.0 * diff / bsz;
  }
  for (long i = 0; i < g.numel(); ++i) {
    const double diff = g_tilde[i] - g[i];
    loss += diff * diff;
    if (d_g_tilde) (*d_g_tilde)[i] = 2.0 * diff / bsz;
    if (d_g) (*d_g)[i] = -2.0 * diff / bsz;
  }
  return loss / bsz;
}

}  // namespace gaitreid
