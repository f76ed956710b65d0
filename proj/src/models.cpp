#include "gaitreid/models.hpp"

#include <stdexcept>

namespace gaitreid {

GspNet::Options gsp_options(const Config& cfg) {
  GspNet::Options opt;
  opt.n_pred = cfg.n_pred;
  opt.latent_dim = cfg.gsp_latent_dim;
  opt.channels = cfg.gsp_channels;
  opt.use_position = parse_position_policy(cfg.position_policy) != PositionPolicy::Arb;
  opt.onehot_position = cfg.position_loss_onehot;
  opt.frame = cfg.gait_frame_size;
  return opt;
}

GaitNet::Options gaitnet_options(const Config& cfg) {
  GaitNet::Options opt;
  opt.channels = cfg.gaitnet_channels;
  opt.scales = cfg.hpm_scales;
  opt.strip_dim = cfg.gaitnet_strip_dim;
  opt.frame = cfg.gait_frame_size;
  return opt;
}

ReidNet::Options reid_options(const Config& cfg, int num_classes) {
  ReidNet::Options opt;
  opt.channels = cfg.reid_channels;
  opt.feature_dim = cfg.reid_feature_dim;
  opt.in_channels = cfg.reid_in_channels;
  opt.image_h = cfg.image_height;
  opt.image_w = cfg.image_width;
  opt.num_classes = num_classes;
  return opt;
}

ScNet::Options sc_options(const Config& cfg) {
  ScNet::Options opt;
  opt.r_dim = cfg.reid_feature_dim;
  opt.g_dim = hpm_strip_count(cfg.hpm_scales) * cfg.gaitnet_strip_dim;
  opt.common_dim = cfg.sc_common_dim;
  return opt;
}

std::unique_ptr<GspNet> ModelSet::make_gsp(const Config& cfg, Rng& rng) {
  auto net = std::make_unique<GspNet>(gsp_options(cfg));
  net->init(rng);
  return net;
}

std::unique_ptr<GaitNet> ModelSet::make_gaitnet(const Config& cfg, Rng& rng) {
  auto net = std::make_unique<GaitNet>(gaitnet_options(cfg));
  net->init(rng);
  return net;
}

std::unique_ptr<ReidNet> ModelSet::make_reid(const Config& cfg, int num_classes, Rng& rng) {
  auto net = std::make_unique<ReidNet>(reid_options(cfg, num_classes));
  net->init(rng);
  return net;
}

std::unique_ptr<ScNet> ModelSet::make_sc(const Config& cfg, Rng& rng) {
  auto net = std::make_unique<ScNet>(sc_options(cfg));
  net->init(rng);
  return net;
}

void ModelSet::load_gsp(const Config& cfg, const std::string& dir, bool allow_mismatch) {
  LoadOptions opts{cfg.fingerprint(), allow_mismatch};
  ModelState st = load_checkpoint(dir, opts);
  if (st.component != "gsp")
    throw std::runtime_error("expected a gsp checkpoint in '" + dir + "', found '" +
                             st.component + "'");
  gsp = std::make_unique<GspNet>(gsp_options(cfg));
  gsp->load_state(st);
}

void ModelSet::load_gaitnet(const Config& cfg, const std::string& dir, bool allow_mismatch) {
  LoadOptions opts{cfg.fingerprint(), allow_mismatch};
  ModelState st = load_checkpoint(dir, opts);
  if (st.component != "gaitnet")
    throw std::runtime_error("expected a gaitnet checkpoint in '" + dir + "', found '" +
                             st.component + "'");
  gaitnet = std::make_unique<GaitNet>(gaitnet_options(cfg));
  gaitnet->load_state(st);
}

void ModelSet::load_reid(const Config& cfg, const std::string& dir, bool allow_mismatch) {
  LoadOptions opts{cfg.fingerprint(), allow_mismatch};
  ModelState st = load_checkpoint(dir, opts);
  if (st.component != "reid")
    throw std::runtime_error("expected a reid checkpoint in '" + dir + "', found '" +
                             st.component + "'");
  auto it = st.arrays.find("classifier.weight");
  if (it == st.arrays.end())
    throw std::runtime_error("reid checkpoint in '" + dir + "' lacks a classifier");
  const int num_classes = it->second.shape.at(0);
  reid = std::make_unique<ReidNet>(reid_options(cfg, num_classes));
  reid->load_state(st);
}

void ModelSet::load_sc(const Config& cfg, const std::string& dir, bool allow_mismatch) {
  LoadOptions opts{cfg.fingerprint(), allow_mismatch};
  ModelState st = load_checkpoint(dir, opts);
  if (st.component != "sc")
    throw std::runtime_error("expected an sc checkpoint in '" + dir + "', found '" +
                             st.component + "'");
  sc = std::make_unique<ScNet>(sc_options(cfg));
  sc->load_state(st);
}

}  // namespace gaitreid
