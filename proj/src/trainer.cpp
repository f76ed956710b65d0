#include "gaitreid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gaitreid/adam.hpp"
#include "gaitreid/preprocess.hpp"
#include "gaitreid/sampler.hpp"

namespace gaitreid {

namespace fs = std::filesystem;

double compose_phase3_loss(const LossVec& components, const LossVec& weights) {
  double total = 0.0;
  for (int i = 0; i < kNumLossComponents; ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("compose_phase3_loss: negative weight");
    total += weights[i] * components[i];
  }
  return total;
}

LossVec variant_loss_weights(const Config& cfg, Variant variant) {
  LossVec w = cfg.loss_weights();
  if (!cfg.recon_enabled) w[6] = 0.0;
  switch (variant) {
    case Variant::Baseline:
    case Variant::Silhouette:
      w[0] = w[1] = w[2] = w[5] = w[6] = 0.0;
      break;
    case Variant::GsConcat:
      w[0] = w[1] = 0.0;  // no GSP
      w[5] = w[6] = 0.0;  // no SC
      break;
    case Variant::GspConcat:
      w[5] = w[6] = 0.0;
      break;
    case Variant::Full:
      break;
  }
  if (parse_position_policy(cfg.position_policy) == PositionPolicy::Arb) w[0] = 0.0;
  return w;
}

double PhaseSchedule::lr_at(int epoch) const {
  return nn::scheduled_lr(lr, milestones, decay, epoch);
}

double PhaseSchedule::reid_lr_at(int epoch) const {
  return nn::scheduled_lr(reid_lr, reid_milestones, reid_decay, epoch);
}

PhaseSchedule phase1_schedule(const Config& cfg) {
  PhaseSchedule s;
  s.phase = "1";
  s.epochs = cfg.phase1_epochs;
  s.lr = cfg.phase1_lr;
  s.weight_decay = cfg.phase1_weight_decay;
  s.p = cfg.phase1_p;
  s.k = cfg.phase1_k;
  s.steps_per_epoch = cfg.steps_per_epoch;
  return s;
}

PhaseSchedule phase2a_schedule(const Config& cfg) {
  PhaseSchedule s;
  s.phase = "2a";
  s.epochs = cfg.phase2a_epochs;
  s.lr = cfg.phase2a_lr;
  s.milestones = cfg.phase2a_milestones;
  s.decay = cfg.phase2a_decay;
  s.weight_decay = cfg.phase2a_weight_decay;
  s.p = cfg.phase2_p;
  s.k = cfg.phase2_k;
  s.steps_per_epoch = cfg.steps_per_epoch;
  return s;
}

PhaseSchedule phase2b_schedule(const Config& cfg) {
  PhaseSchedule s;
  s.phase = "2b";
  s.epochs = cfg.phase2b_epochs;
  s.lr = cfg.phase2b_lr;
  s.milestones = cfg.phase2b_milestones;
  s.decay = cfg.phase2b_decay;
  s.weight_decay = cfg.phase2b_weight_decay;
  s.p = cfg.phase2_p;
  s.k = cfg.phase2_k;
  s.steps_per_epoch = cfg.steps_per_epoch;
  return s;
}

PhaseSchedule phase3_schedule(const Config& cfg) {
  PhaseSchedule s;
  s.phase = "3";
  s.epochs = cfg.phase3_epochs;
  s.lr = cfg.phase3_gait_lr;
  s.reid_lr = cfg.phase3_reid_lr;
  s.reid_milestones = cfg.phase3_reid_milestones;
  s.reid_decay = cfg.phase3_reid_decay;
  s.weight_decay = cfg.phase3_weight_decay;
  s.p = cfg.phase3_p;
  s.k = cfg.phase3_k;
  s.steps_per_epoch = cfg.steps_per_epoch;
  return s;
}

std::string LossLog::csv_text() const {
  std::ostringstream os;
  os.precision(17);
  os << kHeader << "\n";
  for (const auto& r : rows_) {
    os << r.epoch << "," << r.step;
    for (double c : r.components) os << "," << c;
    os << "," << r.total << "," << r.lr_gait << "," << r.lr_reid << "\n";
  }
  return os.str();
}

void LossLog::write_csv(const std::string& path) const {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("loss log: cannot write '" + path + "'");
  out << csv_text();
}

namespace {

void check_finite(double total, const LossVec& comps, const std::string& phase) {
  if (std::isfinite(total)) return;
  std::ostringstream os;
  os << "phase " << phase << ": non-finite total loss; components:";
  const char* names[] = {"position", "pred", "tri_sep", "cla", "tri_hm", "mmd", "recon"};
  for (int i = 0; i < kNumLossComponents; ++i) os << " " << names[i] << "=" << comps[i];
  throw std::runtime_error(os.str());
}

// (B, L, 64, 64) from grouped sample indices; every frame preprocessed to the
// canonical silhouette resolution.
Tensor sequence_batch(const DatasetIndex& index, const std::vector<std::vector<int>>& groups) {
  const int bsz = static_cast<int>(groups.size());
  const int len = static_cast<int>(groups.front().size());
  Tensor out({bsz, len, kGaitFrame, kGaitFrame});
  const long plane = static_cast<long>(kGaitFrame) * kGaitFrame;
  for (int b = 0; b < bsz; ++b) {
    for (int f = 0; f < len; ++f) {
      const Tensor sil = preprocess_mask(index.samples[static_cast<std::size_t>(groups[b][f])].mask);
      std::copy(sil.data(), sil.data() + plane,
                out.data() + (static_cast<long>(b) * len + f) * plane);
    }
  }
  return out;
}

// Frame index the policy feeds into GSP (and targets with the position loss).
int policy_index(PositionPolicy policy, int n, Rng& rng) {
  switch (policy) {
    case PositionPolicy::Mid: return n / 2;
    case PositionPolicy::Begn: return 0;
    case PositionPolicy::End: return n - 1;
    case PositionPolicy::Arb: return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  }
  return n / 2;
}

Tensor pick_frames(const Tensor& sequences, const std::vector<int>& frame_idx) {
  const int bsz = sequences.dim(0), len = sequences.dim(1);
  const long plane = static_cast<long>(sequences.dim(2)) * sequences.dim(3);
  Tensor out({bsz, 1, sequences.dim(2), sequences.dim(3)});
  for (int b = 0; b < bsz; ++b) {
    const int f = frame_idx[static_cast<std::size_t>(b)];
    if (f < 0 || f >= len) throw std::invalid_argument("pick_frames: index out of range");
    std::copy(sequences.data() + (static_cast<long>(b) * len + f) * plane,
              sequences.data() + (static_cast<long>(b) * len + f + 1) * plane,
              out.data() + static_cast<long>(b) * plane);
  }
  return out;
}

struct GspLossOut {
  double position = 0.0;
  double pred = 0.0;
  Tensor d_pred;
  Tensor d_pos;
};

GspLossOut gsp_full_losses(const GspNet& net, const GspNet::Out& out, const Tensor& gt,
                           const std::vector<int>& targets, bool onehot) {
  GspLossOut lo;
  lo.pred = pred_loss_full(out.pred, gt, &lo.d_pred);
  if (net.options().use_position) {
    if (onehot) {
      lo.position = position_loss_onehot(out.pos_out, targets, &lo.d_pos);
    } else {
      std::vector<double> t(targets.begin(), targets.end());
      lo.position = position_loss(out.pos_out, t, &lo.d_pos);
    }
  }
  return lo;
}

}  // namespace

std::vector<int> classifier_index(const DatasetIndex& train) {
  return train.identity_list();
}

void run_phase1(const DatasetIndex& gait_train, const Config& cfg, GaitNet& gaitnet,
                LossLog* log, const std::string& ckpt_dir) {
  if (gait_train.identity_list().size() < 2)
    throw std::runtime_error("phase 1: dataset needs at least 2 identities");
  const PhaseSchedule sched = phase1_schedule(cfg);
  SetSampler sampler(gait_train, sched.p, sched.k, cfg.set_cardinality,
                     derive_seed(cfg.seed, "phase1/sampler"));
  nn::Adam adam(gaitnet.params());
  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    const double lr = sched.lr_at(epoch);
    for (int step = 0; step < sched.steps_per_epoch; ++step) {
      const auto groups = sampler.next();
      std::vector<int> labels;
      labels.reserve(groups.size());
      for (const auto& grp : groups)
        labels.push_back(gait_train.samples[static_cast<std::size_t>(grp.front())].meta.id);
      const Tensor sets = sequence_batch(gait_train, groups);
      GaitNet::Out out = gaitnet.forward(sets);
      Tensor d_strips;
      const double loss = separate_triplet_loss(out.strips, labels, cfg.margin_sep, &d_strips);
      LossVec comps{0, 0, loss, 0, 0, 0, 0};
      check_finite(loss, comps, "1");
      adam.zero_grad();
      gaitnet.backward(d_strips);
      adam.step(lr, sched.weight_decay);
      if (log) log->add({epoch, step, comps, loss, lr, 0.0});
    }
  }
  if (!ckpt_dir.empty())
    save_checkpoint(gaitnet.state(cfg.fingerprint()), (fs::path(ckpt_dir) / "gaitnet").string());
}

void run_phase2(const DatasetIndex& gait_train, const Config& cfg, GspNet& gsp,
                GaitNet& gaitnet, LossLog* log_warmup, LossLog* log_joint,
                const std::string& ckpt_dir) {
  const PositionPolicy policy = parse_position_policy(cfg.position_policy);
  const int n = cfg.n_pred;
  Rng arb_rng(derive_seed(cfg.seed, "phase2/arb"));

  // stage 2a: GSP alone on (input frame -> full window) pairs
  {
    const PhaseSchedule sched = phase2a_schedule(cfg);
    WindowSampler sampler(gait_train, sched.p, sched.k, n,
                          derive_seed(cfg.seed, "phase2a/sampler"));
    nn::Adam adam(gsp.params());
    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
      const double lr = sched.lr_at(epoch);
      for (int step = 0; step < sched.steps_per_epoch; ++step) {
        const auto groups = sampler.next();
        const Tensor gt = sequence_batch(gait_train, groups);
        std::vector<int> targets(groups.size());
        for (auto& t : targets) t = policy_index(policy, n, arb_rng);
        const Tensor input = pick_frames(gt, targets);
        GspNet::Out out = gsp.forward(input, true);
        GspLossOut lo = gsp_full_losses(gsp, out, gt, targets, cfg.position_loss_onehot);
        const double total = lo.position + lo.pred;  // 1:1 balance
        LossVec comps{lo.position, lo.pred, 0, 0, 0, 0, 0};
        check_finite(total, comps, "2a");
        adam.zero_grad();
        gsp.backward(lo.d_pred, lo.d_pos);
        adam.step(lr, sched.weight_decay);
        if (log_warmup) log_warmup->add({epoch, step, comps, total, lr, 0.0});
      }
    }
    if (!ckpt_dir.empty())
      save_checkpoint(gsp.state(cfg.fingerprint()), (fs::path(ckpt_dir) / "gsp-warmup").string());
  }

  // stage 2b: joint GSP + gaitnet, adding the separate triplet loss on
  // features of the predicted sequences
  {
    const PhaseSchedule sched = phase2b_schedule(cfg);
    WindowSampler sampler(gait_train, sched.p, sched.k, n,
                          derive_seed(cfg.seed, "phase2b/sampler"));
    std::vector<nn::ParamRef> joint = gsp.params();
    for (auto& p : gaitnet.params()) joint.push_back(p);
    nn::Adam adam(std::move(joint));
    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
      const double lr = sched.lr_at(epoch);
      for (int step = 0; step < sched.steps_per_epoch; ++step) {
        const auto groups = sampler.next();
        std::vector<int> labels;
        labels.reserve(groups.size());
        for (const auto& grp : groups)
          labels.push_back(gait_train.samples[static_cast<std::size_t>(grp.front())].meta.id);
        const Tensor gt = sequence_batch(gait_train, groups);
        std::vector<int> targets(groups.size());
        for (auto& t : targets) t = policy_index(policy, n, arb_rng);
        const Tensor input = pick_frames(gt, targets);
        GspNet::Out out = gsp.forward(input, true);
        GspLossOut lo = gsp_full_losses(gsp, out, gt, targets, cfg.position_loss_onehot);
        GaitNet::Out gout = gaitnet.forward(out.pred);
        Tensor d_strips;
        const double tri = separate_triplet_loss(gout.strips, labels, cfg.margin_sep, &d_strips);
        const double total = lo.position + lo.pred + tri;
        LossVec comps{lo.position, lo.pred, tri, 0, 0, 0, 0};
        check_finite(total, comps, "2b");
        adam.zero_grad();
        Tensor d_pred = gaitnet.backward(d_strips);
        add_into(d_pred, lo.d_pred);
        gsp.backward(d_pred, lo.d_pos);
        adam.step(lr, sched.weight_decay);
        if (log_joint) log_joint->add({epoch, step, comps, total, lr, 0.0});
      }
    }
    if (!ckpt_dir.empty()) {
      save_checkpoint(gsp.state(cfg.fingerprint()), (fs::path(ckpt_dir) / "gsp").string());
      save_checkpoint(gaitnet.state(cfg.fingerprint()),
                      (fs::path(ckpt_dir) / "gaitnet").string());
    }
  }
}

void run_phase3(const DatasetIndex& reid_train, const Config& cfg, Variant variant,
                Phase3Nets nets, LossLog* log, const std::string& ckpt_dir) {
  const bool uses_gsp = variant == Variant::Full || variant == Variant::GspConcat;
  const bool uses_gaitnet = uses_gsp || variant == Variant::GsConcat;
  const bool uses_sc = variant == Variant::Full;
  if (!nets.reid) throw std::runtime_error("phase 3: reid network is required");
  if (uses_gsp && !nets.gsp)
    throw std::runtime_error("phase 3: variant '" + to_string(variant) +
                             "' needs a gsp checkpoint");
  if (uses_gaitnet && !nets.gaitnet)
    throw std::runtime_error("phase 3: variant '" + to_string(variant) +
                             "' needs a gaitnet checkpoint");
  if (uses_sc && !nets.sc) throw std::runtime_error("phase 3: variant 'full' needs sc layers");
  if (variant == Variant::Silhouette && cfg.reid_in_channels != 4)
    throw std::runtime_error("phase 3: variant 'silhouette' needs reid_in_channels=4");
  if (variant != Variant::Silhouette && cfg.reid_in_channels != 3)
    throw std::runtime_error("phase 3: variant '" + to_string(variant) +
                             "' needs reid_in_channels=3");
  if (uses_sc && !cfg.recon_enabled && parse_inference_mode(cfg.inference_mode) ==
                                           InferenceMode::ReconSum)
    std::fprintf(stderr,
                 "warning: recon loss is disabled but inference_mode=recon-sum was requested\n");

  const PositionPolicy policy = parse_position_policy(cfg.position_policy);
  const LossVec w = variant_loss_weights(cfg, variant);
  const PhaseSchedule sched = phase3_schedule(cfg);
  const int n = cfg.n_pred;

  const std::vector<int> classes = classifier_index(reid_train);
  if (classes.size() < 2) throw std::runtime_error("phase 3: dataset needs >= 2 identities");
  std::map<int, int> class_of;
  for (int i = 0; i < static_cast<int>(classes.size()); ++i) class_of[classes[i]] = i;
  if (nets.reid->options().num_classes != static_cast<int>(classes.size()))
    throw std::runtime_error("phase 3: classifier width " +
                             std::to_string(nets.reid->options().num_classes) +
                             " does not match the train identity count " +
                             std::to_string(classes.size()));

  PkSampler sampler(reid_train, sched.p, sched.k, derive_seed(cfg.seed, "phase3/sampler"),
                    cfg.pk_fallback);
  Rng arb_rng(derive_seed(cfg.seed, "phase3/arb"));
  Rng jitter_rng(derive_seed(cfg.seed, "phase3/jitter"));

  std::vector<nn::ParamRef> gait_params;
  if (uses_gsp)
    for (auto& p : nets.gsp->params()) gait_params.push_back(p);
  if (uses_gaitnet)
    for (auto& p : nets.gaitnet->params()) gait_params.push_back(p);
  nn::Adam adam_gait(gait_params);
  std::vector<nn::ParamRef> reid_params = nets.reid->params();
  if (uses_sc)
    for (auto& p : nets.sc->params()) reid_params.push_back(p);  // SC rides the reid optimizer
  nn::Adam adam_reid(std::move(reid_params));

  const int bsz = sched.p * sched.k;
  const long sil_plane = static_cast<long>(kGaitFrame) * kGaitFrame;

  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    const double gait_lr = sched.lr_at(epoch);
    const double reid_lr = sched.reid_lr_at(epoch);
    for (int step = 0; step < sched.steps_per_epoch; ++step) {
      const std::vector<int> idxs = sampler.next();
      std::vector<int> labels(idxs.size());
      for (std::size_t i = 0; i < idxs.size(); ++i) {
        auto it = class_of.find(reid_train.samples[static_cast<std::size_t>(idxs[i])].meta.id);
        if (it == class_of.end())
          throw std::runtime_error("phase 3: identity absent from classifier index");
        labels[i] = it->second;
      }

      // reid input
      Tensor imgs({bsz, cfg.reid_in_channels, cfg.image_height, cfg.image_width});
      for (int b = 0; b < bsz; ++b) {
        const auto& sample = reid_train.samples[static_cast<std::size_t>(idxs[b])];
        ImageU8 rgb = sample.rgb;
        if (cfg.color_jitter_strength > 0.0)
          rgb = body_color_jitter(rgb, sample.mask, cfg.color_jitter_strength,
                                  jitter_rng.bits());
        for (int c = 0; c < 3; ++c)
          for (int y = 0; y < rgb.h; ++y)
            for (int x = 0; x < rgb.w; ++x) imgs.at4(b, c, y, x) = rgb.at(y, x, c) / 255.0;
        if (cfg.reid_in_channels == 4)
          for (int y = 0; y < sample.mask.h; ++y)
            for (int x = 0; x < sample.mask.w; ++x)
              imgs.at4(b, 3, y, x) = sample.mask.at(y, x, 0) / 255.0;
      }

      ReidNet::Out ro = nets.reid->forward(imgs, true);
      Tensor d_logits, d_r_tri;
      LossVec comps{};
      comps[3] = classification_loss(ro.logits, labels, &d_logits);
      comps[4] = batch_hard_triplet_loss(ro.r, labels, cfg.margin_hm, &d_r_tri);

      // gait stream
      Tensor sil, gait_input;
      GspNet::Out gsp_out;
      GaitNet::Out gait_out;
      GspLossOut glo;
      std::vector<int> targets;
      if (uses_gaitnet) {
        sil = Tensor({bsz, 1, kGaitFrame, kGaitFrame});
        for (int b = 0; b < bsz; ++b) {
          const Tensor m =
              preprocess_mask(reid_train.samples[static_cast<std::size_t>(idxs[b])].mask);
          std::copy(m.data(), m.data() + sil_plane, sil.data() + b * sil_plane);
        }
        if (uses_gsp) {
          targets.resize(static_cast<std::size_t>(bsz));
          for (auto& t : targets) t = policy_index(policy, n, arb_rng);
          gsp_out = nets.gsp->forward(sil, true);
          // weak prediction loss: the only ground truth is the input mask
          Tensor flat_sil = sil.reshaped({bsz, kGaitFrame, kGaitFrame});
          comps[1] = 0.0;
          glo.d_pred = Tensor(gsp_out.pred.shape());
          for (int b = 0; b < bsz; ++b) {
            // frames are compared at the policy's index
            Tensor one = Tensor({1, n, kGaitFrame, kGaitFrame});
            std::copy(gsp_out.pred.data() + static_cast<long>(b) * n * sil_plane,
                      gsp_out.pred.data() + static_cast<long>(b + 1) * n * sil_plane,
                      one.data());
            Tensor one_sil({1, kGaitFrame, kGaitFrame});
            std::copy(flat_sil.data() + static_cast<long>(b) * sil_plane,
                      flat_sil.data() + static_cast<long>(b + 1) * sil_plane, one_sil.data());
            Tensor d_one;
            comps[1] += pred_loss_weak(one, one_sil, targets[static_cast<std::size_t>(b)], &d_one);
            std::copy(d_one.data(), d_one.data() + d_one.numel(),
                      glo.d_pred.data() + static_cast<long>(b) * n * sil_plane);
          }
          comps[1] /= bsz;
          scale(glo.d_pred, 1.0 / bsz);
          if (nets.gsp->options().use_position) {
            if (cfg.position_loss_onehot) {
              comps[0] = position_loss_onehot(gsp_out.pos_out, targets, &glo.d_pos);
            } else {
              std::vector<double> t(targets.begin(), targets.end());
              comps[0] = position_loss(gsp_out.pos_out, t, &glo.d_pos);
            }
          }
          gait_input = gsp_out.pred;
        } else {
          // duplicate the single silhouette into an N-frame set
          gait_input = Tensor({bsz, n, kGaitFrame, kGaitFrame});
          for (int b = 0; b < bsz; ++b)
            for (int f = 0; f < n; ++f)
              std::copy(sil.data() + b * sil_plane, sil.data() + (b + 1) * sil_plane,
                        gait_input.data() + (static_cast<long>(b) * n + f) * sil_plane);
        }
        gait_out = nets.gaitnet->forward(gait_input);
        Tensor d_strips;
        comps[2] = separate_triplet_loss(gait_out.strips, labels, cfg.margin_sep, &d_strips);
        scale(d_strips, w[2]);

        // SC constraint
        Tensor d_r_sc({bsz, ro.r.dim(1)});
        Tensor d_g_sc({bsz, gait_out.g.dim(1)});
        if (uses_sc) {
          ScNet::Embedded emb = nets.sc->embed(ro.r, gait_out.g);
          Tensor d_r_hat({bsz, emb.r_hat.dim(1)}), d_g_hat({bsz, emb.g_hat.dim(1)});
          Tensor d_g_hat_mmd, d_r_hat_mmd;
          comps[5] = cfg.mmd_as_mse
                         ? mmd_mse_loss(emb.g_hat, emb.r_hat, &d_g_hat_mmd, &d_r_hat_mmd)
                         : mmd_loss(emb.g_hat, emb.r_hat, &d_g_hat_mmd, &d_r_hat_mmd,
                                    cfg.mmd_use_std);
          scale(d_g_hat_mmd, w[5]);
          scale(d_r_hat_mmd, w[5]);
          add_into(d_g_hat, d_g_hat_mmd);
          add_into(d_r_hat, d_r_hat_mmd);
          if (cfg.recon_enabled && w[6] > 0.0) {
            ScNet::Recon rec = nets.sc->reconstruct(emb.r_hat, emb.g_hat);
            Tensor d_rt, d_gt2, d_r_direct, d_g_direct;
            comps[6] = recon_loss(rec.r_tilde, ro.r, rec.g_tilde, gait_out.g, &d_rt, &d_gt2,
                                  &d_r_direct, &d_g_direct);
            scale(d_rt, w[6]);
            scale(d_gt2, w[6]);
            scale(d_r_direct, w[6]);
            scale(d_g_direct, w[6]);
            auto [d_r_hat_rec, d_g_hat_rec] = nets.sc->backward_recon(d_rt, d_gt2);
            add_into(d_r_hat, d_r_hat_rec);
            add_into(d_g_hat, d_g_hat_rec);
            add_into(d_r_sc, d_r_direct);
            add_into(d_g_sc, d_g_direct);
          }
          auto [d_r_emb, d_g_emb] = nets.sc->backward_embed(d_r_hat, d_g_hat);
          add_into(d_r_sc, d_r_emb);
          add_into(d_g_sc, d_g_emb);
        }

        const double total = compose_phase3_loss(comps, w);
        check_finite(total, comps, "3");
        adam_gait.zero_grad();
        adam_reid.zero_grad();

        // gait-stream backward
        Tensor d_strips_total = d_strips;
        add_into(d_strips_total,
                 d_g_sc.reshaped({bsz, gait_out.strips.dim(1), gait_out.strips.dim(2)}));
        Tensor d_gait_input = nets.gaitnet->backward(d_strips_total);
        if (uses_gsp) {
          Tensor d_pred = d_gait_input;
          Tensor d_pred_weak = glo.d_pred;
          scale(d_pred_weak, w[1]);
          add_into(d_pred, d_pred_weak);
          Tensor d_pos = glo.d_pos;
          if (d_pos.numel() > 0) scale(d_pos, w[0]);
          nets.gsp->backward(d_pred, d_pos);
        }

        // reid backward
        Tensor d_r = d_r_tri;
        scale(d_r, w[4]);
        add_into(d_r, d_r_sc);
        scale(d_logits, w[3]);
        nets.reid->backward(d_r, d_logits);

        if (!gait_params.empty()) adam_gait.step(gait_lr, sched.weight_decay);
        adam_reid.step(reid_lr, sched.weight_decay);
        if (log) log->add({epoch, step, comps, total, gait_lr, reid_lr});
      } else {
        const double total = compose_phase3_loss(comps, w);
        check_finite(total, comps, "3");
        adam_reid.zero_grad();
        Tensor d_r = d_r_tri;
        scale(d_r, w[4]);
        scale(d_logits, w[3]);
        nets.reid->backward(d_r, d_logits);
        adam_reid.step(reid_lr, sched.weight_decay);
        if (log) log->add({epoch, step, comps, total, 0.0, reid_lr});
      }
    }
  }

  if (!ckpt_dir.empty()) {
    const std::string fp = cfg.fingerprint();
    fs::create_directories(ckpt_dir);
    save_checkpoint(nets.reid->state(fp), (fs::path(ckpt_dir) / "reid").string());
    if (uses_gsp) save_checkpoint(nets.gsp->state(fp), (fs::path(ckpt_dir) / "gsp").string());
    if (uses_gaitnet)
      save_checkpoint(nets.gaitnet->state(fp), (fs::path(ckpt_dir) / "gaitnet").string());
    if (uses_sc) save_checkpoint(nets.sc->state(fp), (fs::path(ckpt_dir) / "sc").string());
    nlohmann::json j;
    j["loss_weights"] = w;
    j["variant"] = to_string(variant);
    std::ofstream out(fs::path(ckpt_dir) / "loss_weights.json");
    out << j.dump(2) << "\n";
  }
}

}  // namespace gaitreid
