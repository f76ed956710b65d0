#pragma once

#include <array>
#include <string>
#include <vector>

#include "gaitreid/config.hpp"
#include "gaitreid/dataset.hpp"
#include "gaitreid/models.hpp"

namespace gaitreid {

// Loss component order used everywhere a 7-vector appears:
// position, pred, tri_sep, cla, tri_hm, mmd, recon.
inline constexpr int kNumLossComponents = 7;
using LossVec = std::array<double, kNumLossComponents>;

double compose_phase3_loss(const LossVec& components, const LossVec& weights);

// Per-variant weight mask over the configured weights.
LossVec variant_loss_weights(const Config& cfg, Variant variant);

struct PhaseSchedule {
  std::string phase;  // "1" | "2a" | "2b" | "3"
  int epochs = 1;
  double lr = 0.0;       // gait-stream rate in phase 3
  double reid_lr = 0.0;  // phase 3 only
  std::vector<int> milestones;
  double decay = 1.0;
  std::vector<int> reid_milestones;  // phase 3 only
  double reid_decay = 1.0;
  double weight_decay = 0.0;
  int p = 2, k = 2;
  int steps_per_epoch = 1;

  double lr_at(int epoch) const;
  double reid_lr_at(int epoch) const;
};

PhaseSchedule phase1_schedule(const Config& cfg);
PhaseSchedule phase2a_schedule(const Config& cfg);
PhaseSchedule phase2b_schedule(const Config& cfg);
PhaseSchedule phase3_schedule(const Config& cfg);

struct LossRow {
  int epoch = 0;
  int step = 0;
  LossVec components{};
  double total = 0.0;
  double lr_gait = 0.0;
  double lr_reid = 0.0;
};

class LossLog {
 public:
  static constexpr const char* kHeader =
      "epoch,step,l_position,l_pred,l_tri_sep,l_cla,l_tri_hm,l_mmd,l_recon,total,lr_gait,lr_reid";
  void add(const LossRow& row) { rows_.push_back(row); }
  const std::vector<LossRow>& rows() const { return rows_; }
  void write_csv(const std::string& path) const;
  std::string csv_text() const;

 private:
  std::vector<LossRow> rows_;
};

// Phase 1: gaitnet pretraining with the separate triplet loss over PK-sampled
// silhouette sets. Writes <ckpt_dir>/gaitnet when ckpt_dir is non-empty.
void run_phase1(const DatasetIndex& gait_train, const Config& cfg, GaitNet& gaitnet,
                LossLog* log, const std::string& ckpt_dir);

// Phase 2: GSP warm-up on (input frame -> ground-truth window) pairs, then
// joint GSP+gaitnet training that adds the separate triplet loss on features
// of the predicted sequences. Writes <ckpt_dir>/{gsp-warmup,gsp,gaitnet}.
void run_phase2(const DatasetIndex& gait_train, const Config& cfg, GspNet& gsp,
                GaitNet& gaitnet, LossLog* log_warmup, LossLog* log_joint,
                const std::string& ckpt_dir);

// Phase 3: joint two-stream training under a variant. Components the variant
// does not touch may be null. Writes per-component checkpoints plus
// loss_weights.json when ckpt_dir is non-empty.
struct Phase3Nets {
  GspNet* gsp = nullptr;
  GaitNet* gaitnet = nullptr;
  ReidNet* reid = nullptr;
  ScNet* sc = nullptr;
};

void run_phase3(const DatasetIndex& reid_train, const Config& cfg, Variant variant,
                Phase3Nets nets, LossLog* log, const std::string& ckpt_dir);

// Sorted-unique identity -> classifier index mapping used by phase 3.
std::vector<int> classifier_index(const DatasetIndex& train);

}  // namespace gaitreid
