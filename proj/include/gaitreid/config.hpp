#pragma once

#include <array>
#include <string>
#include <vector>

namespace gaitreid {

enum class PositionPolicy { Mid, Begn, End, Arb };
enum class Variant { Baseline, Silhouette, GsConcat, GspConcat, Full };
enum class Protocol { Standard, ClothChanging };
enum class InferenceMode { R, GaitOnly, EmbeddedSum, ReconSum, ReconR, ConcatRG };

PositionPolicy parse_position_policy(const std::string& s);
Variant parse_variant(const std::string& s);
Protocol parse_protocol(const std::string& s);
InferenceMode parse_inference_mode(const std::string& s);
std::string to_string(PositionPolicy p);
std::string to_string(Variant v);
std::string to_string(Protocol p);
std::string to_string(InferenceMode m);

// Flat-key configuration. The JSON schema is one flat object whose keys
// mirror the field names below; unknown keys are rejected.
struct Config {
  // data
  int image_height = 128;
  int image_width = 64;
  int gait_frame_size = 64;  // canonical silhouette resolution (only 64 supported)
  int n_pred = 8;            // predicted gait sequence length N
  std::string data_dir;

  // model
  std::vector<int> gsp_channels = {8, 16, 32, 64};
  int gsp_latent_dim = 100;
  std::vector<int> gaitnet_channels = {32, 64, 128};
  int gaitnet_strip_dim = 64;
  int hpm_scales = 5;  // S
  std::vector<int> reid_channels = {32, 64, 128, 256};
  int reid_feature_dim = 256;
  int reid_in_channels = 3;  // 4 = rgb + silhouette channel
  int sc_common_dim = 256;

  // training
  double margin_sep = 0.2;
  double margin_hm = 0.3;
  std::string position_policy = "mid";
  bool position_loss_onehot = false;
  bool mmd_use_std = false;
  bool mmd_as_mse = false;
  bool recon_enabled = true;
  std::string variant = "full";
  double color_jitter_strength = 0.0;
  int steps_per_epoch = 50;
  int set_cardinality = 30;
  bool pk_fallback = true;

  int phase1_epochs = 80;
  double phase1_lr = 1e-4;
  double phase1_weight_decay = 0.0;
  int phase1_p = 16;
  int phase1_k = 8;

  int phase2a_epochs = 80;
  double phase2a_lr = 5e-4;
  double phase2a_weight_decay = 1e-4;
  std::vector<int> phase2a_milestones = {40};
  double phase2a_decay = 0.1;
  int phase2_p = 4;
  int phase2_k = 8;

  int phase2b_epochs = 160;
  double phase2b_lr = 5e-4;
  double phase2b_weight_decay = 1e-4;
  std::vector<int> phase2b_milestones = {40, 80, 120};
  double phase2b_decay = 0.5;

  int phase3_epochs = 240;
  double phase3_gait_lr = 1e-5;
  double phase3_reid_lr = 5e-4;
  double phase3_weight_decay = 1e-5;
  std::vector<int> phase3_reid_milestones = {80, 160};
  double phase3_reid_decay = 0.1;
  int phase3_p = 10;
  int phase3_k = 8;

  // loss weights (order: position, pred, tri_sep, cla, tri_hm, mmd, recon)
  double w_position = 0.1;
  double w_pred = 0.1;
  double w_tri_sep = 0.1;
  double w_cla = 1.0;
  double w_tri_hm = 1.0;
  double w_mmd = 0.5;
  double w_recon = 0.5;

  // eval
  std::string protocol = "standard";
  std::string inference_mode = "r";

  std::uint64_t seed = 0;

  std::array<double, 7> loss_weights() const {
    return {w_position, w_pred, w_tri_sep, w_cla, w_tri_hm, w_mmd, w_recon};
  }

  void validate() const;  // throws std::runtime_error naming the bad key

  std::string to_json_string() const;  // resolved config, sorted keys
  std::string fingerprint() const;     // sha1 of to_json_string()

  static Config from_json_string(const std::string& text);
  static Config load(const std::string& path);

  // Applies "key=value" overrides on top of the current values.
  void apply_override(const std::string& key_eq_value);
};

}  // namespace gaitreid
