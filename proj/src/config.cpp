#include "gaitreid/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gaitreid/sha1.hpp"

namespace gaitreid {

using nlohmann::json;

PositionPolicy parse_position_policy(const std::string& s) {
  if (s == "mid") return PositionPolicy::Mid;
  if (s == "begn") return PositionPolicy::Begn;
  if (s == "end") return PositionPolicy::End;
  if (s == "arb") return PositionPolicy::Arb;
  throw std::runtime_error("unknown position_policy '" + s + "' (expected mid|begn|end|arb)");
}

Variant parse_variant(const std::string& s) {
  if (s == "baseline") return Variant::Baseline;
  if (s == "silhouette") return Variant::Silhouette;
  if (s == "gs-concat") return Variant::GsConcat;
  if (s == "gsp-concat") return Variant::GspConcat;
  if (s == "full") return Variant::Full;
  throw std::runtime_error("unknown variant '" + s +
                           "' (expected baseline|silhouette|gs-concat|gsp-concat|full)");
}

Protocol parse_protocol(const std::string& s) {
  if (s == "standard") return Protocol::Standard;
  if (s == "cloth-changing") return Protocol::ClothChanging;
  throw std::runtime_error("unknown protocol '" + s + "' (expected standard|cloth-changing)");
}

InferenceMode parse_inference_mode(const std::string& s) {
  if (s == "r") return InferenceMode::R;
  if (s == "gait-only") return InferenceMode::GaitOnly;
  if (s == "embedded-sum") return InferenceMode::EmbeddedSum;
  if (s == "recon-sum") return InferenceMode::ReconSum;
  if (s == "recon-r") return InferenceMode::ReconR;
  if (s == "concat-rg") return InferenceMode::ConcatRG;
  throw std::runtime_error("unknown inference_mode '" + s + "'");
}

std::string to_string(PositionPolicy p) {
  switch (p) {
    case PositionPolicy::Mid: return "mid";
    case PositionPolicy::Begn: return "begn";
    case PositionPolicy::End: return "end";
    case PositionPolicy::Arb: return "arb";
  }
  return "?";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Silhouette: return "silhouette";
    case Variant::GsConcat: return "gs-concat";
    case Variant::GspConcat: return "gsp-concat";
    case Variant::Full: return "full";
  }
  return "?";
}

std::string to_string(Protocol p) {
  return p == Protocol::Standard ? "standard" : "cloth-changing";
}

std::string to_string(InferenceMode m) {
  switch (m) {
    case InferenceMode::R: return "r";
    case InferenceMode::GaitOnly: return "gait-only";
    case InferenceMode::EmbeddedSum: return "embedded-sum";
    case InferenceMode::ReconSum: return "recon-sum";
    case InferenceMode::ReconR: return "recon-r";
    case InferenceMode::ConcatRG: return "concat-rg";
  }
  return "?";
}

namespace {

struct Field {
  std::function<void(Config&, const json&)> set;
  std::function<json(const Config&)> get;
};

template <typename T>
Field field(T Config::* member) {
  return Field{
      [member](Config& c, const json& v) { c.*member = v.get<T>(); },
      [member](const Config& c) { return json(c.*member); },
  };
}

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> s = {
      {"image_height", field(&Config::image_height)},
      {"image_width", field(&Config::image_width)},
      {"gait_frame_size", field(&Config::gait_frame_size)},
      {"n_pred", field(&Config::n_pred)},
      {"data_dir", field(&Config::data_dir)},
      {"gsp_channels", field(&Config::gsp_channels)},
      {"gsp_latent_dim", field(&Config::gsp_latent_dim)},
      {"gaitnet_channels", field(&Config::gaitnet_channels)},
      {"gaitnet_strip_dim", field(&Config::gaitnet_strip_dim)},
      {"hpm_scales", field(&Config::hpm_scales)},
      {"reid_channels", field(&Config::reid_channels)},
      {"reid_feature_dim", field(&Config::reid_feature_dim)},
      {"reid_in_channels", field(&Config::reid_in_channels)},
      {"sc_common_dim", field(&Config::sc_common_dim)},
      {"margin_sep", field(&Config::margin_sep)},
      {"margin_hm", field(&Config::margin_hm)},
      {"position_policy", field(&Config::position_policy)},
      {"position_loss_onehot", field(&Config::position_loss_onehot)},
      {"mmd_use_std", field(&Config::mmd_use_std)},
      {"mmd_as_mse", field(&Config::mmd_as_mse)},
      {"recon_enabled", field(&Config::recon_enabled)},
      {"variant", field(&Config::variant)},
      {"color_jitter_strength", field(&Config::color_jitter_strength)},
      {"steps_per_epoch", field(&Config::steps_per_epoch)},
      {"set_cardinality", field(&Config::set_cardinality)},
      {"pk_fallback", field(&Config::pk_fallback)},
      {"phase1_epochs", field(&Config::phase1_epochs)},
      {"phase1_lr", field(&Config::phase1_lr)},
      {"phase1_weight_decay", field(&Config::phase1_weight_decay)},
      {"phase1_p", field(&Config::phase1_p)},
      {"phase1_k", field(&Config::phase1_k)},
      {"phase2a_epochs", field(&Config::phase2a_epochs)},
      {"phase2a_lr", field(&Config::phase2a_lr)},
      {"phase2a_weight_decay", field(&Config::phase2a_weight_decay)},
      {"phase2a_milestones", field(&Config::phase2a_milestones)},
      {"phase2a_decay", field(&Config::phase2a_decay)},
      {"phase2_p", field(&Config::phase2_p)},
      {"phase2_k", field(&Config::phase2_k)},
      {"phase2b_epochs", field(&Config::phase2b_epochs)},
      {"phase2b_lr", field(&Config::phase2b_lr)},
      {"phase2b_weight_decay", field(&Config::phase2b_weight_decay)},
      {"phase2b_milestones", field(&Config::phase2b_milestones)},
      {"phase2b_decay", field(&Config::phase2b_decay)},
      {"phase3_epochs", field(&Config::phase3_epochs)},
      {"phase3_gait_lr", field(&Config::phase3_gait_lr)},
      {"phase3_reid_lr", field(&Config::phase3_reid_lr)},
      {"phase3_weight_decay", field(&Config::phase3_weight_decay)},
      {"phase3_reid_milestones", field(&Config::phase3_reid_milestones)},
      {"phase3_reid_decay", field(&Config::phase3_reid_decay)},
      {"phase3_p", field(&Config::phase3_p)},
      {"phase3_k", field(&Config::phase3_k)},
      {"w_position", field(&Config::w_position)},
      {"w_pred", field(&Config::w_pred)},
      {"w_tri_sep", field(&Config::w_tri_sep)},
      {"w_cla", field(&Config::w_cla)},
      {"w_tri_hm", field(&Config::w_tri_hm)},
      {"w_mmd", field(&Config::w_mmd)},
      {"w_recon", field(&Config::w_recon)},
      {"protocol", field(&Config::protocol)},
      {"inference_mode", field(&Config::inference_mode)},
      {"seed", field(&Config::seed)},
  };
  return s;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error("config: " + msg);
}

}  // namespace

void Config::validate() const {
  require(n_pred >= 2, "n_pred must be >= 2");
  require(gsp_latent_dim >= 1, "gsp_latent_dim must be >= 1");
  require(hpm_scales >= 1, "hpm_scales must be >= 1");
  require(gait_frame_size == 64, "gait_frame_size: only the canonical 64 is supported");
  require(image_height >= 16 && image_height % 16 == 0,
          "image_height must be a positive multiple of 16");
  require(image_width >= 16 && image_width % 16 == 0,
          "image_width must be a positive multiple of 16");
  require(gsp_channels.size() == 4, "gsp_channels must list 4 stages");
  require(gaitnet_channels.size() == 3, "gaitnet_channels must list 3 stages");
  require(reid_channels.size() == 4, "reid_channels must list 4 stages");
  for (int c : gsp_channels) require(c >= 1, "gsp_channels entries must be >= 1");
  for (int c : gaitnet_channels) require(c >= 1, "gaitnet_channels entries must be >= 1");
  for (int c : reid_channels) require(c >= 1, "reid_channels entries must be >= 1");
  require(gaitnet_strip_dim >= 1, "gaitnet_strip_dim must be >= 1");
  require(reid_feature_dim >= 1, "reid_feature_dim must be >= 1");
  require(reid_in_channels == 3 || reid_in_channels == 4,
          "reid_in_channels must be 3 or 4");
  require(sc_common_dim >= 1, "sc_common_dim must be >= 1");
  require(margin_sep >= 0.0, "margin_sep must be >= 0");
  require(margin_hm >= 0.0, "margin_hm must be >= 0");
  parse_position_policy(position_policy);
  parse_variant(variant);
  parse_protocol(protocol);
  parse_inference_mode(inference_mode);
  require(color_jitter_strength >= 0.0 && color_jitter_strength <= 1.0,
          "color_jitter_strength must be in [0,1]");
  require(steps_per_epoch >= 1, "steps_per_epoch must be >= 1");
  require(set_cardinality >= 1, "set_cardinality must be >= 1");

  for (double w : loss_weights()) require(w >= 0.0, "loss weights must be >= 0");

  // Triplet losses need positives and negatives inside every batch.
  require(phase1_p >= 2, "phase1_p: P must be >= 2");
  require(phase1_k >= 2, "phase1_k: K must be >= 2");
  require(phase2_p >= 2, "phase2_p: P must be >= 2");
  require(phase2_k >= 2, "phase2_k: K must be >= 2");
  require(phase3_p >= 2, "phase3_p: P must be >= 2");
  require(phase3_k >= 2, "phase3_k: K must be >= 2");

  require(phase1_epochs >= 1 && phase2a_epochs >= 1 && phase2b_epochs >= 1 &&
              phase3_epochs >= 1,
          "epoch counts must be >= 1");
  require(phase1_lr > 0 && phase2a_lr > 0 && phase2b_lr > 0 && phase3_gait_lr > 0 &&
              phase3_reid_lr > 0,
          "learning rates must be > 0");
  require(phase1_weight_decay >= 0 && phase2a_weight_decay >= 0 &&
              phase2b_weight_decay >= 0 && phase3_weight_decay >= 0,
          "weight decays must be >= 0");
}

std::string Config::to_json_string() const {
  json j;
  for (const auto& [name, f] : schema()) j[name] = f.get(*this);
  return j.dump();  // nlohmann emits object keys sorted, canonical for hashing
}

std::string Config::fingerprint() const {
  // Run-role keys identify a run, not the model a checkpoint holds; varying
  // them must not invalidate checkpoints.
  json j = json::parse(to_json_string());
  for (const char* key : {"data_dir", "protocol", "inference_mode", "variant"}) j.erase(key);
  return Sha1::hex(j.dump());
}

Config Config::from_json_string(const std::string& text) {
  json j;
  try {
    j = text.empty() ? json::object() : json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: top-level value must be an object");
  Config c;
  const auto& s = schema();
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto f = s.find(it.key());
    if (f == s.end())
      throw std::runtime_error("config: unknown key '" + it.key() + "'");
    try {
      f->second.set(c, it.value());
    } catch (const std::exception& e) {
      throw std::runtime_error("config: bad value for key '" + it.key() + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

void Config::apply_override(const std::string& key_eq_value) {
  auto pos = key_eq_value.find('=');
  if (pos == std::string::npos)
    throw std::runtime_error("override must look like key=value, got '" + key_eq_value + "'");
  const std::string key = key_eq_value.substr(0, pos);
  const std::string raw = key_eq_value.substr(pos + 1);
  const auto& s = schema();
  auto f = s.find(key);
  if (f == s.end()) throw std::runtime_error("config: unknown key '" + key + "'");
  json v;
  try {
    v = json::parse(raw);
  } catch (...) {
    v = raw;  // unquoted strings pass through verbatim
  }
  try {
    f->second.set(*this, v);
  } catch (const std::exception& e) {
    throw std::runtime_error("config: bad value for key '" + key + "': " + e.what());
  }
}

}  // namespace gaitreid
