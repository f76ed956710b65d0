#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gaitreid/dataset.hpp"
#include "gaitreid/rng.hpp"

namespace gaitreid {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kRefCanvas = 128.0;  // shape parameters are in 128-tall units

struct Vec2 {
  double x, y;
};

double seg_dist_sq(double px, double py, Vec2 a, Vec2 b) {
  const double abx = b.x - a.x, aby = b.y - a.y;
  const double apx = px - a.x, apy = py - a.y;
  const double len_sq = abx * abx + aby * aby;
  double t = len_sq > 0.0 ? (apx * abx + apy * aby) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = apx - t * abx, dy = apy - t * aby;
  return dx * dx + dy * dy;
}

enum class Region { None, Head, Torso, Arm, Foot, Leg };

struct Pose {
  double leg_theta[2];  // index 0 = -x side, 1 = +x side
  double arm_theta[2];
  double bob;
};

Pose pose_at(const WalkerShape& s, double phase) {
  double p = std::fmod(phase, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  const double sw = std::sin(p);
  Pose out;
  out.leg_theta[0] = -s.stride_amp * sw;
  out.leg_theta[1] = s.stride_amp * sw;
  out.arm_theta[0] = s.arm_amp * sw;  // arms oppose the same-side leg
  out.arm_theta[1] = -s.arm_amp * sw;
  out.bob = s.bob_amp * 0.5 * (1.0 - std::cos(2.0 * p));
  return out;
}

// xb, yb are body coordinates: origin at the hip, y growing downward.
Region classify(const WalkerShape& s, const Pose& pose, double xb, double yb) {
  // head
  {
    const double cy = -(s.torso_len + s.neck_len + s.head_r);
    const double dx = xb, dy = yb - cy;
    if (dx * dx + dy * dy <= s.head_r * s.head_r) return Region::Head;
  }
  // torso (ellipse, slightly taller than the shoulder-hip span)
  {
    const double sy = s.torso_len * 0.5 + 2.0;
    const double dx = xb / s.torso_halfw;
    const double dy = (yb + s.torso_len * 0.5) / sy;
    if (dx * dx + dy * dy <= 1.0) return Region::Torso;
  }
  const double r_sq = s.limb_r * s.limb_r;
  // arms
  for (int i = 0; i < 2; ++i) {
    const double side = i == 0 ? -1.0 : 1.0;
    const Vec2 a{side * s.shoulder_off, -(s.torso_len - 2.0)};
    const double th = pose.arm_theta[i];
    const Vec2 b{a.x + s.arm_len * std::sin(th), a.y + s.arm_len * std::cos(th)};
    if (seg_dist_sq(xb, yb, a, b) <= r_sq) return Region::Arm;
  }
  // feet before legs so shoes stay visible
  for (int i = 0; i < 2; ++i) {
    const double side = i == 0 ? -1.0 : 1.0;
    const double th = pose.leg_theta[i];
    const double fx = side * s.hip_off + s.leg_len * std::sin(th);
    const double fy = s.leg_len * std::cos(th);
    const double dx = xb - fx, dy = yb - fy;
    if (dx * dx + dy * dy <= s.foot_r * s.foot_r) return Region::Foot;
  }
  for (int i = 0; i < 2; ++i) {
    const double side = i == 0 ? -1.0 : 1.0;
    const Vec2 a{side * s.hip_off, 0.0};
    const double th = pose.leg_theta[i];
    const Vec2 b{a.x + s.leg_len * std::sin(th), a.y + s.leg_len * std::cos(th)};
    if (seg_dist_sq(xb, yb, a, b) <= r_sq) return Region::Leg;
  }
  return Region::None;
}

std::uint8_t quantize(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

void draw_color(ImageU8& rgb, int y, int x, const double c[3]) {
  rgb.at(y, x, 0) = quantize(c[0]);
  rgb.at(y, x, 1) = quantize(c[1]);
  rgb.at(y, x, 2) = quantize(c[2]);
}

}  // namespace

WalkerShape walker_for_identity(std::uint64_t seed, int id) {
  Rng rng(derive_seed(seed, "synth/identity/" + std::to_string(id)));
  WalkerShape s{};
  s.leg_len = rng.uniform(34.0, 46.0);
  s.arm_len = rng.uniform(24.0, 34.0);
  s.torso_len = rng.uniform(26.0, 34.0);
  s.torso_halfw = rng.uniform(5.5, 10.0);
  s.head_r = rng.uniform(5.0, 8.0);
  s.neck_len = rng.uniform(1.0, 3.0);
  s.shoulder_off = s.torso_halfw * 0.9;
  s.hip_off = s.torso_halfw * 0.5;
  s.limb_r = rng.uniform(2.2, 4.0);
  s.foot_r = s.limb_r + 0.8;
  s.stride_amp = rng.uniform(0.25, 0.7);
  s.arm_amp = rng.uniform(0.15, 0.6);
  s.cadence = rng.uniform(0.3, 0.8);
  s.bob_amp = rng.uniform(0.0, 2.5);
  for (double& c : s.skin) c = rng.uniform(0.3, 0.9);
  return s;
}

OutfitPalette palette_for_outfit(std::uint64_t seed, int outfit) {
  Rng rng(derive_seed(seed, "synth/outfit/" + std::to_string(outfit)));
  OutfitPalette p{};
  for (double& c : p.shirt) c = rng.uniform(0.15, 0.95);
  for (double& c : p.pants) c = rng.uniform(0.15, 0.95);
  for (double& c : p.shoes) c = rng.uniform(0.1, 0.8);
  return p;
}

CameraXf camera_transform(std::uint64_t seed, int cam) {
  Rng rng(derive_seed(seed, "synth/camera/" + std::to_string(cam)));
  CameraXf xf;
  xf.flip = rng.uniform() < 0.5;
  xf.scale = rng.uniform(0.85, 1.02);
  xf.tx = rng.uniform(-4.0, 4.0);
  xf.ty = rng.uniform(-3.0, 3.0);
  return xf;
}

void render_walker_frame(const WalkerShape& shape, const OutfitPalette& palette,
                         double phase, const CameraXf& cam, int h, int w,
                         ImageU8* rgb, ImageU8* mask) {
  if (!std::isfinite(phase)) throw std::invalid_argument("render_walker_frame: non-finite phase");
  *rgb = ImageU8(3, h, w);
  *mask = ImageU8(1, h, w);
  const Pose pose = pose_at(shape, phase);
  const double k = h / kRefCanvas;
  const double s = cam.scale * k;
  const double hip_x = w * 0.5 + cam.tx * k;
  const double hip_y = 0.95 * h - (shape.leg_len - pose.bob) * s + cam.ty * k;
  for (int py = 0; py < h; ++py) {
    const double yb = (py + 0.5 - hip_y) / s;
    for (int px = 0; px < w; ++px) {
      double xb = (px + 0.5 - hip_x) / s;
      if (cam.flip) xb = -xb;
      const Region region = classify(shape, pose, xb, yb);
      if (region == Region::None) continue;
      mask->at(py, px, 0) = 255;
      switch (region) {
        case Region::Head: draw_color(*rgb, py, px, shape.skin); break;
        case Region::Torso:
        case Region::Arm: draw_color(*rgb, py, px, palette.shirt); break;
        case Region::Leg: draw_color(*rgb, py, px, palette.pants); break;
        case Region::Foot: draw_color(*rgb, py, px, palette.shoes); break;
        case Region::None: break;
      }
    }
  }
}

DatasetBundle generate_synthetic_dataset(const SynthParams& params) {
  if (params.ids < 1 || params.outfits < 1 || params.cams < 1 || params.tracks < 1 ||
      params.frames < 1)
    throw std::invalid_argument("generate_synthetic_dataset: all counts must be >= 1");
  if (params.height < 8 || params.width < 8)
    throw std::invalid_argument("generate_synthetic_dataset: canvas too small");

  DatasetBundle out;
  out.train.split = "train";
  out.query.split = "query";
  out.gallery.split = "gallery";

  const int train_ids = std::max(1, static_cast<int>(std::lround(params.ids * 2.0 / 3.0)));

  std::vector<CameraXf> cams(params.cams);
  for (int c = 0; c < params.cams; ++c) cams[c] = camera_transform(params.seed, c);
  std::vector<OutfitPalette> palettes(params.outfits);
  for (int o = 0; o < params.outfits; ++o) palettes[o] = palette_for_outfit(params.seed, o);

  for (int id = 0; id < params.ids; ++id) {
    const WalkerShape shape = walker_for_identity(params.seed, id);
    const bool is_train = id < train_ids;
    for (int c = 0; c < params.cams; ++c) {
      for (int o = 0; o < params.outfits; ++o) {
        for (int t = 0; t < params.tracks; ++t) {
          // phases are keyed by (id, cam, track) only, so outfits change the
          // colors but never the silhouette
          Rng track_rng(derive_seed(params.seed, "synth/track/" + std::to_string(id) + "_" +
                                                     std::to_string(c) + "_" +
                                                     std::to_string(t)));
          const double phase0 = track_rng.uniform(0.0, kTwoPi);
          for (int f = 0; f < params.frames; ++f) {
            PersonSample sample;
            sample.meta = {id, c, o, t * 1000 + f};
            render_walker_frame(shape, palettes[o], phase0 + f * shape.cadence, cams[c],
                                params.height, params.width, &sample.rgb, &sample.mask);
            if (is_train) {
              out.train.samples.push_back(std::move(sample));
            } else if (t == 0 && f == 0) {
              out.query.samples.push_back(std::move(sample));
            } else {
              out.gallery.samples.push_back(std::move(sample));
            }
          }
        }
      }
    }
  }
  out.train.rebuild_tracks();
  out.query.rebuild_tracks();
  out.gallery.rebuild_tracks();
  return out;
}

}  // namespace gaitreid
