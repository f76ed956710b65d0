#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gaitreid/image.hpp"

namespace gaitreid {

struct SampleMeta {
  int id = 0;
  int cam = 0;
  int outfit = 0;
  int frame = 0;
};

struct PersonSample {
  SampleMeta meta;
  ImageU8 rgb;   // 3-channel
  ImageU8 mask;  // 1-channel, spatially registered to rgb
};

// Samples of one (id, cam, outfit) with consecutive frame numbers.
struct Track {
  int id = 0, cam = 0, outfit = 0;
  std::vector<int> samples;  // indices into DatasetIndex::samples, frame order
};

struct DatasetIndex {
  std::string split;  // train | query | gallery
  std::vector<PersonSample> samples;
  std::vector<Track> tracks;

  void rebuild_tracks();
  std::vector<int> identity_list() const;
  std::map<int, std::vector<int>> samples_by_identity() const;
  std::map<int, std::vector<int>> tracks_by_identity() const;
};

struct DatasetBundle {
  DatasetIndex train, query, gallery;
  long total_samples() const {
    return static_cast<long>(train.samples.size() + query.samples.size() +
                             gallery.samples.size());
  }
};

// --------------------------------------------------------------------------
// Synthetic walking-figure data

struct SynthParams {
  int ids = 8;
  int outfits = 2;
  int cams = 2;
  int tracks = 1;   // per (id, cam, outfit)
  int frames = 8;   // per track
  int height = 128;
  int width = 64;
  std::uint64_t seed = 0;
};

struct WalkerShape {
  double leg_len, arm_len, torso_len, torso_halfw, head_r, neck_len;
  double shoulder_off, hip_off, limb_r, foot_r;
  double stride_amp, arm_amp, cadence, bob_amp;
  double skin[3];
};

struct OutfitPalette {
  double shirt[3], pants[3], shoes[3];
};

struct CameraXf {
  bool flip = false;
  double scale = 1.0;
  double tx = 0.0;  // reference-canvas units
  double ty = 0.0;
  static CameraXf identity() { return {}; }
};

WalkerShape walker_for_identity(std::uint64_t seed, int id);
OutfitPalette palette_for_outfit(std::uint64_t seed, int outfit);
CameraXf camera_transform(std::uint64_t seed, int cam);

// Rasterizes one frame: integer-grid point-in-primitive tests, no
// anti-aliasing. Background is zero in both outputs.
void render_walker_frame(const WalkerShape& shape, const OutfitPalette& palette,
                         double phase, const CameraXf& cam, int h, int w,
                         ImageU8* rgb, ImageU8* mask);

// Identities are partitioned 2:1 into disjoint train/test sets; test samples
// land in query (first frame of each (id,cam,outfit)) or gallery (the rest).
DatasetBundle generate_synthetic_dataset(const SynthParams& params);

// --------------------------------------------------------------------------
// Directory layout: <root>/{train,query,gallery}/rgb/*.png (+ parallel
// masks/*.png), names <id4>_c<cam>_o<outfit>_f<frame>.png.

std::string sample_filename(const SampleMeta& m);
SampleMeta parse_sample_filename(const std::string& name);

void write_split(const DatasetIndex& index, const std::string& split_dir);
void write_dataset(const DatasetBundle& data, const std::string& root, bool overwrite);

DatasetIndex ingest_directory(const std::string& split_dir);  // expects rgb/ + masks/
DatasetBundle ingest_dataset_root(const std::string& root);

}  // namespace gaitreid
