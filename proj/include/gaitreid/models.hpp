#pragma once

#include <memory>
#include <string>

#include "gaitreid/config.hpp"
#include "gaitreid/gaitnet.hpp"
#include "gaitreid/gsp.hpp"
#include "gaitreid/reid.hpp"
#include "gaitreid/sc.hpp"

namespace gaitreid {

GspNet::Options gsp_options(const Config& cfg);
GaitNet::Options gaitnet_options(const Config& cfg);
ReidNet::Options reid_options(const Config& cfg, int num_classes);
ScNet::Options sc_options(const Config& cfg);

// The components one run works with; absent components stay null.
struct ModelSet {
  std::unique_ptr<GspNet> gsp;
  std::unique_ptr<GaitNet> gaitnet;
  std::unique_ptr<ReidNet> reid;
  std::unique_ptr<ScNet> sc;

  static std::unique_ptr<GspNet> make_gsp(const Config& cfg, Rng& rng);
  static std::unique_ptr<GaitNet> make_gaitnet(const Config& cfg, Rng& rng);
  static std::unique_ptr<ReidNet> make_reid(const Config& cfg, int num_classes, Rng& rng);
  static std::unique_ptr<ScNet> make_sc(const Config& cfg, Rng& rng);

  // Loads <root>/<component> checkpoints; each loader reconstructs the
  // architecture from the Config (the classifier width comes from the
  // checkpoint itself).
  void load_gsp(const Config& cfg, const std::string& dir, bool allow_mismatch = false);
  void load_gaitnet(const Config& cfg, const std::string& dir, bool allow_mismatch = false);
  void load_reid(const Config& cfg, const std::string& dir, bool allow_mismatch = false);
  void load_sc(const Config& cfg, const std::string& dir, bool allow_mismatch = false);
};

}  // namespace gaitreid
