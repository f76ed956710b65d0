#pragma once

#include <map>
#include <string>
#include <vector>

namespace gaitreid {

// Snapshot of one component's named parameter arrays, float32.
// Persisted as a directory: manifest.json plus one raw little-endian
// float32 file per array (<name>.f32le).
struct ModelState {
  std::string component;  // gsp | gaitnet | reid | sc
  std::string version = "1";
  std::string config_fingerprint;

  struct Array {
    std::vector<int> shape;
    std::vector<float> values;
  };
  std::map<std::string, Array> arrays;
};

void save_checkpoint(const ModelState& state, const std::string& dir);

struct LoadOptions {
  // Empty string skips the fingerprint comparison.
  std::string expect_fingerprint;
  // With a mismatched fingerprint, load aborts unless this is set; a warning
  // is printed either way.
  bool allow_fingerprint_mismatch = false;
};

ModelState load_checkpoint(const std::string& dir, const LoadOptions& opts = {});

}  // namespace gaitreid
