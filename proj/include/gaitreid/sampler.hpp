#pragma once

#include <cstdint>
#include <vector>

#include "gaitreid/dataset.hpp"
#include "gaitreid/rng.hpp"

namespace gaitreid {

// P distinct identities x K samples each. Deterministic for a given seed;
// successive next() calls advance the stream. When an identity holds fewer
// than K samples, the with-replacement fallback repeats its samples (or the
// sampler refuses to construct when the fallback is disabled).
class PkSampler {
 public:
  PkSampler(const DatasetIndex& index, int p, int k, std::uint64_t seed,
            bool fallback = true);
  std::vector<int> next();  // P*K sample indices, grouped by identity

 private:
  const DatasetIndex& index_;
  int p_, k_;
  bool fallback_;
  Rng rng_;
  std::vector<int> ids_;
  std::vector<std::vector<int>> id_samples_;
};

std::vector<int> pk_sample(const DatasetIndex& index, int p, int k, std::uint64_t seed,
                           bool fallback = true);

// P identities x K frame-sets of a fixed cardinality, drawn inside one track.
class SetSampler {
 public:
  SetSampler(const DatasetIndex& index, int p, int k, int set_size, std::uint64_t seed);
  // Batch of P*K sets; each entry lists `set_size` sample indices.
  std::vector<std::vector<int>> next();

 private:
  const DatasetIndex& index_;
  int p_, k_, set_size_;
  Rng rng_;
  std::vector<int> ids_;
  std::vector<std::vector<int>> id_tracks_;
};

// P identities x K contiguous windows of `window` frames from one track.
class WindowSampler {
 public:
  WindowSampler(const DatasetIndex& index, int p, int k, int window, std::uint64_t seed);
  std::vector<std::vector<int>> next();  // each entry is `window` ordered sample indices

 private:
  const DatasetIndex& index_;
  int p_, k_, window_;
  Rng rng_;
  std::vector<int> ids_;
  std::vector<std::vector<int>> id_tracks_;  // tracks with >= window frames
};

}  // namespace gaitreid
