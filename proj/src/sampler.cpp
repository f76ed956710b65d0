#include "gaitreid/sampler.hpp"

#include <stdexcept>

namespace gaitreid {

namespace {

// Distinct identity draw shared by the samplers: shuffle-and-take-P.
std::vector<int> draw_identities(Rng& rng, std::vector<int> ids, int p) {
  rng.shuffle(ids);
  ids.resize(static_cast<std::size_t>(p));
  return ids;
}

}  // namespace

PkSampler::PkSampler(const DatasetIndex& index, int p, int k, std::uint64_t seed,
                     bool fallback)
    : index_(index), p_(p), k_(k), fallback_(fallback), rng_(seed) {
  if (p < 1 || k < 1) throw std::invalid_argument("pk_sample: P and K must be >= 1");
  auto by_id = index.samples_by_identity();
  for (auto& [id, idxs] : by_id) {
    ids_.push_back(id);
    id_samples_.push_back(idxs);
  }
  if (static_cast<int>(ids_.size()) < p)
    throw std::runtime_error("pk_sample: dataset has " + std::to_string(ids_.size()) +
                             " identities but P=" + std::to_string(p));
  if (!fallback_) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (static_cast<int>(id_samples_[i].size()) < k)
        throw std::runtime_error("pk_sample: identity " + std::to_string(ids_[i]) + " has " +
                                 std::to_string(id_samples_[i].size()) +
                                 " samples but K=" + std::to_string(k) +
                                 " and the with-replacement fallback is disabled");
    }
  }
}

std::vector<int> PkSampler::next() {
  std::vector<int> order(ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng_.shuffle(order);
  std::vector<int> batch;
  batch.reserve(static_cast<std::size_t>(p_) * k_);
  for (int pi = 0; pi < p_; ++pi) {
    const auto& pool = id_samples_[order[pi]];
    if (static_cast<int>(pool.size()) >= k_) {
      std::vector<int> picks = pool;
      rng_.shuffle(picks);
      for (int j = 0; j < k_; ++j) batch.push_back(picks[j]);
    } else {
      // repeat this identity's samples until K are filled
      for (int j = 0; j < k_; ++j)
        batch.push_back(pool[rng_.uniform_int(pool.size())]);
    }
  }
  return batch;
}

std::vector<int> pk_sample(const DatasetIndex& index, int p, int k, std::uint64_t seed,
                           bool fallback) {
  return PkSampler(index, p, k, seed, fallback).next();
}

SetSampler::SetSampler(const DatasetIndex& index, int p, int k, int set_size,
                       std::uint64_t seed)
    : index_(index), p_(p), k_(k), set_size_(set_size), rng_(seed) {
  auto by_id = index.tracks_by_identity();
  for (auto& [id, tracks] : by_id) {
    ids_.push_back(id);
    id_tracks_.push_back(tracks);
  }
  if (static_cast<int>(ids_.size()) < p)
    throw std::runtime_error("set sampler: dataset has " + std::to_string(ids_.size()) +
                             " identities but P=" + std::to_string(p));
}

std::vector<std::vector<int>> SetSampler::next() {
  std::vector<int> order(ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng_.shuffle(order);
  std::vector<std::vector<int>> batch;
  for (int pi = 0; pi < p_; ++pi) {
    const auto& tracks = id_tracks_[order[pi]];
    for (int ki = 0; ki < k_; ++ki) {
      const Track& track = index_.tracks[tracks[rng_.uniform_int(tracks.size())]];
      std::vector<int> set(static_cast<std::size_t>(set_size_));
      for (int j = 0; j < set_size_; ++j)
        set[j] = track.samples[rng_.uniform_int(track.samples.size())];
      batch.push_back(std::move(set));
    }
  }
  return batch;
}

WindowSampler::WindowSampler(const DatasetIndex& index, int p, int k, int window,
                             std::uint64_t seed)
    : index_(index), p_(p), k_(k), window_(window), rng_(seed) {
  auto by_id = index.tracks_by_identity();
  for (auto& [id, tracks] : by_id) {
    std::vector<int> usable;
    for (int t : tracks)
      if (static_cast<int>(index.tracks[t].samples.size()) >= window) usable.push_back(t);
    if (!usable.empty()) {
      ids_.push_back(id);
      id_tracks_.push_back(std::move(usable));
    }
  }
  if (static_cast<int>(ids_.size()) < p)
    throw std::runtime_error("window sampler: only " + std::to_string(ids_.size()) +
                             " identities have tracks of >= " + std::to_string(window) +
                             " frames but P=" + std::to_string(p));
}

std::vector<std::vector<int>> WindowSampler::next() {
  std::vector<int> order(ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng_.shuffle(order);
  std::vector<std::vector<int>> batch;
  for (int pi = 0; pi < p_; ++pi) {
    const auto& tracks = id_tracks_[order[pi]];
    for (int ki = 0; ki < k_; ++ki) {
      const Track& track = index_.tracks[tracks[rng_.uniform_int(tracks.size())]];
      const int max_start = static_cast<int>(track.samples.size()) - window_;
      const int start = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(max_start) + 1));
      std::vector<int> win(static_cast<std::size_t>(window_));
      for (int j = 0; j < window_; ++j) win[j] = track.samples[start + j];
      batch.push_back(std::move(win));
    }
  }
  return batch;
}

}  // namespace gaitreid
