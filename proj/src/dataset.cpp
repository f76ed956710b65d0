#include "gaitreid/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>

namespace gaitreid {

namespace fs = std::filesystem;

void DatasetIndex::rebuild_tracks() {
  tracks.clear();
  std::map<std::tuple<int, int, int>, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    const auto& m = samples[i].meta;
    groups[{m.id, m.cam, m.outfit}].push_back(i);
  }
  for (auto& [key, idxs] : groups) {
    std::sort(idxs.begin(), idxs.end(), [&](int a, int b) {
      return samples[a].meta.frame < samples[b].meta.frame;
    });
    Track cur;
    cur.id = std::get<0>(key);
    cur.cam = std::get<1>(key);
    cur.outfit = std::get<2>(key);
    for (std::size_t j = 0; j < idxs.size(); ++j) {
      if (!cur.samples.empty() &&
          samples[idxs[j]].meta.frame != samples[cur.samples.back()].meta.frame + 1) {
        tracks.push_back(cur);
        cur.samples.clear();
      }
      cur.samples.push_back(idxs[j]);
    }
    if (!cur.samples.empty()) tracks.push_back(cur);
  }
}

std::vector<int> DatasetIndex::identity_list() const {
  std::set<int> ids;
  for (const auto& s : samples) ids.insert(s.meta.id);
  return {ids.begin(), ids.end()};
}

std::map<int, std::vector<int>> DatasetIndex::samples_by_identity() const {
  std::map<int, std::vector<int>> out;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i)
    out[samples[i].meta.id].push_back(i);
  return out;
}

std::map<int, std::vector<int>> DatasetIndex::tracks_by_identity() const {
  std::map<int, std::vector<int>> out;
  for (int i = 0; i < static_cast<int>(tracks.size()); ++i)
    out[tracks[i].id].push_back(i);
  return out;
}

std::string sample_filename(const SampleMeta& m) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d_c%d_o%d_f%03d.png", m.id, m.cam, m.outfit, m.frame);
  return buf;
}

SampleMeta parse_sample_filename(const std::string& name) {
  SampleMeta m;
  int consumed = 0;
  if (std::sscanf(name.c_str(), "%d_c%d_o%d_f%d.png%n", &m.id, &m.cam, &m.outfit, &m.frame,
                  &consumed) != 4 ||
      consumed != static_cast<int>(name.size()))
    throw std::runtime_error("dataset: unparseable sample name '" + name +
                             "' (expected <id4>_c<cam>_o<outfit>_f<frame>.png)");
  if (m.id < 0 || m.cam < 0 || m.outfit < 0 || m.frame < 0)
    throw std::runtime_error("dataset: negative field in sample name '" + name + "'");
  return m;
}

void write_split(const DatasetIndex& index, const std::string& split_dir) {
  fs::create_directories(fs::path(split_dir) / "rgb");
  fs::create_directories(fs::path(split_dir) / "masks");
  for (const auto& s : index.samples) {
    const auto name = sample_filename(s.meta);
    write_png((fs::path(split_dir) / "rgb" / name).string(), s.rgb);
    write_png((fs::path(split_dir) / "masks" / name).string(), s.mask);
  }
}

void write_dataset(const DatasetBundle& data, const std::string& root, bool overwrite) {
  if (fs::exists(root) && !fs::is_empty(root) && !overwrite)
    throw std::runtime_error("dataset: output directory '" + root +
                             "' is not empty (pass --overwrite to replace it)");
  write_split(data.train, (fs::path(root) / "train").string());
  write_split(data.query, (fs::path(root) / "query").string());
  write_split(data.gallery, (fs::path(root) / "gallery").string());
}

DatasetIndex ingest_directory(const std::string& split_dir) {
  const fs::path rgb_dir = fs::path(split_dir) / "rgb";
  const fs::path mask_dir = fs::path(split_dir) / "masks";
  if (!fs::is_directory(rgb_dir))
    throw std::runtime_error("dataset: missing directory '" + rgb_dir.string() + "'");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(rgb_dir)) {
    if (entry.path().extension() == ".png") names.push_back(entry.path().filename().string());
  }
  if (names.empty())
    throw std::runtime_error("dataset: no .png files under '" + rgb_dir.string() + "'");
  std::sort(names.begin(), names.end());

  DatasetIndex index;
  index.split = fs::path(split_dir).filename().string();
  for (const auto& name : names) {
    PersonSample s;
    s.meta = parse_sample_filename(name);
    const fs::path mask_path = mask_dir / name;
    if (!fs::exists(mask_path))
      throw std::runtime_error("dataset: rgb file '" + (rgb_dir / name).string() +
                               "' has no matching mask '" + mask_path.string() + "'");
    s.rgb = read_png((rgb_dir / name).string());
    if (s.rgb.channels != 3)
      throw std::runtime_error("dataset: rgb file '" + (rgb_dir / name).string() +
                               "' is not 3-channel");
    s.mask = read_png(mask_path.string());
    if (s.mask.channels != 1)
      throw std::runtime_error("dataset: mask file '" + mask_path.string() +
                               "' is not single-channel");
    if (s.mask.h != s.rgb.h || s.mask.w != s.rgb.w)
      throw std::runtime_error("dataset: mask '" + mask_path.string() +
                               "' is not registered to its rgb image");
    index.samples.push_back(std::move(s));
  }
  index.rebuild_tracks();
  return index;
}

DatasetBundle ingest_dataset_root(const std::string& root) {
  DatasetBundle out;
  bool any = false;
  for (const char* split : {"train", "query", "gallery"}) {
    const fs::path dir = fs::path(root) / split;
    if (!fs::is_directory(dir)) continue;
    DatasetIndex idx = ingest_directory(dir.string());
    idx.split = split;
    any = true;
    if (std::string(split) == "train")
      out.train = std::move(idx);
    else if (std::string(split) == "query")
      out.query = std::move(idx);
    else
      out.gallery = std::move(idx);
  }
  if (!any)
    throw std::runtime_error("dataset: no train/query/gallery splits under '" + root + "'");
  return out;
}

}  // namespace gaitreid
