#include "gaitreid/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

namespace gaitreid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

long numel(const std::vector<int>& shape) {
  long n = 1;
  for (int d : shape) n *= d;
  return n;
}

void write_f32le(const std::string& path, const std::vector<float>& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  std::vector<unsigned char> bytes(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &v[i], 4);
    bytes[4 * i + 0] = static_cast<unsigned char>(u & 0xFF);
    bytes[4 * i + 1] = static_cast<unsigned char>((u >> 8) & 0xFF);
    bytes[4 * i + 2] = static_cast<unsigned char>((u >> 16) & 0xFF);
    bytes[4 * i + 3] = static_cast<unsigned char>((u >> 24) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint: short write to '" + path + "'");
}

std::vector<float> read_f32le(const std::string& path, long expect_count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("checkpoint: missing array file '" + path + "'");
  const auto size = static_cast<long>(in.tellg());
  if (size != expect_count * 4)
    throw std::runtime_error("checkpoint: corrupted array file '" + path + "' (expected " +
                             std::to_string(expect_count * 4) + " bytes, found " +
                             std::to_string(size) + ")");
  in.seekg(0);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw std::runtime_error("checkpoint: short read from '" + path + "'");
  std::vector<float> v(static_cast<std::size_t>(expect_count));
  for (long i = 0; i < expect_count; ++i) {
    std::uint32_t u = std::uint32_t(bytes[4 * i]) | (std::uint32_t(bytes[4 * i + 1]) << 8) |
                      (std::uint32_t(bytes[4 * i + 2]) << 16) |
                      (std::uint32_t(bytes[4 * i + 3]) << 24);
    std::memcpy(&v[i], &u, 4);
  }
  return v;
}

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["component"] = state.component;
  manifest["version"] = state.version;
  manifest["config_fingerprint"] = state.config_fingerprint;
  json arrays = json::array();
  for (const auto& [name, arr] : state.arrays) {
    if (numel(arr.shape) != static_cast<long>(arr.values.size()))
      throw std::runtime_error("checkpoint: array '" + name + "' shape does not match size");
    json a;
    a["name"] = name;
    a["shape"] = arr.shape;
    a["file"] = name + ".f32le";
    arrays.push_back(a);
    write_f32le((fs::path(dir) / (name + ".f32le")).string(), arr.values);
  }
  manifest["arrays"] = arrays;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("checkpoint: cannot write manifest in '" + dir + "'");
  out << manifest.dump(2) << "\n";
}

ModelState load_checkpoint(const std::string& dir, const LoadOptions& opts) {
  const auto manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("checkpoint: missing manifest '" + manifest_path.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: corrupted manifest '" + manifest_path.string() +
                             "': " + e.what());
  }
  ModelState state;
  state.component = manifest.at("component").get<std::string>();
  state.version = manifest.at("version").get<std::string>();
  state.config_fingerprint = manifest.at("config_fingerprint").get<std::string>();
  if (state.version != "1")
    throw std::runtime_error("checkpoint: unsupported version '" + state.version + "'");
  if (!opts.expect_fingerprint.empty() &&
      opts.expect_fingerprint != state.config_fingerprint) {
    std::cerr << "warning: checkpoint '" << dir << "' was written under config fingerprint "
              << state.config_fingerprint << " but the current config is "
              << opts.expect_fingerprint << "\n";
    if (!opts.allow_fingerprint_mismatch)
      throw std::runtime_error(
          "checkpoint: config fingerprint mismatch (pass the override flag to load anyway)");
  }
  for (const auto& a : manifest.at("arrays")) {
    const auto name = a.at("name").get<std::string>();
    ModelState::Array arr;
    arr.shape = a.at("shape").get<std::vector<int>>();
    const auto file = a.at("file").get<std::string>();
    arr.values = read_f32le((fs::path(dir) / file).string(), numel(arr.shape));
    if (!state.arrays.emplace(name, std::move(arr)).second)
      throw std::runtime_error("checkpoint: duplicate array name '" + name + "'");
  }
  return state;
}

}  // namespace gaitreid
