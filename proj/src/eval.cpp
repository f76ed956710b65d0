#include "gaitreid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gaitreid/preprocess.hpp"

namespace gaitreid {

namespace fs = std::filesystem;

bool gallery_item_valid(const SampleMeta& query, const SampleMeta& item, Protocol protocol) {
  if (query.id == item.id && query.cam == item.cam && query.outfit == item.outfit &&
      query.frame == item.frame)
    return false;  // the query's own record
  if (query.id == item.id && query.cam == item.cam) return false;
  if (protocol == Protocol::ClothChanging && query.id == item.id &&
      query.outfit == item.outfit)
    return false;
  return true;
}

std::vector<char> protocol_filter(const SampleMeta& query,
                                  const std::vector<SampleMeta>& gallery,
                                  Protocol protocol) {
  std::vector<char> mask(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i)
    mask[i] = gallery_item_valid(query, gallery[i], protocol) ? 1 : 0;
  return mask;
}

Metrics cmc_map(const std::vector<double>& distances,
                const std::vector<SampleMeta>& query_meta,
                const std::vector<SampleMeta>& gallery_meta, Protocol protocol) {
  const std::size_t nq = query_meta.size(), ng = gallery_meta.size();
  if (distances.size() != nq * ng)
    throw std::invalid_argument("cmc_map: distance matrix shape mismatch");
  Metrics m;
  m.cmc.assign(ng, 0.0);
  std::vector<int> order;
  for (std::size_t q = 0; q < nq; ++q) {
    const auto valid = protocol_filter(query_meta[q], gallery_meta, protocol);
    order.clear();
    bool has_positive = false;
    for (std::size_t gi = 0; gi < ng; ++gi) {
      if (!valid[gi]) continue;
      order.push_back(static_cast<int>(gi));
      if (gallery_meta[gi].id == query_meta[q].id) has_positive = true;
    }
    if (!has_positive) {
      ++m.dropped_queries;
      continue;
    }
    m.valid_gallery_total += static_cast<long>(order.size());
    const double* row = distances.data() + q * ng;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return row[a] < row[b]; });
    int first_correct = -1;
    int hits = 0;
    double ap = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (gallery_meta[static_cast<std::size_t>(order[rank])].id == query_meta[q].id) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        if (first_correct < 0) first_correct = static_cast<int>(rank);
      }
    }
    ap /= hits;
    m.per_query_ap.push_back(ap);
    ++m.evaluated_queries;
    for (std::size_t k = static_cast<std::size_t>(first_correct); k < ng; ++k) m.cmc[k] += 1.0;
  }
  if (m.evaluated_queries == 0)
    throw std::runtime_error("cmc_map: no valid positives under protocol");
  for (double& v : m.cmc) v /= m.evaluated_queries;
  m.mean_ap = std::accumulate(m.per_query_ap.begin(), m.per_query_ap.end(), 0.0) /
              m.per_query_ap.size();
  return m;
}

namespace {

void l2_normalize_rows(Tensor& t) {
  const int n = t.dim(0), d = t.dim(1);
  for (int i = 0; i < n; ++i) {
    double* row = t.data() + static_cast<long>(i) * d;
    double norm = 0.0;
    for (int j = 0; j < d; ++j) norm += row[j] * row[j];
    norm = std::sqrt(norm);
    if (norm > 1e-12)
      for (int j = 0; j < d; ++j) row[j] /= norm;
  }
}

Tensor reid_input_batch(const DatasetIndex& split, const std::vector<int>& idxs,
                        const Config& cfg) {
  const int bsz = static_cast<int>(idxs.size());
  const int ch = cfg.reid_in_channels;
  Tensor batch({bsz, ch, cfg.image_height, cfg.image_width});
  for (int b = 0; b < bsz; ++b) {
    const auto& s = split.samples[static_cast<std::size_t>(idxs[b])];
    if (s.rgb.h != cfg.image_height || s.rgb.w != cfg.image_width)
      throw std::runtime_error("evaluate: sample resolution does not match the config");
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < s.rgb.h; ++y)
        for (int x = 0; x < s.rgb.w; ++x) batch.at4(b, c, y, x) = s.rgb.at(y, x, c) / 255.0;
    if (ch == 4)
      for (int y = 0; y < s.mask.h; ++y)
        for (int x = 0; x < s.mask.w; ++x) batch.at4(b, 3, y, x) = s.mask.at(y, x, 0) / 255.0;
  }
  return batch;
}

Tensor silhouette_batch(const DatasetIndex& split, const std::vector<int>& idxs) {
  const int bsz = static_cast<int>(idxs.size());
  Tensor batch({bsz, 1, kGaitFrame, kGaitFrame});
  for (int b = 0; b < bsz; ++b) {
    const Tensor sil = preprocess_mask(split.samples[static_cast<std::size_t>(idxs[b])].mask);
    std::copy(sil.data(), sil.data() + sil.numel(),
              batch.data() + static_cast<long>(b) * kGaitFrame * kGaitFrame);
  }
  return batch;
}

void require_component(const void* p, const char* name, InferenceMode mode) {
  if (!p)
    throw std::runtime_error("extract_features: mode '" + to_string(mode) +
                             "' needs the " + std::string(name) +
                             " component but no checkpoint was loaded");
}

}  // namespace

FeatureTable extract_features(const DatasetIndex& split, ModelSet& models,
                              InferenceMode mode, const Config& cfg,
                              long* gait_invocations) {
  const bool needs_reid = mode != InferenceMode::GaitOnly;
  const bool needs_gait = mode == InferenceMode::GaitOnly ||
                          mode == InferenceMode::EmbeddedSum ||
                          mode == InferenceMode::ReconSum || mode == InferenceMode::ConcatRG;
  const bool needs_sc = mode == InferenceMode::EmbeddedSum ||
                        mode == InferenceMode::ReconSum || mode == InferenceMode::ReconR;
  if (needs_reid) require_component(models.reid.get(), "reid", mode);
  // Without a GSP checkpoint the gait stream falls back to duplicating the
  // single silhouette N times (the no-prediction concat variant).
  if (needs_gait) require_component(models.gaitnet.get(), "gaitnet", mode);
  if (needs_sc) require_component(models.sc.get(), "sc", mode);

  FeatureTable table;
  const int n = static_cast<int>(split.samples.size());
  const int chunk = 16;
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int start = 0; start < n; start += chunk) {
    std::vector<int> idxs;
    for (int i = start; i < std::min(n, start + chunk); ++i) idxs.push_back(i);
    const int bsz = static_cast<int>(idxs.size());

    Tensor r, g;
    if (needs_reid) r = models.reid->forward(reid_input_batch(split, idxs, cfg), false).r;
    if (needs_gait) {
      Tensor sil = silhouette_batch(split, idxs);
      Tensor frames;
      if (models.gsp) {
        frames = models.gsp->forward(sil, false).pred;
        if (gait_invocations) *gait_invocations += bsz;
      } else {
        frames = Tensor({bsz, cfg.n_pred, kGaitFrame, kGaitFrame});
        const long plane = static_cast<long>(kGaitFrame) * kGaitFrame;
        for (int b = 0; b < bsz; ++b)
          for (int f = 0; f < cfg.n_pred; ++f)
            std::copy(sil.data() + b * plane, sil.data() + (b + 1) * plane,
                      frames.data() + (static_cast<long>(b) * cfg.n_pred + f) * plane);
      }
      g = models.gaitnet->forward(frames).g;
      if (gait_invocations) *gait_invocations += bsz;
    }

    Tensor feat;
    switch (mode) {
      case InferenceMode::R: feat = r; break;
      case InferenceMode::GaitOnly: feat = g; break;
      case InferenceMode::EmbeddedSum: {
        auto emb = models.sc->embed(r, g);
        feat = emb.r_hat;
        add_into(feat, emb.g_hat);
        break;
      }
      case InferenceMode::ReconSum: {
        auto emb = models.sc->embed(r, g);
        auto rec = models.sc->reconstruct(emb.r_hat, emb.g_hat);
        // dimensions differ in general; the fused descriptor concatenates
        // both reconstructions when they cannot be summed elementwise
        if (rec.r_tilde.dim(1) == rec.g_tilde.dim(1)) {
          feat = rec.r_tilde;
          add_into(feat, rec.g_tilde);
        } else {
          feat = Tensor({bsz, rec.r_tilde.dim(1) + rec.g_tilde.dim(1)});
          for (int b = 0; b < bsz; ++b) {
            for (int j = 0; j < rec.r_tilde.dim(1); ++j) feat.at2(b, j) = rec.r_tilde.at2(b, j);
            for (int j = 0; j < rec.g_tilde.dim(1); ++j)
              feat.at2(b, rec.r_tilde.dim(1) + j) = rec.g_tilde.at2(b, j);
          }
        }
        break;
      }
      case InferenceMode::ReconR: {
        Tensor r_hat = models.sc->embed_r(r);
        feat = models.sc->recon_r(r_hat);
        break;
      }
      case InferenceMode::ConcatRG: {
        feat = Tensor({bsz, r.dim(1) + g.dim(1)});
        for (int b = 0; b < bsz; ++b) {
          for (int j = 0; j < r.dim(1); ++j) feat.at2(b, j) = r.at2(b, j);
          for (int j = 0; j < g.dim(1); ++j) feat.at2(b, r.dim(1) + j) = g.at2(b, j);
        }
        break;
      }
    }
    for (int b = 0; b < bsz; ++b) {
      table.metas.push_back(split.samples[static_cast<std::size_t>(idxs[b])].meta);
      Tensor row({1, feat.dim(1)});
      for (int j = 0; j < feat.dim(1); ++j) row.at2(0, j) = feat.at2(b, j);
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) throw std::runtime_error("extract_features: empty split");
  table.features = Tensor({static_cast<int>(rows.size()), rows[0].dim(1)});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < rows[i].dim(1); ++j)
      table.features.at2(static_cast<int>(i), j) = rows[i].at2(0, j);
  l2_normalize_rows(table.features);
  return table;
}

std::string EvalReport::text() const {
  std::ostringstream os;
  os << "protocol: " << protocol << "\n";
  os << "mode: " << mode << "\n";
  os << "config_fingerprint: " << config_fingerprint << "\n";
  os << "queries: " << query_count << " (evaluated " << metrics.evaluated_queries
     << ", dropped " << metrics.dropped_queries << ")\n";
  os << "gallery: " << gallery_count << "\n";
  os << "gait_stream_invocations: " << gait_invocations << "\n";
  auto rank = [&](int k) {
    return metrics.cmc.empty()
               ? 0.0
               : metrics.cmc[std::min<std::size_t>(k - 1, metrics.cmc.size() - 1)];
  };
  os << "rank1: " << rank(1) << "\n";
  os << "rank5: " << rank(5) << "\n";
  os << "rank10: " << rank(10) << "\n";
  os << "rank20: " << rank(20) << "\n";
  os << "mAP: " << metrics.mean_ap << "\n";
  return os.str();
}

void EvalReport::write(const std::string& out_dir) const {
  fs::create_directories(out_dir);
  {
    std::ofstream txt(fs::path(out_dir) / "report.txt");
    txt << text();
  }
  {
    std::ofstream csv(fs::path(out_dir) / "cmc.csv");
    csv << "rank,cmc\n";
    csv.precision(17);
    for (std::size_t k = 0; k < metrics.cmc.size(); ++k)
      csv << (k + 1) << "," << metrics.cmc[k] << "\n";
    csv << "map," << metrics.mean_ap << "\n";
  }
  {
    nlohmann::json j;
    j["protocol"] = protocol;
    j["mode"] = mode;
    j["config_fingerprint"] = config_fingerprint;
    j["query_count"] = query_count;
    j["gallery_count"] = gallery_count;
    j["evaluated_queries"] = metrics.evaluated_queries;
    j["dropped_queries"] = metrics.dropped_queries;
    j["gait_stream_invocations"] = gait_invocations;
    j["cmc"] = metrics.cmc;
    j["map"] = metrics.mean_ap;
    std::ofstream out(fs::path(out_dir) / "report.json");
    out << j.dump(2) << "\n";
  }
}

EvalReport evaluate(const DatasetIndex& query, const DatasetIndex& gallery,
                    ModelSet& models, Protocol protocol, InferenceMode mode,
                    const Config& cfg) {
  long gait_invocations = 0;
  FeatureTable qf = extract_features(query, models, mode, cfg, &gait_invocations);
  FeatureTable gf = extract_features(gallery, models, mode, cfg, &gait_invocations);
  const int nq = qf.features.dim(0), ng = gf.features.dim(0), d = qf.features.dim(1);
  std::vector<double> dist(static_cast<std::size_t>(nq) * ng);
  for (int q = 0; q < nq; ++q) {
    const double* qr = qf.features.data() + static_cast<long>(q) * d;
    for (int g = 0; g < ng; ++g) {
      const double* gr = gf.features.data() + static_cast<long>(g) * d;
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = qr[j] - gr[j];
        acc += diff * diff;
      }
      dist[static_cast<std::size_t>(q) * ng + g] = std::sqrt(acc);
    }
  }
  EvalReport report;
  report.metrics = cmc_map(dist, qf.metas, gf.metas, protocol);
  report.protocol = to_string(protocol);
  report.mode = to_string(mode);
  report.config_fingerprint = cfg.fingerprint();
  report.query_count = nq;
  report.gallery_count = ng;
  report.gait_invocations = gait_invocations;
  return report;
}

}  // namespace gaitreid
