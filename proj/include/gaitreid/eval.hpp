#pragma once

#include <string>
#include <vector>

#include "gaitreid/config.hpp"
#include "gaitreid/dataset.hpp"
#include "gaitreid/models.hpp"

namespace gaitreid {

// Whether a gallery item stays in the candidate list for a query.
// standard:       drop same identity AND same camera
// cloth-changing: additionally drop same identity AND same outfit
// The query's own record is never a candidate.
bool gallery_item_valid(const SampleMeta& query, const SampleMeta& item, Protocol protocol);

std::vector<char> protocol_filter(const SampleMeta& query,
                                  const std::vector<SampleMeta>& gallery,
                                  Protocol protocol);

struct Metrics {
  std::vector<double> cmc;  // cmc[k-1] = CMC@k, k = 1..gallery size
  double mean_ap = 0.0;
  std::vector<double> per_query_ap;  // evaluated queries only
  int evaluated_queries = 0;
  int dropped_queries = 0;  // queries without a valid positive
  long valid_gallery_total = 0;

  bool operator==(const Metrics& other) const {
    return cmc == other.cmc && mean_ap == other.mean_ap &&
           per_query_ap == other.per_query_ap &&
           evaluated_queries == other.evaluated_queries &&
           dropped_queries == other.dropped_queries;
  }
};

// distances: row-major queries x gallery. Ranking sorts valid candidates by
// distance ascending, ties broken by gallery index. CMC@k counts queries whose
// first correct match sits at rank <= k; AP averages precision at each hit.
Metrics cmc_map(const std::vector<double>& distances,
                const std::vector<SampleMeta>& query_meta,
                const std::vector<SampleMeta>& gallery_meta, Protocol protocol);

struct FeatureTable {
  std::vector<SampleMeta> metas;
  Tensor features;  // (n, dim), every row L2-normalized
};

// Per-sample descriptors for the requested inference mode. `gait_invocations`
// counts per-sample gait-stream forward passes and must stay 0 for mode r.
FeatureTable extract_features(const DatasetIndex& split, ModelSet& models,
                              InferenceMode mode, const Config& cfg,
                              long* gait_invocations);

struct EvalReport {
  Metrics metrics;
  std::string protocol;
  std::string mode;
  std::string config_fingerprint;
  int query_count = 0;
  int gallery_count = 0;
  long gait_invocations = 0;

  std::string text() const;
  void write(const std::string& out_dir) const;  // report.txt, cmc.csv, report.json
};

EvalReport evaluate(const DatasetIndex& query, const DatasetIndex& gallery,
                    ModelSet& models, Protocol protocol, InferenceMode mode,
                    const Config& cfg);

}  // namespace gaitreid
