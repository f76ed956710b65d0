#include <doctest.h>

#include "gaitreid/eval.hpp"
#include "gaitreid/rng.hpp"
#include "gaitreid/trainer.hpp"
#include "reference_metrics.hpp"

using namespace gaitreid;

TEST_CASE("protocol filter reproduces the worked exclusion decisions") {
  const SampleMeta query{5, 2, 1, 0};
  const std::vector<SampleMeta> gallery{
      {5, 2, 3, 10},  // same id, same cam -> excluded under both protocols
      {5, 1, 1, 11},  // same id, same outfit -> excluded only when cloth-changing
      {7, 2, 1, 12},  // different identity -> always a candidate
      {5, 1, 2, 13},  // same id, different cam+outfit -> the true cloth-changed match
      {5, 2, 1, 0},   // the query's own record
      {9, 0, 0, 14},
  };
  const auto std_mask = protocol_filter(query, gallery, Protocol::Standard);
  CHECK(std_mask == std::vector<char>{0, 1, 1, 1, 0, 1});
  const auto cc_mask = protocol_filter(query, gallery, Protocol::ClothChanging);
  CHECK(cc_mask == std::vector<char>{0, 0, 1, 1, 0, 1});
}

TEST_CASE("single query AP: hits at ranks 1 and 3 give 5/6") {
  const std::vector<SampleMeta> qm{{1, 0, 0, 0}};
  const std::vector<SampleMeta> gm{
      {1, 1, 0, 1}, {2, 1, 0, 2}, {1, 2, 0, 3}, {3, 1, 0, 4}};
  const std::vector<double> dist{0.1, 0.2, 0.3, 0.4};
  const Metrics m = cmc_map(dist, qm, gm, Protocol::Standard);
  CHECK(m.evaluated_queries == 1);
  CHECK(m.per_query_ap[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
  CHECK(m.mean_ap == doctest::Approx(0.833333333333).epsilon(1e-9));
  CHECK(m.cmc[0] == doctest::Approx(1.0));
}

TEST_CASE("two queries with first hits at ranks 1 and 3") {
  const std::vector<SampleMeta> qm{{1, 0, 0, 0}, {2, 0, 0, 0}};
  const std::vector<SampleMeta> gm{
      {1, 1, 0, 1}, {3, 1, 0, 2}, {4, 1, 0, 3}, {2, 1, 0, 4}};
  // query 1: its match is nearest (rank 1); query 2: two impostors first (rank 3)
  const std::vector<double> dist{
      0.1, 0.5, 0.6, 0.9,   // query 1
      0.8, 0.2, 0.3, 0.7};  // query 2
  const Metrics m = cmc_map(dist, qm, gm, Protocol::Standard);
  CHECK(m.cmc[0] == doctest::Approx(0.5));
  CHECK(m.cmc[2] == doctest::Approx(1.0));
}

TEST_CASE("identity-perfect features score 1.0 everywhere") {
  std::vector<SampleMeta> qm, gm;
  for (int id = 0; id < 4; ++id) {
    qm.push_back({id, 0, 0, 0});
    gm.push_back({id, 1, 1, 1});
    gm.push_back({id, 2, 2, 2});
  }
  std::vector<double> dist(qm.size() * gm.size());
  for (std::size_t q = 0; q < qm.size(); ++q)
    for (std::size_t g = 0; g < gm.size(); ++g)
      dist[q * gm.size() + g] = qm[q].id == gm[g].id ? 0.0 : 1.0;
  const Metrics m = cmc_map(dist, qm, gm, Protocol::ClothChanging);
  CHECK(m.cmc[0] == doctest::Approx(1.0));
  CHECK(m.mean_ap == doctest::Approx(1.0));
}

TEST_CASE("cmc is monotone and map stays within [0,1]") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int nq = 2 + static_cast<int>(rng.uniform_int(4));
    const int ng = 6 + static_cast<int>(rng.uniform_int(10));
    std::vector<SampleMeta> qm, gm;
    for (int i = 0; i < nq; ++i)
      qm.push_back({static_cast<int>(rng.uniform_int(3)), static_cast<int>(rng.uniform_int(2)),
                    static_cast<int>(rng.uniform_int(2)), i});
    for (int i = 0; i < ng; ++i)
      gm.push_back({static_cast<int>(rng.uniform_int(3)),
                    2 + static_cast<int>(rng.uniform_int(2)),
                    2 + static_cast<int>(rng.uniform_int(2)), 100 + i});
    std::vector<double> dist(static_cast<std::size_t>(nq) * ng);
    for (auto& d : dist) d = rng.uniform();
    Metrics m;
    try {
      m = cmc_map(dist, qm, gm, Protocol::Standard);
    } catch (const std::runtime_error&) {
      continue;  // all queries dropped in this draw
    }
    CHECK(m.mean_ap >= 0.0);
    CHECK(m.mean_ap <= 1.0);
    for (std::size_t k = 1; k < m.cmc.size(); ++k) CHECK(m.cmc[k] >= m.cmc[k - 1]);
  }
}

TEST_CASE("cmc_map equals the definition-chasing reference on 100 random instances") {
  Rng rng(7);
  int tested = 0;
  while (tested < 100) {
    const int nq = 1 + static_cast<int>(rng.uniform_int(8));
    const int ng = 4 + static_cast<int>(rng.uniform_int(27));
    std::vector<SampleMeta> qm, gm;
    for (int i = 0; i < nq; ++i)
      qm.push_back({static_cast<int>(rng.uniform_int(4)), static_cast<int>(rng.uniform_int(3)),
                    static_cast<int>(rng.uniform_int(3)), i});
    for (int i = 0; i < ng; ++i)
      gm.push_back({static_cast<int>(rng.uniform_int(4)), static_cast<int>(rng.uniform_int(3)),
                    static_cast<int>(rng.uniform_int(3)), 100 + i});
    std::vector<double> dist(static_cast<std::size_t>(nq) * ng);
    // quantized distances force ties, exercising the stable ordering
    for (auto& d : dist) d = static_cast<double>(rng.uniform_int(10)) / 10.0;
    const Protocol protocol =
        rng.uniform() < 0.5 ? Protocol::Standard : Protocol::ClothChanging;
    Metrics got;
    try {
      got = cmc_map(dist, qm, gm, protocol);
    } catch (const std::runtime_error&) {
      continue;
    }
    const Metrics want = testing::reference_cmc_map(dist, qm, gm, protocol);
    ++tested;
    REQUIRE(got.cmc.size() == want.cmc.size());
    for (std::size_t k = 0; k < got.cmc.size(); ++k)
      CHECK(got.cmc[k] == doctest::Approx(want.cmc[k]).epsilon(1e-12));
    CHECK(got.mean_ap == doctest::Approx(want.mean_ap).epsilon(1e-12));
    CHECK(got.evaluated_queries == want.evaluated_queries);
    CHECK(got.dropped_queries == want.dropped_queries);
  }
}

TEST_CASE("cloth-changing protocol with a single outfit leaves no valid positives") {
  const std::vector<SampleMeta> qm{{1, 0, 0, 0}};
  const std::vector<SampleMeta> gm{{1, 1, 0, 1}, {2, 1, 0, 2}};
  const std::vector<double> dist{0.1, 0.2};
  CHECK_THROWS_WITH_AS(cmc_map(dist, qm, gm, Protocol::ClothChanging),
                       doctest::Contains("no valid positives"), std::runtime_error);
}
