#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dagsparse/graph_stats.hpp"
#include "oracles.hpp"

using namespace dagsparse;

TEST_CASE("path statistics match explicit enumeration") {
  Rng rng(77);
  int checked = 0;
  while (checked < 300) {
    const DagSpec g = oracle::random_dag(rng, 2 + static_cast<int>(rng.below(8)), rng.uniform(0.2, 1.0));
    const auto ref = oracle::enumerate_paths(g);
    if (ref.count == 0) continue;
    const PathStats p = path_stats(g);
    CHECK(p.count == ref.count);
    CHECK(p.max_path == ref.max_length);
    CHECK(p.mean_path == doctest::Approx(static_cast<double>(ref.total_length) / ref.count).epsilon(1e-12));
    CHECK(p.log_paths == doctest::Approx(std::log(static_cast<double>(ref.count))).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("edge connectivity matches exhaustive cuts") {
  Rng rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    const DagSpec g = oracle::random_dag(rng, 2 + static_cast<int>(rng.below(7)), rng.uniform(0.2, 1.0));
    CHECK(edge_connectivity(g) == oracle::min_cut_exhaustive(g));
  }
}

TEST_CASE("communicability series matches the matrix exponential") {
  Rng rng(79);
  for (int trial = 0; trial < 50; ++trial) {
    const DagSpec g = oracle::random_dag(rng, 2 + static_cast<int>(rng.below(19)), rng.uniform(0.2, 1.0));
    if (oracle::enumerate_paths(g).count == 0) continue;
    CHECK(std::abs(ln_communicability(g) - std::log(oracle::communicability_expm(g))) < 1e-8);
  }
  DagSpec empty = build_full_dag(4, 1);
  empty.edges.clear();
  CHECK_THROWS_AS(ln_communicability(empty), GraphStatsError);
}

TEST_CASE("closed forms of the fully connected DAG") {
  for (int n : {6, 15, 60}) {
    const DagSpec g = build_full_dag(n, 3);
    const PathStats p = path_stats(g);
    CHECK(p.count == (BigInt(1) << (n - 2)));
    CHECK(p.log_paths == doctest::Approx((n - 2) * std::numbers::ln2).epsilon(1e-12));
    CHECK(p.mean_path == doctest::Approx(n / 2.0).epsilon(1e-12));
    CHECK(p.max_path == n - 1);
    CHECK(mean_degree(g) == doctest::Approx(n - 1.0));
    CHECK(edge_connectivity(g) == n - 1);
  }
}

TEST_CASE("undirected distances of a chain") {
  DagSpec g = build_full_dag(5, 1);
  std::vector<Edge> chain;
  for (int v = 0; v + 1 < 5; ++v) chain.push_back({v, v + 1});
  g.edges = chain;
  const auto d = undirected_distances(g);
  CHECK(d(0, 4) == 4);
  CHECK(d(4, 0) == 4);
  CHECK(d(1, 3) == 2);
}

TEST_CASE("embedding reduces stress and is seeded") {
  const DagSpec g = build_full_dag(12, 3);
  std::vector<double> trace;
  LayoutOptions opt;
  opt.stress_trace = &trace;
  const Layout a = kamada_kawai_embed(g, 5, opt);
  const Layout b = kamada_kawai_embed(g, 5);
  CHECK(a.coords == b.coords);
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-9);
  CHECK(kk_stress(a.coords, undirected_distances(g)) == doctest::Approx(a.stress));
}

TEST_CASE("elongation separates a chain from a complete graph") {
  const DagSpec full = build_full_dag(30, 3);
  CHECK(std::abs(pca_elongation(kamada_kawai_embed(full, 1).coords).value) <= 0.15);
  DagSpec chain = full;
  chain.edges.clear();
  for (int v = 0; v + 1 < 30; ++v) chain.edges.push_back({v, v + 1});
  CHECK(pca_elongation(kamada_kawai_embed(chain, 1).coords).value >= 0.9);
}

TEST_CASE("elongation of hand-made point sets") {
  Eigen::MatrixX2d line(3, 2);
  line << 0, 0, 1, 1, 2, 2;
  CHECK(pca_elongation(line).value == doctest::Approx(1.0));
  Eigen::MatrixX2d square(4, 2);
  square << 0, 0, 1, 0, 0, 1, 1, 1;
  CHECK(pca_elongation(square).value == doctest::Approx(0.0).scale(1.0));
  Eigen::MatrixX2d same = Eigen::MatrixX2d::Ones(3, 2);
  CHECK(pca_elongation(same).degenerate);
}

TEST_CASE("q1d needs elongation and two-edge connectivity") {
  CHECK(q1d(0.3, 2));
  CHECK_FALSE(q1d(0.3, 1));
  CHECK_FALSE(q1d(0.2, 5));
}

TEST_CASE("features of a disconnected graph are refused") {
  const DagSpec g = build_full_dag(6, 3);
  const PrunedGraph pg = prune(g, init_edge_params(g), 0.9);
  CHECK_THROWS_AS(compute_features(pg, g, 0, 1), GraphStatsError);
}

TEST_CASE("feature row has one value per header column") {
  const DagSpec g = build_full_dag(9, 3);
  const PrunedGraph pg = prune(g, init_edge_params(g), 0.006);
  const GraphFeatures f = compute_features(pg, g, 1234, 1);
  const auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  CHECK(count(features_csv_row(f)) == count(features_csv_header()));
  CHECK(f.parameters == 1234);
  CHECK(f.sparsity_all == 0.0);
  CHECK(similarity_feature_vector(f).size() == similarity_feature_names().size());
}
