#include "dagsparse/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "dagsparse/format.hpp"

namespace dagsparse {

FeatureTable make_feature_table() {
  FeatureTable t;
  t.names = similarity_feature_names();
  return t;
}

void FeatureTable::add(std::string run_id, std::string dataset, std::uint64_t seed, const GraphFeatures& f) {
  if (names.empty()) names = similarity_feature_names();
  rows.push_back({std::move(run_id), std::move(dataset), seed, similarity_feature_vector(f)});
}

Eigen::MatrixXd FeatureTable::raw() const {
  Eigen::MatrixXd m(rows.size(), names.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].values.size() != names.size()) throw SimilarityError("row " + rows[i].run_id + " has wrong width");
    for (std::size_t j = 0; j < names.size(); ++j) m(i, j) = rows[i].values[j];
  }
  return m;
}

void standardize(FeatureTable& t, double zero_variance_tol) {
  if (t.rows.size() < 2) throw SimilarityError("similarity needs at least two runs");
  const Eigen::MatrixXd m = t.raw();
  if (!m.allFinite()) throw SimilarityError("feature table contains non-finite values");
  const Eigen::RowVectorXd mean = m.colwise().mean();
  const Eigen::RowVectorXd sd = (m.rowwise() - mean).array().square().colwise().mean().sqrt();
  std::vector<Eigen::Index> keep;
  t.kept.clear();
  t.dropped.clear();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (sd(j) > zero_variance_tol * std::max(1.0, std::abs(mean(j)))) {
      keep.push_back(j);
      t.kept.push_back(t.names[j]);
    } else {
      t.dropped.push_back(t.names[j]);
      std::cerr << "warning: feature '" << t.names[j] << "' has zero variance and is dropped\n";
    }
  }
  if (keep.empty()) throw SimilarityError("every feature has zero variance");
  t.mean.resize(keep.size());
  t.stddev.resize(keep.size());
  t.z.resize(m.rows(), keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    t.mean(c) = mean(keep[c]);
    t.stddev(c) = sd(keep[c]);
    t.z.col(c) = (m.col(keep[c]).array() - mean(keep[c])) / sd(keep[c]);
  }
}

Eigen::MatrixXd similarity_matrix(FeatureTable& t, std::optional<double> gamma) {
  if (t.z.rows() != static_cast<Eigen::Index>(t.rows.size()) || t.z.cols() == 0) standardize(t);
  const double g = gamma.value_or(1.0 / static_cast<double>(t.z.cols()));
  if (!(g > 0)) throw SimilarityError("gamma must be positive");
  const Eigen::Index n = t.z.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) k(i, j) = k(j, i) = std::exp(-g * (t.z.row(i) - t.z.row(j)).squaredNorm());
  }
  return k;
}

BlockMeans block_means(const FeatureTable& t, const Eigen::MatrixXd& k) {
  double within = 0, across = 0;
  int nw = 0, na = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
      if (i == j) continue;
      if (t.rows[i].dataset == t.rows[j].dataset) {
        within += k(i, j);
        ++nw;
      } else {
        across += k(i, j);
        ++na;
      }
    }
  return {nw ? within / nw : std::nan(""), na ? across / na : std::nan("")};
}

std::string similarity_csv(const FeatureTable& t, const Eigen::MatrixXd& k) {
  std::string out = "run";
  for (const auto& r : t.rows) out += "," + r.run_id;
  out += '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out += t.rows[i].run_id;
    for (std::size_t j = 0; j < t.rows.size(); ++j) out += "," + fmt6(k(i, j));
    out += '\n';
  }
  return out;
}

std::string similarity_pgm(const Eigen::MatrixXd& k, int cell) {
  const int n = static_cast<int>(k.rows()), side = n * cell;
  std::string out = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      out += static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(k(y / cell, x / cell), 0.0, 1.0))));
  return out;
}

}  // namespace dagsparse
