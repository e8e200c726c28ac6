#include <Eigen/Dense>
#include <cmath>

#include "ssed/error.hpp"
#include "ssed/evaluation.hpp"

namespace ssed::eval {

namespace {

void require_uniform(const std::vector<std::vector<double>>& v, const char* op) {
  for (const auto& x : v) {
    if (x.size() != v.front().size()) {
      fail(Errc::shape_mismatch, std::string(op) + ": vectors of length " + std::to_string(v.front().size()) +
                                     " and " + std::to_string(x.size()));
    }
  }
}

}  // namespace

PcaResult pca_2d(const std::vector<std::vector<double>>& vectors) {
  if (vectors.size() < 3) fail(Errc::invalid_argument, "pca_2d needs at least 3 vectors, got " + std::to_string(vectors.size()));
  require_uniform(vectors, "pca_2d");
  const std::size_t n = vectors.size(), d = vectors.front().size();
  if (d < 2) fail(Errc::invalid_argument, "pca_2d needs dimension >= 2");

  Eigen::MatrixXd X(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) X(i, j) = vectors[i][j];
  const Eigen::RowVectorXd mu = X.colwise().mean();
  X.rowwise() -= mu;
  const Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(Errc::invalid_argument, "pca_2d: eigendecomposition failed");

  // Ascending eigenvalues; take the last two.
  const auto& evals = solver.eigenvalues();
  const double trace = std::max(0.0, evals.sum());
  PcaResult r;
  r.mean.assign(mu.data(), mu.data() + d);
  Eigen::MatrixXd axes(d, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 1 - k);
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (std::abs(v(j)) > 1e-12) {
        if (v(j) < 0) v = -v;
        break;
      }
    }
    axes.col(k) = v;
    r.axes[k].assign(v.data(), v.data() + d);
    const double lambda = std::max(0.0, evals(static_cast<Eigen::Index>(d) - 1 - k));
    r.explained[k] = trace > 0.0 ? lambda / trace : 0.0;
  }
  const Eigen::MatrixXd proj = X * axes;
  for (std::size_t i = 0; i < n; ++i) r.points.push_back({proj(i, 0), proj(i, 1)});
  return r;
}

std::vector<std::vector<double>> pairwise_distances(const std::vector<std::vector<double>>& points) {
  if (points.empty()) return {};
  require_uniform(points, "pairwise_distances");
  const std::size_t n = points.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double diff = points[i][k] - points[j][k];
        s += diff * diff;
      }
      d[i][j] = d[j][i] = std::sqrt(s);
    }
  }
  return d;
}

}  // namespace ssed::eval
