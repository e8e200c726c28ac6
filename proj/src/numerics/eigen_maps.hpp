#pragma once

#include <span>

#include <Eigen/Core>

namespace ssed {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline Eigen::Map<const RowMatrix> as_matrix(std::span<const double> s, std::size_t rows,
                                             std::size_t cols) {
  return {s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

inline Eigen::Map<RowMatrix> as_matrix(std::span<double> s, std::size_t rows, std::size_t cols) {
  return {s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

inline Eigen::Map<RowMatrix> as_matrix(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return as_matrix(std::span<double>(v), rows, cols);
}

inline Eigen::Map<const RowVector> as_row(std::span<const double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

inline Eigen::Map<RowVector> as_row(std::span<double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

}  // namespace ssed
