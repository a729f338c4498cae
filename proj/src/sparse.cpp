#include "fsbgl/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace fsbgl {

double SparseSymmetric::density() const {
  if (n == 0) return 0.0;
  std::size_t full = 0;
  for (const auto& e : entries) full += (e.row == e.col) ? 1 : 2;
  return static_cast<double>(full) / (static_cast<double>(n) * n);
}

void SparseSymmetric::normalize() {
  for (auto& e : entries) {
    if (e.row > e.col) std::swap(e.row, e.col);
    if (e.row < 0 || e.col >= n)
      throw domain_error("sparse entry index out of range");
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::size_t w = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (w > 0 && entries[w - 1].row == entries[i].row &&
        entries[w - 1].col == entries[i].col) {
      entries[w - 1].value += entries[i].value;
    } else {
      entries[w++] = entries[i];
    }
  }
  entries.resize(w);
}

Eigen::SparseMatrix<double> SparseSymmetric::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * entries.size());
  for (const auto& e : entries) {
    trips.emplace_back(e.row, e.col, e.value);
    if (e.row != e.col) trips.emplace_back(e.col, e.row, e.value);
  }
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

Eigen::MatrixXd SparseSymmetric::to_dense() const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : entries) {
    M(e.row, e.col) = e.value;
    M(e.col, e.row) = e.value;
  }
  return M;
}

SparseSymmetric SparseSymmetric::from_dense(const Eigen::MatrixXd& M,
                                            double drop_tol) {
  if (M.rows() != M.cols()) throw domain_error("matrix must be square");
  SparseSymmetric S;
  S.n = static_cast<int>(M.rows());
  for (int i = 0; i < S.n; ++i)
    for (int j = i; j < S.n; ++j)
      if (std::abs(M(i, j)) > drop_tol || i == j)
        S.entries.push_back({i, j, M(i, j)});
  return S;
}

SparseSymmetric SparseSymmetric::identity(int n, double scale) {
  SparseSymmetric S;
  S.n = n;
  S.entries.reserve(n);
  for (int i = 0; i < n; ++i) S.entries.push_back({i, i, scale});
  return S;
}

}  // namespace fsbgl
