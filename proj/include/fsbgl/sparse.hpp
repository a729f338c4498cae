#pragma once
// Symmetric sparse matrix stored as upper-triangle triplets.
//
// Entries hold (row, col, value) with row <= col, sorted by (row, col);
// each (row, col) appears at most once. The full matrix is implied by
// symmetry.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "fsbgl/common.hpp"

namespace fsbgl {

struct SparseSymmetric {
  struct Entry {
    int row, col;
    double value;
  };

  int n = 0;
  std::vector<Entry> entries;  // row <= col, sorted by (row, col)

  std::size_t nnz_upper() const { return entries.size(); }

  // nnz of the full symmetric matrix over n^2.
  double density() const;

  // Sorts by (row, col), merges duplicates by summation, validates bounds.
  void normalize();

  Eigen::SparseMatrix<double> to_eigen() const;  // both triangles
  Eigen::MatrixXd to_dense() const;

  static SparseSymmetric from_dense(const Eigen::MatrixXd& M,
                                    double drop_tol = 0.0);
  static SparseSymmetric identity(int n, double scale = 1.0);
};

}  // namespace fsbgl
