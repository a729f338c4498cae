#pragma once
// Observation container: locations plus m replicate fields.

#include <Eigen/Dense>
#include <optional>

#include "fsbgl/points.hpp"

namespace fsbgl {

struct SpatialDataset {
  PointSet locations;    // n x 2
  Eigen::MatrixXd Y;     // n x m, one column per replicate
  std::optional<Eigen::VectorXd> mean;  // empirical mean when computed

  int n_sites() const { return static_cast<int>(locations.rows()); }
  int n_replicates() const { return static_cast<int>(Y.cols()); }

  void check() const {
    if (Y.rows() != locations.rows())
      throw domain_error("dataset: Y rows must match location count");
    if (Y.cols() < 1) throw domain_error("dataset: need at least one replicate");
  }
};

}  // namespace fsbgl
