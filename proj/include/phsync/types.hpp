#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace phsync {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense real matrix read as a grid of 2x2 blocks. Complex circuit quantities
// a + jb are stored as [[a, -b], [b, a]].
using BlockMatrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Physical parameters violate a model assumption (positivity, winding
// coupling bound, incidence structure, connectivity).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A linear system that should be regular under valid parameters was not.
class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

}  // namespace phsync
