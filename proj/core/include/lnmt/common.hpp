#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lnmt {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using IntMat = Eigen::MatrixXi;

/// Error thrown by all lnmt operations on contract violations or bad input.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace lnmt
