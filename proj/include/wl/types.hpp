#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace wl {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;
using SparseMatrix = Eigen::SparseMatrix<double>;

}  // namespace wl
