#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>

namespace poroms {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Scalar source term f(x1, x2, t).
using SourceFn = std::function<double(double, double, double)>;
/// Initial pressure p0(x1, x2).
using ScalarFn = std::function<double(double, double)>;

} // namespace poroms
