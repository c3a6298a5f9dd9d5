#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace rd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

// Compressed sparse row storage throughout: outerIndexPtr/innerIndexPtr/valuePtr
// are the row_ptr/col_idx/values arrays.
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

}  // namespace rd
