#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace varest {

// Orthonormal Haar wavelets on [0, 1] under the uniform measure:
// psi_{j,l}(u) = 2^{j/2} psi(2^j u - l), psi = 1 on [0, 1/2), -1 on [1/2, 1].
// Levels j = 0..J-1 give 2^J - 1 functions; psi_{j,l} has flat index 2^j - 1 + l.
// The point u = 1 belongs to the last translate of every level.

std::size_t haar_size(int levels);

double haar_eval(int level, long long shift, double u);

/// Dense vector (psi_{j,l}(u)) of length 2^J - 1.
std::vector<double> haar_vector(double u, int levels);

/// Index of the dyadic cell of width 2^{-J} containing u, same boundary rule.
long long dyadic_cell(double u, int levels);

/// Gram matrix of the basis, integrated exactly on the 2^J dyadic cells on
/// which every basis function is constant.
Eigen::MatrixXd haar_gram(int levels);

}  // namespace varest
