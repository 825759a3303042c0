#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace invman {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

/// Eigenvalues of a real square matrix from the dense nonsymmetric (QR)
/// solver, ordered by descending modulus, then descending real part, then
/// descending imaginary part. Throws TransportError if the solver fails.
std::vector<Complex> sorted_eigenvalues(const Matrix& m);

/// Orthonormal basis (as columns) of the numerical kernel of `m`: right
/// singular vectors whose singular value is <= rel_tol * largest singular
/// value. A zero matrix has a full kernel. Each basis vector is normalized so
/// that its largest-magnitude entry is positive.
Matrix kernel_basis(const Matrix& m, double rel_tol);

double max_abs(const Matrix& m);

}  // namespace invman
