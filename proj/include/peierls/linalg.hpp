#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

namespace peierls {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Eigenvalues ascending, eigenvectors as columns.
struct EigenPairs {
    RVector values;
    CMatrix vectors;
};

// Dense Hermitian eigensolver (LAPACK divide and conquer). Only the lower
// triangle of `a` is read.
EigenPairs hermitian_eig(const CMatrix& a);
RVector hermitian_eigvals(const CMatrix& a);

// V f(D) V^dagger for a decomposed Hermitian matrix.
CMatrix apply_function(const EigenPairs& eig, const std::function<cplx(double)>& f);

// Largest singular value. For Hermitian input use hermitian_norm, which is cheaper.
double op_norm(const CMatrix& a);
double hermitian_norm(const CMatrix& a);

// Columns of the eigenvectors of a projection-like matrix whose eigenvalue is
// above (upper=true) or below 1/2.
CMatrix projection_basis(const CMatrix& p, bool upper);

// -(2 pi i)^{-1} \oint weight(z) (A - z)^{-1} dz by the trapezoid rule on the
// circle |z - center| = radius, counter-clockwise.
CMatrix contour_integral(const CMatrix& a, cplx center, double radius, int n_nodes,
                         const std::function<cplx(cplx)>& weight);

// Distance from the eigenvalues of a Hermitian matrix to a circle in C.
double spectrum_circle_distance(const RVector& eigenvalues, cplx center, double radius);

CMatrix dagger(const CMatrix& a);

}  // namespace peierls
