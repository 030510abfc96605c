#include "peierls/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peierls {

namespace {

EigenPairs run_zheevd(const CMatrix& a, bool vectors) {
    if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_eig: matrix not square");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    EigenPairs out;
    out.values.resize(n);
    if (n == 0) return out;
    CMatrix work = a;
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', n,
                              reinterpret_cast<lapack_complex_double*>(work.data()), n,
                              out.values.data());
    if (info != 0) throw std::runtime_error("zheevd failed with info " + std::to_string(info));
    if (vectors) out.vectors = std::move(work);
    return out;
}

}  // namespace

EigenPairs hermitian_eig(const CMatrix& a) { return run_zheevd(a, true); }

RVector hermitian_eigvals(const CMatrix& a) { return run_zheevd(a, false).values; }

CMatrix apply_function(const EigenPairs& eig, const std::function<cplx(double)>& f) {
    const Eigen::Index n = eig.values.size();
    CMatrix scaled = eig.vectors;
    for (Eigen::Index k = 0; k < n; ++k) scaled.col(k) *= f(eig.values(k));
    return scaled * eig.vectors.adjoint();
}

double op_norm(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    CMatrix gram = a.rows() <= a.cols() ? CMatrix(a * a.adjoint()) : CMatrix(a.adjoint() * a);
    RVector ev = hermitian_eigvals(gram);
    return std::sqrt(std::max(0.0, ev.maxCoeff()));
}

double hermitian_norm(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    RVector ev = hermitian_eigvals(a);
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

CMatrix projection_basis(const CMatrix& p, bool upper) {
    EigenPairs eig = hermitian_eig(p);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < eig.values.size(); ++k)
        if ((eig.values(k) > 0.5) == upper) keep.push_back(k);
    CMatrix basis(p.rows(), static_cast<Eigen::Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) basis.col(j) = eig.vectors.col(keep[j]);
    return basis;
}

CMatrix contour_integral(const CMatrix& a, cplx center, double radius, int n_nodes,
                         const std::function<cplx(cplx)>& weight) {
    const Eigen::Index n = a.rows();
    CMatrix sum = CMatrix::Zero(n, n);
    const CMatrix id = CMatrix::Identity(n, n);
    for (int k = 0; k < n_nodes; ++k) {
        const double angle = kTwoPi * (k + 0.5) / n_nodes;
        const cplx phase = std::polar(1.0, angle);
        const cplx z = center + radius * phase;
        CMatrix resolvent = (a - z * id).partialPivLu().solve(id);
        sum += (weight(z) * phase) * resolvent;
    }
    return sum * (-radius / n_nodes);
}

double spectrum_circle_distance(const RVector& eigenvalues, cplx center, double radius) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
        best = std::min(best, std::abs(std::abs(cplx(eigenvalues(k)) - center) - radius));
    return best;
}

CMatrix dagger(const CMatrix& a) { return a.adjoint(); }

}  // namespace peierls
