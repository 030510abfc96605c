#pragma once

#include <functional>
#include <vector>

#include "peierls/bloch.hpp"
#include "peierls/sectors.hpp"

namespace peierls {

// Energy window (a, b) around an isolated family with margin delta.
struct SpectralWindow {
    double a = 0.0;
    double b = 1.0;
    double delta = 0.0;

    double inner_lo() const { return a + 2.0 * delta; }
    double inner_hi() const { return b - 2.0 * delta; }
    // Closed middle half of (inner_lo, inner_hi).
    double J_lo() const { return inner_lo() + 0.25 * (inner_hi() - inner_lo()); }
    double J_hi() const { return inner_hi() - 0.25 * (inner_hi() - inner_lo()); }
    double midpoint() const { return 0.5 * (inner_lo() + inner_hi()); }
};

// a = E_minus (0 when the family starts at the bottom; spectra are positive
// after the shift), b = E_plus (mirror of a about the family top when there is
// no band above). delta < 0 selects (b - a) / 8.
SpectralWindow window_from_family(const IsolatedFamily& family, double delta = -1.0);

// Smallest band energy over the grid; positive for a shifted model.
double spectral_floor(const BandStructure& bands);

// Spectral projection of the Peierls operator built from h_perp onto its
// spectrum inside |z| < e0 / 2. SpectrumOnContour if an eigenvalue comes
// within contour_tol of the circle.
SectorOperator perturbed_band_projection(const HoppingTable& h_perp, std::shared_ptr<const ZakSectors> basis,
                                         double e0, bool contour_route = false, double contour_tol = 1e-6);

// P H P.
SectorOperator effective_hamiltonian(const SectorOperator& p, const SectorOperator& h);

// Feshbach-Schur data for H, P at z, in the coordinates of orthonormal bases
// of range P (first) and range (1 - P).
struct SchurDecomposition {
    CMatrix range_basis;       // columns span range P
    CMatrix complement_basis;  // columns span range (1 - P)
    cplx z;
    CMatrix r_tilde;           // (P(H - z)P - P H R_perp H P)^{-1} on range P
    CMatrix r_perp;            // ((1-P)(H - z)(1-P))^{-1} on range (1 - P)
    CMatrix coupling;          // P H R_perp H P on range P
    CMatrix assembled;         // full resolvent in the original basis
    double coupling_norm = 0.0;
    double off_diagonal_norm = 0.0;  // ||(1-P) H P||
    double r_perp_norm = 0.0;
};
// SingularBlock names the block that could not be inverted.
SchurDecomposition schur_resolvent(const CMatrix& h, const CMatrix& p, cplx z, double singular_tol = 1e-12);

struct SchurSpectrumReport {
    std::vector<double> t_grid;
    std::vector<double> singular_values;  // smallest singular value of the reduced operator on the grid
    std::vector<double> eigenvalues;      // of H inside J
    std::vector<double> eigen_residuals;  // reduced singular value at each eigenvalue
    std::vector<double> roots;            // refined zeros of the singular value function
    std::vector<std::pair<int, int>> matching;  // (eigenvalue index, root index)
    double complement_floor = 0.0;        // min over the grid of s_min((1-P)(H - t)(1-P))
    bool bijective = false;
};
// ConditionTwoFails when the complement block becomes singular on J.
SchurSpectrumReport schur_spectrum_check(const CMatrix& h, const CMatrix& p, double j_lo, double j_hi,
                                         int grid_points = 400, double floor_tol = 1e-6);

// Real function with compact support [lo, hi] and derivatives up to order 3+.
struct CompactFunction {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> knots;  // points where the derivatives are only piecewise smooth
    std::function<double(double x, int order)> eval;

    static CompactFunction zero();
    // Smooth plateau: 1 on [lo + ramp, hi - ramp], 0 outside [lo, hi], C^4 ramps.
    static CompactFunction bump(double lo, double hi, double ramp);
    CompactFunction operator+(const CompactFunction& o) const;
    CompactFunction operator*(double a) const;
};

// phi(H) by the Helffer-Sjoestrand formula with an almost-analytic extension of
// order `order` and the fixed cutoff chi(y) (1 on |y| <= 1, 0 on |y| >= 2). The
// resolvent is diagonalized once; the area integral is done per eigenvalue by
// graded Gauss-Legendre panels.
CMatrix hs_function_of_matrix(const CMatrix& h, const CompactFunction& phi, int order = 2);
// Scalar version of the same area integral.
double hs_scalar(double lambda, const CompactFunction& phi, int order = 2);
// Spectral calculus reference.
CMatrix spectral_function_of_matrix(const CMatrix& h, const std::function<double(double)>& f);

// || P phi(H) - phi(H) ||. SupportViolation unless supp phi lies in the inner window.
double band_window_estimate(const SectorOperator& p, const SectorOperator& h, const CompactFunction& phi,
                            const SpectralWindow& window);

}  // namespace peierls
