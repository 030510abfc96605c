#pragma once

#include <limits>
#include <string>
#include <vector>

#include "peierls/model.hpp"

namespace peierls {

struct BandStructure {
    ReciprocalGrid grid;
    int M = 1;
    std::vector<RVector> values;   // ascending per grid point
    std::vector<CMatrix> vectors;  // eigenvectors as columns
};

struct IsolatedFamily {
    int k0 = 1;  // 1-based first band
    int N = 0;   // family has N + 1 bands
    double E_minus = -std::numeric_limits<double>::infinity();
    double E_plus = std::numeric_limits<double>::infinity();
    double d0 = std::numeric_limits<double>::infinity();
    double g_local = std::numeric_limits<double>::infinity();
    double family_min = 0.0;  // min over the grid of lambda_{k0}
    double family_max = 0.0;  // max over the grid of lambda_{k0+N}

    int size() const { return N + 1; }
};

struct ProjectionField {
    ReciprocalGrid grid;
    int M = 1;
    int rank = 1;
    std::vector<CMatrix> projection;
    std::vector<CMatrix> band_hamiltonian;
    double route_agreement = 0.0;  // max |spectral-sum - Riesz| over the grid
};

BandStructure compute_bands(const HoppingTable& h, const ReciprocalGrid& grid);

// Throws NotIsolated naming the grid point and the failing inequality.
IsolatedFamily detect_isolated_family(const BandStructure& bands, int k0, int N,
                                      double gap_tol = 1e-8);

// -(2 pi i)^{-1} \oint (H - z)^{-1} dz; EigenvalueOnContour if an eigenvalue
// lies within dist_tol of the circle.
CMatrix eigenprojection_riesz(const CMatrix& h, cplx center, double radius, int n_nodes = 64,
                              double dist_tol = 1e-6);

// Family projection and band Hamiltonian per grid point. The Riesz route is
// evaluated as a cross-check when riesz_nodes > 0.
ProjectionField band_projection_field(const BandStructure& bands, const IsolatedFamily& family,
                                      int riesz_nodes = 64);

// Lattice field-strength Chern number (plaquette products of link variables).
int chern_number(const ProjectionField& field);
// Same, returning the unrounded sum / (2 pi).
double chern_number_raw(const ProjectionField& field);

// K(g) = n_k^{-d} sum_theta e^{i<theta,g>} X(theta) for |g|_inf <= radius.
// AliasRisk if radius >= n_k / 2.
BlockSequence grid_fourier(const ReciprocalGrid& grid, const std::vector<CMatrix>& field, int radius);

// Kernel of the band Hamiltonian field.
BlockSequence band_kernel(const ProjectionField& field, int radius);

std::string format_theta(const Point& theta, int d);

}  // namespace peierls
