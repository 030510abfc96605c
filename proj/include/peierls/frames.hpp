#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peierls/bloch.hpp"

namespace peierls {

// Candidate sections phi_p(theta) = P(theta) v_p, stored per grid point as an
// M x n_B matrix, together with the projection field they live in.
struct CandidateSections {
    const ProjectionField* field = nullptr;
    int nB = 1;
    CMatrix seeds;  // M x n_B
    std::vector<CMatrix> phi;
};

struct FrameBound {
    double value = 0.0;
    int worst_index = 0;
};

struct FrameField {
    ReciprocalGrid grid;
    int M = 1;
    int nB = 1;
    std::vector<CMatrix> sections;  // M x n_B per grid point
    double lower_bound = 0.0;
    double smoothness = 0.0;  // max finite-difference slope of the sections
};

struct WannierFrame {
    int d = 2;
    int M = 1;
    int nB = 1;
    int Lw = 0;
    std::map<Cell, CMatrix> values;    // M x n_B per lattice vector
    std::vector<double> decay_profile;  // r -> max_{|g|_inf = r, p} ||psi_p(g)||
    std::vector<double> norms;         // per p, sum_g ||psi_p(g)||^2

    CVector function(int p, const Cell& g) const;
};

// Seeds: seed == 0 uses the standard basis vectors (padded with random vectors
// when n_B > M); other seeds draw complex Gaussian vectors.
CMatrix seed_vectors(int M, int nB, std::uint64_t seed);
CandidateSections seed_candidates(const ProjectionField& field, int nB, std::uint64_t seed);
CandidateSections seed_candidates(const ProjectionField& field, const CMatrix& seeds);

// min over grid of the smallest eigenvalue of S(theta) = sum_p phi_p phi_p^dagger on range P(theta).
FrameBound frame_lower_bound(const CandidateSections& candidates);

// psi_p = S^{-1/2}|_range phi_p. FrameDeficient when the bound is below a_min.
FrameField parsevalize(const CandidateSections& candidates, double a_min = 1e-3);

// max over grid of || sum_p psi_p psi_p^dagger - P ||.
double parseval_defect(const FrameField& frame, const ProjectionField& field);

struct FrameSearch {
    FrameField frame;
    int nB = 0;
    std::vector<std::string> log;  // escalation messages
    bool beyond_bound = false;     // n_B exceeded N + 1 + ceil(d/2)
};

// Start at nB_start and escalate while the candidates are deficient.
FrameSearch search_frame(const ProjectionField& field, int nB_start, std::uint64_t seed,
                         double a_min = 1e-3);

WannierFrame to_wannier(const FrameField& frame, int Lw);

// Plain lattice translation of a box function, with periodic wrap.
CVector periodic_translate(const LatticeBox& box, int block_dim, const CVector& f, const Cell& g);

// Place psi_p (centered at the origin) on a periodic box.
CVector wannier_on_box(const WannierFrame& frame, const LatticeBox& box, int p);

// Coefficients (tau_alpha psi_p, f), index alpha * n_B + p (alpha in site order).
CVector coordinate_map(const WannierFrame& frame, const LatticeBox& box, const CVector& f);
CVector coordinate_map_adjoint(const WannierFrame& frame, const LatticeBox& box, const CVector& coeffs);

struct MatrixRep {
    BlockSequence hoppings;
    double route_agreement = 0.0;  // real-space pairing vs reciprocal DFT
};

// m_g = M[T]_{g,0} for a translation-invariant operator on a periodic box of side n_k.
MatrixRep matrix_rep(const FrameField& frame, const WannierFrame& wannier, const DenseOperator& t,
                     int radius);

// m°_g: DFT of psi_p^dagger H_B psi_q.
BlockSequence effective_hoppings_unperturbed(const FrameField& frame, const ProjectionField& field,
                                             int radius);

}  // namespace peierls
