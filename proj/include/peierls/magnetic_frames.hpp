#pragma once

#include <string>
#include <vector>

#include "peierls/frames.hpp"
#include "peierls/sectors.hpp"

namespace peierls {

// (T_g f)(x) = Lambda(x, g) f(x - g) on a magnetic-periodic box (constant field only).
CVector zak_translate(const MagneticSetup& s, const LatticeBox& box, int block_dim, const CVector& f,
                      const Cell& g);

// psi_p (centered at the origin) on a magnetic-periodic box: the value at
// g = y + L n is stored at y with the conjugate boundary phase.
CVector wannier_on_magnetic_box(const WannierFrame& frame, const MagneticSetup& s, const LatticeBox& box, int p);

// Multiplication by x -> Lambda_fluct(x*, alpha), x* the image of x nearest to alpha.
CVector fluct_dress(const MagneticSetup& s, const LatticeBox& box, int block_dim, const CVector& f,
                    const Cell& alpha);

// Sum over all box translates: sum_{alpha,p} psi_{alpha,p} psi_{alpha,p}^dagger, where the
// family is equivariant under the sector group and `cell_functions[r * nB + p]`
// is psi_{rho_r, p} for the cell site rho_r.
SectorOperator frame_sum(std::shared_ptr<const ZakSectors> basis, const std::vector<CVector>& cell_functions,
                         int nB);

// Box functions Lambda~_rho T_rho f_p for every cell site (the dressing is the
// identity at c = 0).
std::vector<CVector> cell_translates(const ZakSectors& basis, const std::vector<CVector>& functions);

enum class CalculusRoute { Eigen, Contour };

// Sum over alpha, p of (T_alpha psi_p)(T_alpha psi_p)^dagger, dressed by
// Lambda~_alpha when c != 0. PaddingInsufficient if the frame support wraps.
SectorOperator frame_kernel(const WannierFrame& frame, std::shared_ptr<const ZakSectors> basis);
SectorOperator frame_kernel(const std::vector<CVector>& functions, std::shared_ptr<const ZakSectors> basis);

// Spectral projection of an almost-projection onto its eigenvalues near one.
// NoSpectralDichotomy if an eigenvalue lies in [0.25, 0.75].
SectorOperator spectral_projection_near_one(const SectorOperator& ptilde,
                                            CalculusRoute route = CalculusRoute::Eigen);
// z^{-1/2} on the cluster near one, zero on the cluster near zero.
SectorOperator theta_operator(const SectorOperator& ptilde, CalculusRoute route = CalculusRoute::Eigen);

struct Intertwiner {
    SectorOperator unitary;
    double distance = 0.0;   // ||P - Q||
    double remainder = 0.0;  // ||U - 1||
};
// U = (1 - (P - Q)^2)^{-1/2} [P Q + (1 - P)(1 - Q)], so that P U = U Q.
Intertwiner nagy_intertwiner(const SectorOperator& p, const SectorOperator& q);

struct MagneticFrame {
    std::shared_ptr<const ZakSectors> basis;  // state space, block dim M
    int nB = 1;
    // psi_{rho,p} for rho in the sector cell, index r * nB + p. Every other
    // frame function follows by a magnetic translation from the sector group.
    std::vector<CVector> cell_functions;
    bool used_ptilde = false, used_q = false, used_theta = false, used_u = false, used_w = false;
    double ptilde_idempotency = 0.0;  // ||P~^2 - P~||
    double projection_distance = 0.0; // ||P - Q|| of the final intertwining step
    double parseval_defect = 0.0;     // ||sum psi psi^dagger - target||

    // Coordinate map f -> (psi_{alpha,p}, f) as a sector operator into
    // coefficient space (block dim nB, same group).
    SectorOperator coordinate_map() const;
};

// Frame pipeline: P~ from the dressed translates, Theta, then a Sz. Nagy
// unitary onto the given target projection (the perturbed band projection).
MagneticFrame build_magnetic_frame(const WannierFrame& frame, std::shared_ptr<const ZakSectors> basis,
                                   const SectorOperator& target);
// Same starting from explicit box functions psi_p (centered at the origin).
MagneticFrame build_magnetic_frame(const std::vector<CVector>& functions, int nB,
                                   std::shared_ptr<const ZakSectors> basis, const SectorOperator& target);

struct StructureReport {
    BlockSequence hoppings;
    double violation = 0.0;  // max || M_{a,b} - Lambda(a,b) m_{a-b} || over sampled pairs
    Cell reference{0, 0};
};

// Matrix of an operator in a magnetic frame, phase-stripped at the box
// center: m_g = conj(Lambda(c+g, c)) <psi_{c+g}, H psi_c> for |g| <= radius.
// StructureViolation at c = 0 when the violation exceeds 1e-6.
StructureReport effective_matrix(const MagneticFrame& frame, const SectorOperator& h, int radius);

struct EffectiveMagneticOperator {
    BlockSequence hoppings;
    SectorOperator op;  // on coefficient space
};
// (Op(m) c)_a = sum_b Lambda(a, b) m_{a-b} c_b on the box of the given basis.
// PaddingInsufficient when the hopping range does not fit the box.
EffectiveMagneticOperator magnetic_quantize(const BlockSequence& hoppings,
                                            std::shared_ptr<const ZakSectors> coefficient_basis);
// Dense version for desk-size boxes.
CMatrix magnetic_quantize_dense(const BlockSequence& hoppings, const MagneticSetup& s, const LatticeBox& box);

// (S T)_a = sum_g Lambda(g, a) S_g T_{a-g} (constant field only).
BlockSequence twisted_product(const BlockSequence& s_seq, const BlockSequence& t_seq,
                              const MagneticSetup& setup);

}  // namespace peierls
