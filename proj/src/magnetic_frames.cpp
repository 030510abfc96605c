#include "peierls/magnetic_frames.hpp"

#include <cmath>
#include <stdexcept>

#include "peierls/errors.hpp"

namespace peierls {

namespace {

MagneticSetup constant_part(const MagneticSetup& s) {
    MagneticSetup out = s;
    out.c = 0.0;
    return out;
}

void check_dichotomy(const RVector& ev) {
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev(k) >= 0.25 && ev(k) <= 0.75)
            throw NoSpectralDichotomy("eigenvalue " + std::to_string(ev(k)) +
                                      " of the almost-projection lies in [0.25, 0.75]");
}

int nearest_image(int x, int alpha, int L) {
    int diff = x - alpha;
    diff -= L * static_cast<int>(std::floor(double(diff) / L + 0.5));
    return alpha + diff;
}

}  // namespace

CVector zak_translate(const MagneticSetup& s, const LatticeBox& box, int block_dim, const CVector& f,
                      const Cell& g) {
    if (f.size() != Eigen::Index(box.sites()) * block_dim) throw ShapeMismatch("function length does not match the box");
    if (box.boundary == Boundary::MagneticPeriodic) check_commensurate(constant_part(s), box);
    CVector out = CVector::Zero(f.size());
    for (int iy = 0; iy < box.sites(); ++iy) {
        const Cell y = box.site(iy);
        if (box.boundary == Boundary::Open) {
            const Cell x = y + g;
            if (box.reduce(x).second != Cell{0, 0}) continue;  // truncated
            out.segment(box.index(x) * block_dim, block_dim) =
                lambda_const(s, to_point(x), to_point(g)) * f.segment(iy * block_dim, block_dim);
            continue;
        }
        auto [x, phase] = translate_delta(s, box, y, 1.0, g);
        out.segment(box.index(x) * block_dim, block_dim) = phase * f.segment(iy * block_dim, block_dim);
    }
    return out;
}

CVector wannier_on_magnetic_box(const WannierFrame& frame, const MagneticSetup& s, const LatticeBox& box, int p) {
    CVector f = CVector::Zero(Eigen::Index(box.sites()) * frame.M);
    for (const auto& [g, block] : frame.values) {
        auto [y, n] = box.reduce(g);
        f.segment(box.index(y) * frame.M, frame.M) += std::conj(boundary_phase(s, box, y, n)) * block.col(p);
    }
    return f;
}

CVector fluct_dress(const MagneticSetup& s, const LatticeBox& box, int block_dim, const CVector& f,
                    const Cell& alpha) {
    if (s.c == 0.0 || s.eps == 0.0 || s.fluct.is_zero()) return f;
    CVector out = f;
    for (int ix = 0; ix < box.sites(); ++ix) {
        const Cell x = box.site(ix);
        const Cell img{nearest_image(x[0], alpha[0], box.L), box.d == 1 ? 0 : nearest_image(x[1], alpha[1], box.L)};
        out.segment(ix * block_dim, block_dim) *= lambda_fluct(s, to_point(img), to_point(alpha));
    }
    return out;
}

SectorOperator frame_sum(std::shared_ptr<const ZakSectors> basis, const std::vector<CVector>& cell_functions,
                         int nB) {
    const int ns = basis->sector_count();
    const int cols = basis->cell_sites() * nB;
    if (static_cast<int>(cell_functions.size()) != cols)
        throw ShapeMismatch("need one function per cell site and frame index");
    std::vector<CMatrix> phi(static_cast<size_t>(ns), CMatrix(basis->sector_size(), cols));
    for (int j = 0; j < cols; ++j) {
        const auto parts = basis->decompose(cell_functions[static_cast<size_t>(j)]);
        for (int s = 0; s < ns; ++s) phi[static_cast<size_t>(s)].col(j) = parts[static_cast<size_t>(s)];
    }
    std::vector<CMatrix> blocks;
    blocks.reserve(static_cast<size_t>(ns));
    for (const auto& p : phi) blocks.push_back(double(ns) * (p * p.adjoint()));
    return SectorOperator(basis, basis, std::move(blocks));
}

std::vector<CVector> cell_translates(const ZakSectors& basis, const std::vector<CVector>& functions) {
    std::vector<CVector> out;
    out.reserve(basis.cell().size() * functions.size());
    for (const Cell& rho : basis.cell())
        for (const auto& f : functions)
            out.push_back(fluct_dress(basis.setup(), basis.box(), basis.block_dim(),
                                      zak_translate(basis.setup(), basis.box(), basis.block_dim(), f, rho), rho));
    return out;
}

SectorOperator frame_kernel(const std::vector<CVector>& functions, std::shared_ptr<const ZakSectors> basis) {
    return frame_sum(basis, cell_translates(*basis, functions), static_cast<int>(functions.size()));
}

SectorOperator frame_kernel(const WannierFrame& frame, std::shared_ptr<const ZakSectors> basis) {
    if (2 * frame.Lw + 1 > basis->box().L)
        throw PaddingInsufficient("frame support radius " + std::to_string(frame.Lw) + " does not fit a box of side " +
                                  std::to_string(basis->box().L));
    if (frame.M != basis->block_dim()) throw ShapeMismatch("frame orbitals differ from the box");
    std::vector<CVector> functions;
    for (int p = 0; p < frame.nB; ++p) functions.push_back(wannier_on_magnetic_box(frame, basis->setup(), basis->box(), p));
    return frame_kernel(functions, basis);
}

SectorOperator spectral_projection_near_one(const SectorOperator& ptilde, CalculusRoute route) {
    return ptilde.map([route](const CMatrix& b) -> CMatrix {
        const EigenPairs eig = hermitian_eig(b);
        check_dichotomy(eig.values);
        if (route == CalculusRoute::Contour)
            return contour_integral(b, 1.0, 0.5, 128, [](cplx) { return cplx(1.0); });
        return apply_function(eig, [](double x) { return cplx(x > 0.5 ? 1.0 : 0.0); });
    });
}

SectorOperator theta_operator(const SectorOperator& ptilde, CalculusRoute route) {
    return ptilde.map([route](const CMatrix& b) -> CMatrix {
        const EigenPairs eig = hermitian_eig(b);
        check_dichotomy(eig.values);
        if (route == CalculusRoute::Contour)
            return contour_integral(b, 1.0, 0.5, 128, [](cplx z) { return 1.0 / std::sqrt(z); });
        return apply_function(eig, [](double x) { return cplx(x > 0.5 ? 1.0 / std::sqrt(x) : 0.0); });
    });
}

Intertwiner nagy_intertwiner(const SectorOperator& p, const SectorOperator& q) {
    Intertwiner out;
    out.unitary = p;
    for (size_t s = 0; s < p.blocks.size(); ++s) {
        const CMatrix& pb = p.blocks[s];
        const CMatrix& qb = q.blocks[s];
        const CMatrix diff = pb - qb;
        const double dist = peierls::hermitian_norm(diff);
        out.distance = std::max(out.distance, dist);
        if (dist >= 1.0 - 1e-12)
            throw ProjectionsTooFar("||P - Q|| = " + std::to_string(dist) + " is not below 1");
        const CMatrix id = CMatrix::Identity(pb.rows(), pb.cols());
        const EigenPairs eig = hermitian_eig(id - diff * diff);
        const CMatrix inv_sqrt = apply_function(eig, [](double x) { return cplx(1.0 / std::sqrt(x)); });
        out.unitary.blocks[s] = inv_sqrt * (pb * qb + (id - pb) * (id - qb));
        out.remainder = std::max(out.remainder, op_norm(out.unitary.blocks[s] - id));
    }
    return out;
}

SectorOperator MagneticFrame::coordinate_map() const {
    auto coeff = basis->with_block_dim(nB);
    const int ns = basis->sector_count();
    const int cols = basis->cell_sites() * nB;
    std::vector<CMatrix> blocks(static_cast<size_t>(ns), CMatrix(cols, basis->sector_size()));
    const double scale = std::sqrt(double(ns));
    for (int j = 0; j < cols; ++j) {
        const auto parts = basis->decompose(cell_functions[static_cast<size_t>(j)]);
        for (int s = 0; s < ns; ++s)
            blocks[static_cast<size_t>(s)].row(j) = scale * parts[static_cast<size_t>(s)].adjoint();
    }
    return SectorOperator(coeff, basis, std::move(blocks));
}

MagneticFrame build_magnetic_frame(const std::vector<CVector>& functions, int nB,
                                   std::shared_ptr<const ZakSectors> basis, const SectorOperator& target) {
    MagneticFrame out;
    out.basis = basis;
    out.nB = nB;
    const std::vector<CVector> translates = cell_translates(*basis, functions);
    const SectorOperator ptilde = frame_sum(basis, translates, nB);
    out.used_ptilde = true;
    out.ptilde_idempotency = (ptilde * ptilde - ptilde).hermitian_norm();
    const SectorOperator theta = theta_operator(ptilde);
    const SectorOperator q = spectral_projection_near_one(ptilde);
    out.used_q = out.used_theta = true;
    const Intertwiner u = nagy_intertwiner(target, q);
    out.projection_distance = u.distance;
    if (basis->setup().c == 0.0)
        out.used_u = true;
    else
        out.used_w = true;
    const SectorOperator map = u.unitary * theta;
    out.cell_functions.reserve(translates.size());
    for (const auto& f : translates) out.cell_functions.push_back(map.apply(f));
    out.parseval_defect = (frame_sum(basis, out.cell_functions, nB) - target).hermitian_norm();
    return out;
}

MagneticFrame build_magnetic_frame(const WannierFrame& frame, std::shared_ptr<const ZakSectors> basis,
                                   const SectorOperator& target) {
    if (2 * frame.Lw + 1 > basis->box().L)
        throw PaddingInsufficient("frame support radius " + std::to_string(frame.Lw) + " does not fit a box of side " +
                                  std::to_string(basis->box().L));
    std::vector<CVector> functions;
    for (int p = 0; p < frame.nB; ++p) functions.push_back(wannier_on_magnetic_box(frame, basis->setup(), basis->box(), p));
    return build_magnetic_frame(functions, frame.nB, basis, target);
}

StructureReport effective_matrix(const MagneticFrame& frame, const SectorOperator& h, int radius) {
    const LatticeBox& box = frame.basis->box();
    const MagneticSetup& setup = frame.basis->setup();
    const int nB = frame.nB;
    if (box.d != 2) throw NotTwoDimensional("effective_matrix needs a planar box");
    if (radius + 3 >= box.L / 2)
        throw PaddingInsufficient("hopping radius " + std::to_string(radius) + " too large for a box of side " +
                                  std::to_string(box.L));
    const SectorOperator c = frame.coordinate_map();
    const SectorOperator m = c * h * c.adjoint();
    const int half = box.L / 2;
    const Cell center{half, half};

    auto column = [&](const Cell& beta, int q) {
        CVector e = CVector::Zero(Eigen::Index(box.sites()) * nB);
        e(box.index(beta) * nB + q) = 1.0;
        return m.apply(e);
    };
    auto block_at = [&](const std::vector<CVector>& cols, const Cell& alpha) {
        CMatrix b(nB, nB);
        for (int q = 0; q < nB; ++q) b.col(q) = cols[static_cast<size_t>(q)].segment(box.index(alpha) * nB, nB);
        return b;
    };

    StructureReport out;
    out.reference = center;
    out.hoppings.d = 2;
    out.hoppings.n = nB;
    std::vector<CVector> cols;
    for (int q = 0; q < nB; ++q) cols.push_back(column(center, q));
    for (int g0 = -radius; g0 <= radius; ++g0)
        for (int g1 = -radius; g1 <= radius; ++g1) {
            const Cell g{g0, g1};
            const Cell alpha = center + g;
            out.hoppings.blocks[g] =
                std::conj(lambda_total(setup, to_point(alpha), to_point(center))) * block_at(cols, alpha);
        }
    out.hoppings.self_adjoint = h.hermiticity_defect() < 1e-12;
    double shell = 0.0;
    for (const auto& [g, b] : out.hoppings.blocks)
        if (sup_norm(g) == radius) shell = std::max(shell, b.norm());
    out.hoppings.tail = shell;

    const Cell offsets[] = {{1, 0}, {0, 1}, {-2, 1}, {3, -2}};
    for (const Cell& off : offsets) {
        const Cell beta = center + off;
        std::vector<CVector> bcols;
        for (int q = 0; q < nB; ++q) bcols.push_back(column(beta, q));
        for (const auto& [g, mg] : out.hoppings.blocks) {
            const Cell alpha = beta + g;
            const CMatrix expected = lambda_total(setup, to_point(alpha), to_point(beta)) * mg;
            out.violation = std::max(out.violation, (block_at(bcols, alpha) - expected).norm());
        }
    }
    if (setup.c == 0.0 && out.violation > 1e-6)
        throw StructureViolation("phase-stripped frame matrix deviates from a twisted convolution by " +
                                 std::to_string(out.violation));
    return out;
}

EffectiveMagneticOperator magnetic_quantize(const BlockSequence& hoppings,
                                            std::shared_ptr<const ZakSectors> coefficient_basis) {
    if (2 * hoppings.radius() + 1 > coefficient_basis->box().L)
        throw PaddingInsufficient("hopping range " + std::to_string(hoppings.radius()) +
                                  " does not fit a box of side " + std::to_string(coefficient_basis->box().L));
    EffectiveMagneticOperator out;
    out.hoppings = hoppings;
    out.op = SectorOperator::from_kernel(coefficient_basis, hoppings.blocks);
    return out;
}

CMatrix magnetic_quantize_dense(const BlockSequence& hoppings, const MagneticSetup& s, const LatticeBox& box) {
    if (2 * hoppings.radius() + 1 > box.L)
        throw PaddingInsufficient("hopping range " + std::to_string(hoppings.radius()) +
                                  " does not fit a box of side " + std::to_string(box.L));
    return assemble_magnetic_kernel(hoppings.blocks, hoppings.n, box, s);
}

BlockSequence twisted_product(const BlockSequence& s_seq, const BlockSequence& t_seq, const MagneticSetup& setup) {
    if (s_seq.n != t_seq.n || s_seq.d != t_seq.d) throw ShapeMismatch("twisted product needs matching block sizes");
    const MagneticSetup s = constant_part(setup);
    BlockSequence out;
    out.d = s_seq.d;
    out.n = s_seq.n;
    for (const auto& [g, sb] : s_seq.blocks)
        for (const auto& [h, tb] : t_seq.blocks) {
            const Cell alpha = g + h;
            const CMatrix term = lambda_const(s, to_point(g), to_point(alpha)) * (sb * tb);
            auto it = out.blocks.find(alpha);
            if (it == out.blocks.end())
                out.blocks.emplace(alpha, term);
            else
                it->second += term;
        }
    return out;
}

}  // namespace peierls
