#include "peierls/frames.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "peierls/errors.hpp"

namespace peierls {

CVector WannierFrame::function(int p, const Cell& g) const {
    auto it = values.find(g);
    if (it == values.end()) return CVector::Zero(M);
    return it->second.col(p);
}

CMatrix seed_vectors(int M, int nB, std::uint64_t seed) {
    CMatrix v = CMatrix::Zero(M, nB);
    std::mt19937_64 rng(seed == 0 ? 0x9e3779b97f4a7c15ULL : seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int p = 0; p < nB; ++p) {
        if (seed == 0 && p < M) {
            v(p, p) = 1.0;
            continue;
        }
        for (int m = 0; m < M; ++m) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            v(m, p) = cplx(re, im);
        }
        v.col(p).normalize();
    }
    return v;
}

CandidateSections seed_candidates(const ProjectionField& field, const CMatrix& seeds) {
    if (seeds.rows() != field.M) throw ShapeMismatch("seed vectors must have M components");
    if (seeds.cols() < field.rank)
        throw std::invalid_argument("n_B must be at least the family size N+1");
    CandidateSections c;
    c.field = &field;
    c.nB = static_cast<int>(seeds.cols());
    c.seeds = seeds;
    c.phi.reserve(field.projection.size());
    for (const auto& p : field.projection) c.phi.push_back(p * seeds);
    return c;
}

CandidateSections seed_candidates(const ProjectionField& field, int nB, std::uint64_t seed) {
    return seed_candidates(field, seed_vectors(field.M, nB, seed));
}

FrameBound frame_lower_bound(const CandidateSections& candidates) {
    FrameBound b;
    b.value = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < candidates.phi.size(); ++i) {
        const CMatrix v = projection_basis(candidates.field->projection[i], true);
        const CMatrix x = v.adjoint() * candidates.phi[i];
        const RVector ev = hermitian_eigvals(x * x.adjoint());
        const double low = ev.size() ? std::max(0.0, ev(0)) : 0.0;
        if (low < b.value) {
            b.value = low;
            b.worst_index = static_cast<int>(i);
        }
    }
    return b;
}

FrameField parsevalize(const CandidateSections& candidates, double a_min) {
    const ProjectionField& field = *candidates.field;
    FrameField out;
    out.grid = field.grid;
    out.M = field.M;
    out.nB = candidates.nB;
    out.lower_bound = std::numeric_limits<double>::infinity();
    out.sections.reserve(candidates.phi.size());
    for (size_t i = 0; i < candidates.phi.size(); ++i) {
        const CMatrix v = projection_basis(field.projection[i], true);
        const CMatrix x = v.adjoint() * candidates.phi[i];
        const EigenPairs eig = hermitian_eig(x * x.adjoint());
        const double low = eig.values.size() ? eig.values(0) : 0.0;
        out.lower_bound = std::min(out.lower_bound, low);
        if (low < a_min)
            throw FrameDeficient("frame bound " + std::to_string(low) + " below A_min=" +
                                 std::to_string(a_min) + " at " +
                                 format_theta(field.grid.theta(static_cast<int>(i)), field.grid.d) +
                                 "; try n_B=" + std::to_string(candidates.nB + 1));
        const CMatrix inv_sqrt = apply_function(eig, [](double s) { return cplx(1.0 / std::sqrt(s)); });
        out.sections.push_back(v * inv_sqrt * x);
    }
    const double mesh = kTwoPi / field.grid.nk;
    for (int i = 0; i < field.grid.size(); ++i) {
        const Cell c = field.grid.coords(i);
        for (int axis = 0; axis < field.grid.d; ++axis) {
            Cell next = c;
            next[static_cast<size_t>(axis)] += 1;
            const double diff =
                (out.sections[static_cast<size_t>(field.grid.index(next))] - out.sections[static_cast<size_t>(i)]).norm();
            out.smoothness = std::max(out.smoothness, diff / mesh);
        }
    }
    return out;
}

double parseval_defect(const FrameField& frame, const ProjectionField& field) {
    double worst = 0.0;
    for (size_t i = 0; i < frame.sections.size(); ++i) {
        const CMatrix diff = frame.sections[i] * frame.sections[i].adjoint() - field.projection[i];
        worst = std::max(worst, op_norm(diff));
    }
    return worst;
}

FrameSearch search_frame(const ProjectionField& field, int nB_start, std::uint64_t seed, double a_min) {
    if (nB_start < field.rank)
        throw std::invalid_argument("nB_start must be at least the family size N+1");
    const int bound = field.rank + (field.grid.d + 1) / 2;
    const int cap = bound + 2;
    FrameSearch out;
    for (int nB = nB_start; nB <= cap; ++nB) {
        try {
            out.frame = parsevalize(seed_candidates(field, nB, seed), a_min);
            out.nB = nB;
            out.beyond_bound = nB > bound;
            if (out.beyond_bound)
                out.log.push_back("warning: n_B=" + std::to_string(nB) + " exceeds N+1+ceil(d/2)=" +
                                  std::to_string(bound));
            return out;
        } catch (const FrameDeficient& e) {
            out.log.push_back("warning: n_B=" + std::to_string(nB) + " deficient (" + e.what() + ")");
            if (nB == cap) throw;
        }
    }
    throw FrameDeficient("frame search exhausted");
}

WannierFrame to_wannier(const FrameField& frame, int Lw) {
    BlockSequence seq = grid_fourier(frame.grid, frame.sections, Lw);
    WannierFrame w;
    w.d = frame.grid.d;
    w.M = frame.M;
    w.nB = frame.nB;
    w.Lw = Lw;
    w.values = std::move(seq.blocks);
    w.decay_profile.assign(static_cast<size_t>(Lw + 1), 0.0);
    w.norms.assign(static_cast<size_t>(frame.nB), 0.0);
    for (const auto& [g, block] : w.values) {
        const size_t r = static_cast<size_t>(sup_norm(g));
        for (int p = 0; p < w.nB; ++p) {
            const double n = block.col(p).norm();
            w.decay_profile[r] = std::max(w.decay_profile[r], n);
            w.norms[static_cast<size_t>(p)] += n * n;
        }
    }
    return w;
}

CVector periodic_translate(const LatticeBox& box, int block_dim, const CVector& f, const Cell& g) {
    CVector out(f.size());
    for (int ix = 0; ix < box.sites(); ++ix) {
        const Cell src = box.reduce(box.site(ix) - g).first;
        out.segment(ix * block_dim, block_dim) = f.segment(box.index(src) * block_dim, block_dim);
    }
    return out;
}

CVector wannier_on_box(const WannierFrame& frame, const LatticeBox& box, int p) {
    CVector f = CVector::Zero(Eigen::Index(box.sites()) * frame.M);
    for (const auto& [g, block] : frame.values) {
        const Cell x = box.reduce(g).first;
        f.segment(box.index(x) * frame.M, frame.M) += block.col(p);
    }
    return f;
}

CVector coordinate_map(const WannierFrame& frame, const LatticeBox& box, const CVector& f) {
    CVector out = CVector::Zero(Eigen::Index(box.sites()) * frame.nB);
    for (int ia = 0; ia < box.sites(); ++ia) {
        const Cell alpha = box.site(ia);
        for (const auto& [g, block] : frame.values) {
            const Cell x = box.reduce(alpha + g).first;
            const auto fx = f.segment(box.index(x) * frame.M, frame.M);
            for (int p = 0; p < frame.nB; ++p)
                out(ia * frame.nB + p) += block.col(p).dot(fx);  // conj(psi) . f
        }
    }
    return out;
}

CVector coordinate_map_adjoint(const WannierFrame& frame, const LatticeBox& box, const CVector& coeffs) {
    CVector out = CVector::Zero(Eigen::Index(box.sites()) * frame.M);
    for (int ia = 0; ia < box.sites(); ++ia) {
        const Cell alpha = box.site(ia);
        for (const auto& [g, block] : frame.values) {
            const Cell x = box.reduce(alpha + g).first;
            for (int p = 0; p < frame.nB; ++p)
                out.segment(box.index(x) * frame.M, frame.M) += coeffs(ia * frame.nB + p) * block.col(p);
        }
    }
    return out;
}

MatrixRep matrix_rep(const FrameField& frame, const WannierFrame& wannier, const DenseOperator& t,
                     int radius) {
    const LatticeBox& box = t.box;
    const int M = t.orbitals;
    if (box.boundary != Boundary::MagneticPeriodic || box.L != frame.grid.nk || M != frame.M)
        throw ShapeMismatch("matrix_rep needs a periodic box of side n_k with matching orbitals");
    // Translation invariance: T[x+e, y+e] = T[x, y].
    double defect = 0.0;
    for (int axis = 0; axis < box.d; ++axis) {
        Cell e{axis == 0 ? 1 : 0, axis == 1 ? 1 : 0};
        for (int ix = 0; ix < box.sites(); ++ix)
            for (int iy = 0; iy < box.sites(); ++iy) {
                const int jx = box.index(box.reduce(box.site(ix) + e).first);
                const int jy = box.index(box.reduce(box.site(iy) + e).first);
                defect = std::max(defect, (t.matrix.block(jx * M, jy * M, M, M) -
                                           t.matrix.block(ix * M, iy * M, M, M)).cwiseAbs().maxCoeff());
            }
    }
    if (defect > 1e-9)
        throw NotTranslationInvariant("operator changes by " + std::to_string(defect) +
                                      " under a lattice translation");

    // Reciprocal route: fiber T(theta) = sum_g e^{-i theta g} T[0, -g].
    std::vector<CMatrix> mhat;
    for (int i = 0; i < frame.grid.size(); ++i) {
        const Point th = frame.grid.theta(i);
        CMatrix fiber = CMatrix::Zero(M, M);
        for (int iy = 0; iy < box.sites(); ++iy) {
            const Cell y = box.site(iy);
            const Cell g = -y;  // x - y with x = 0
            fiber += std::polar(1.0, -(th(0) * g[0] + th(1) * g[1])) * t.matrix.block(0, iy * M, M, M);
        }
        const CMatrix& psi = frame.sections[static_cast<size_t>(i)];
        mhat.push_back(psi.adjoint() * fiber * psi);
    }
    MatrixRep out;
    out.hoppings = grid_fourier(frame.grid, mhat, radius);
    out.hoppings.self_adjoint = (t.matrix - t.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-12;

    // Real-space route: (tau_g psi_p, T psi_q).
    std::vector<CVector> tpsi;
    for (int q = 0; q < frame.nB; ++q) tpsi.push_back(t.matrix * wannier_on_box(wannier, box, q));
    for (const auto& [g, block] : out.hoppings.blocks) {
        for (int p = 0; p < frame.nB; ++p) {
            const CVector shifted = periodic_translate(box, M, wannier_on_box(wannier, box, p), g);
            for (int q = 0; q < frame.nB; ++q)
                out.route_agreement = std::max(out.route_agreement,
                                               std::abs(shifted.dot(tpsi[static_cast<size_t>(q)]) - block(p, q)));
        }
    }
    return out;
}

BlockSequence effective_hoppings_unperturbed(const FrameField& frame, const ProjectionField& field,
                                             int radius) {
    std::vector<CMatrix> mhat;
    mhat.reserve(frame.sections.size());
    for (size_t i = 0; i < frame.sections.size(); ++i)
        mhat.push_back(frame.sections[i].adjoint() * field.band_hamiltonian[i] * frame.sections[i]);
    BlockSequence m = grid_fourier(frame.grid, mhat, radius);
    m.self_adjoint = true;
    return m;
}

}  // namespace peierls
