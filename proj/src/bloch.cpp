#include "peierls/bloch.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "peierls/errors.hpp"

namespace peierls {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string format_theta(const Point& theta, int d) {
    std::ostringstream os;
    os.precision(6);
    os << "theta=(" << theta(0);
    if (d == 2) os << "," << theta(1);
    os << ")";
    return os.str();
}

BandStructure compute_bands(const HoppingTable& h, const ReciprocalGrid& grid) {
    BandStructure out;
    out.grid = grid;
    out.M = h.M;
    out.values.reserve(static_cast<size_t>(grid.size()));
    out.vectors.reserve(static_cast<size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) {
        EigenPairs eig = hermitian_eig(fiber_hamiltonian(h, grid.theta(i)));
        out.values.push_back(std::move(eig.values));
        out.vectors.push_back(std::move(eig.vectors));
    }
    return out;
}

IsolatedFamily detect_isolated_family(const BandStructure& bands, int k0, int N, double gap_tol) {
    if (k0 < 1 || N < 0 || k0 + N > bands.M)
        throw std::invalid_argument("family indices need 1 <= k0 and k0 + N <= M");
    IsolatedFamily f;
    f.k0 = k0;
    f.N = N;
    f.family_min = kInf;
    f.family_max = -kInf;
    const int lo = k0 - 1;       // 0-based first family band
    const int hi = k0 + N - 1;   // 0-based last family band
    for (int i = 0; i < bands.grid.size(); ++i) {
        const RVector& lam = bands.values[static_cast<size_t>(i)];
        f.family_min = std::min(f.family_min, lam(lo));
        f.family_max = std::max(f.family_max, lam(hi));
        if (lo > 0) {
            f.E_minus = std::max(f.E_minus, lam(lo - 1));
            const double gap = lam(lo) - lam(lo - 1);
            if (gap <= gap_tol)
                throw NotIsolated("lambda_{k0-1} < lambda_{k0} fails at " +
                                  format_theta(bands.grid.theta(i), bands.grid.d) +
                                  " (gap " + std::to_string(gap) + ")");
            f.g_local = std::min(f.g_local, gap);
        }
        if (hi + 1 < bands.M) {
            f.E_plus = std::min(f.E_plus, lam(hi + 1));
            const double gap = lam(hi + 1) - lam(hi);
            if (gap <= gap_tol)
                throw NotIsolated("lambda_{k0+N} < lambda_{k0+N+1} fails at " +
                                  format_theta(bands.grid.theta(i), bands.grid.d) +
                                  " (gap " + std::to_string(gap) + ")");
            f.g_local = std::min(f.g_local, gap);
        }
    }
    if (!(f.E_minus < f.E_plus))
        throw NotIsolated("E_minus = sup lambda_{k0-1} = " + std::to_string(f.E_minus) +
                          " is not below E_plus = inf lambda_{k0+N+1} = " + std::to_string(f.E_plus));
    f.d0 = f.E_plus - f.E_minus;
    return f;
}

CMatrix eigenprojection_riesz(const CMatrix& h, cplx center, double radius, int n_nodes,
                              double dist_tol) {
    const RVector ev = hermitian_eigvals(h);
    const double dist = spectrum_circle_distance(ev, center, radius);
    if (dist < dist_tol)
        throw EigenvalueOnContour("eigenvalue within " + std::to_string(dist) + " of the contour");
    return contour_integral(h, center, radius, n_nodes, [](cplx) { return cplx(1.0); });
}

ProjectionField band_projection_field(const BandStructure& bands, const IsolatedFamily& family,
                                      int riesz_nodes) {
    ProjectionField out;
    out.grid = bands.grid;
    out.M = bands.M;
    out.rank = family.size();
    const int lo = family.k0 - 1, hi = family.k0 + family.N - 1;
    for (int i = 0; i < bands.grid.size(); ++i) {
        const RVector& lam = bands.values[static_cast<size_t>(i)];
        const CMatrix& vec = bands.vectors[static_cast<size_t>(i)];
        const CMatrix cols = vec.middleCols(lo, hi - lo + 1);
        CMatrix p = cols * cols.adjoint();
        CMatrix hb = cols * lam.segment(lo, hi - lo + 1).cast<cplx>().asDiagonal() * cols.adjoint();
        if (riesz_nodes > 0) {
            double gap = kInf;
            if (lo > 0) gap = std::min(gap, lam(lo) - lam(lo - 1));
            if (hi + 1 < bands.M) gap = std::min(gap, lam(hi + 1) - lam(hi));
            if (!std::isfinite(gap)) gap = 2.0;
            const double center = 0.5 * (lam(lo) + lam(hi));
            const double radius = 0.5 * (lam(hi) - lam(lo)) + 0.5 * gap;
            CMatrix hfib = vec * lam.cast<cplx>().asDiagonal() * vec.adjoint();
            CMatrix riesz = eigenprojection_riesz(hfib, center, radius, riesz_nodes);
            out.route_agreement = std::max(out.route_agreement, (riesz - p).cwiseAbs().maxCoeff());
        }
        out.projection.push_back(std::move(p));
        out.band_hamiltonian.push_back(std::move(hb));
    }
    return out;
}

namespace {

cplx link(const CMatrix& a, const CMatrix& b) {
    cplx det = (a.adjoint() * b).determinant();
    const double mag = std::abs(det);
    if (mag < 1e-14) throw std::runtime_error("chern_number: vanishing link variable, grid too coarse");
    return det / mag;
}

}  // namespace

double chern_number_raw(const ProjectionField& field) {
    if (field.grid.d != 2) throw NotTwoDimensional("Chern number needs a two-dimensional grid");
    if (field.grid.nk < 8) throw std::invalid_argument("chern_number: n_k must be >= 8");
    const int nk = field.grid.nk;
    std::vector<CMatrix> frames;
    frames.reserve(static_cast<size_t>(field.grid.size()));
    for (const auto& p : field.projection) frames.push_back(projection_basis(p, true));
    double total = 0.0;
    for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
            const CMatrix& u00 = frames[static_cast<size_t>(field.grid.index({i, j}))];
            const CMatrix& u10 = frames[static_cast<size_t>(field.grid.index({i + 1, j}))];
            const CMatrix& u01 = frames[static_cast<size_t>(field.grid.index({i, j + 1}))];
            const CMatrix& u11 = frames[static_cast<size_t>(field.grid.index({i + 1, j + 1}))];
            const cplx plaquette = link(u00, u10) * link(u10, u11) * std::conj(link(u01, u11)) *
                                   std::conj(link(u00, u01));
            total += std::arg(plaquette);
        }
    return total / kTwoPi;
}

int chern_number(const ProjectionField& field) {
    return static_cast<int>(std::lround(chern_number_raw(field)));
}

BlockSequence grid_fourier(const ReciprocalGrid& grid, const std::vector<CMatrix>& field, int radius) {
    if (radius < 0 || 2 * radius >= grid.nk)
        throw AliasRisk("truncation radius " + std::to_string(radius) + " needs to stay below n_k/2 = " +
                        std::to_string(grid.nk / 2));
    BlockSequence out;
    out.d = grid.d;
    out.n = static_cast<int>(field.front().rows());
    const int cols = static_cast<int>(field.front().cols());
    const double norm = 1.0 / grid.size();
    const int r2 = grid.d == 2 ? radius : 0;
    for (int g0 = -radius; g0 <= radius; ++g0)
        for (int g1 = -r2; g1 <= r2; ++g1) {
            CMatrix acc = CMatrix::Zero(out.n, cols);
            for (int i = 0; i < grid.size(); ++i) {
                const Point th = grid.theta(i);
                acc += std::polar(norm, th(0) * g0 + th(1) * g1) * field[static_cast<size_t>(i)];
            }
            out.blocks[{g0, g1}] = acc;
            if (sup_norm({g0, g1}) == radius) out.tail = std::max(out.tail, op_norm(acc));
        }
    return out;
}

BlockSequence band_kernel(const ProjectionField& field, int radius) {
    BlockSequence k = grid_fourier(field.grid, field.band_hamiltonian, radius);
    k.self_adjoint = true;
    return k;
}

}  // namespace peierls
