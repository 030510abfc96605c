#include "peierls/reduction.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "peierls/errors.hpp"

namespace peierls {

namespace {

// C^4 smoothstep: normalized integral of t^4 (1 - t)^4, coefficients of t^0..t^9.
const std::array<double, 10>& smoothstep_coefficients() {
    static const std::array<double, 10> c = [] {
        std::array<double, 10> out{};
        const double binom[5] = {1, 4, 6, 4, 1};
        for (int j = 0; j <= 4; ++j) out[static_cast<size_t>(5 + j)] = binom[j] * (j % 2 ? -1.0 : 1.0) / (5 + j) * 630.0;
        return out;
    }();
    return c;
}

double smoothstep(double t, int order) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return order == 0 ? 1.0 : 0.0;
    const auto& c = smoothstep_coefficients();
    double sum = 0.0;  // Horner in t over the differentiated coefficients
    for (int p = 9; p >= order; --p) {
        double falling = 1.0;
        for (int k = 0; k < order; ++k) falling *= (p - k);
        sum = sum * t + c[static_cast<size_t>(p)] * falling;
    }
    return sum;
}

// C^2 cutoff in the imaginary direction and its derivative.
double chi(double y) {
    const double a = std::abs(y);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    const double t = a - 1.0;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double chi_prime(double y) {
    const double a = std::abs(y);
    if (a <= 1.0 || a >= 2.0) return 0.0;
    const double t = a - 1.0;
    const double ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    return y > 0 ? -ds : ds;
}

// Panels of [lo, hi] refined geometrically toward `focus` when it lies inside.
// Extra `knots` inside (lo, hi) become panel edges too.
std::vector<std::pair<double, double>> graded_panels(double lo, double hi, int base, double focus, int levels,
                                                     const std::vector<double>& knots = {}) {
    std::vector<double> cuts;
    for (int k = 0; k <= base; ++k) cuts.push_back(lo + (hi - lo) * k / base);
    for (double k : knots)
        if (k > lo && k < hi) cuts.push_back(k);
    if (focus > lo && focus < hi) {
        cuts.push_back(focus);
        const double h = (hi - lo) / base;
        for (int j = 0; j < levels; ++j) {
            const double step = h * std::pow(0.5, j);
            if (focus - step > lo) cuts.push_back(focus - step);
            if (focus + step < hi) cuts.push_back(focus + step);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double x, double y) { return std::abs(x - y) < 1e-15; }),
               cuts.end());
    std::vector<std::pair<double, double>> panels;
    for (size_t k = 0; k + 1 < cuts.size(); ++k) panels.emplace_back(cuts[k], cuts[k + 1]);
    return panels;
}

struct Nodes {
    std::vector<double> x, w;
};

Nodes panel_nodes(const std::vector<std::pair<double, double>>& panels, int per_panel) {
    const Quadrature& q = gauss_legendre_unit(per_panel);
    Nodes out;
    for (const auto& [a, b] : panels)
        for (size_t k = 0; k < q.nodes.size(); ++k) {
            out.x.push_back(a + (b - a) * q.nodes[k]);
            out.w.push_back((b - a) * q.weights[k]);
        }
    return out;
}

double smallest_singular_value(const CMatrix& a) {
    if (a.rows() == 0) return std::numeric_limits<double>::infinity();
    Eigen::BDCSVD<CMatrix> svd(a);
    return svd.singularValues().minCoeff();
}

}  // namespace

SpectralWindow window_from_family(const IsolatedFamily& family, double delta) {
    SpectralWindow w;
    w.a = std::isfinite(family.E_minus) ? family.E_minus : 0.0;
    w.b = std::isfinite(family.E_plus) ? family.E_plus : 2.0 * family.family_max - w.a;
    w.delta = delta < 0.0 ? (w.b - w.a) / 8.0 : delta;
    return w;
}

double spectral_floor(const BandStructure& bands) {
    double low = std::numeric_limits<double>::infinity();
    for (const auto& v : bands.values) low = std::min(low, v(0));
    return low;
}

SectorOperator perturbed_band_projection(const HoppingTable& h_perp, std::shared_ptr<const ZakSectors> basis,
                                         double e0, bool contour_route, double contour_tol) {
    if (!(e0 > 0.0)) throw InvalidModel("the spectral floor E_0 must be positive (apply an energy shift)");
    const double radius = 0.5 * e0;
    SectorOperator out(basis, basis, basis->kernel_blocks(h_perp.kernel()));
    for (auto& b : out.blocks) {
        const EigenPairs eig = hermitian_eig(b);
        const double dist = spectrum_circle_distance(eig.values, 0.0, radius);
        if (dist < contour_tol)
            throw SpectrumOnContour("an eigenvalue of H_perp lies within " + std::to_string(dist) +
                                    " of the circle |z| = " + std::to_string(radius));
        if (contour_route)
            b = contour_integral(b, 0.0, radius, 128, [](cplx) { return cplx(1.0); });
        else
            b = apply_function(eig, [radius](double x) { return cplx(std::abs(x) < radius ? 1.0 : 0.0); });
    }
    return out;
}

SectorOperator effective_hamiltonian(const SectorOperator& p, const SectorOperator& h) { return p * h * p; }

SchurDecomposition schur_resolvent(const CMatrix& h, const CMatrix& p, cplx z, double singular_tol) {
    if (h.rows() != h.cols() || p.rows() != h.rows() || p.cols() != h.cols())
        throw ShapeMismatch("H and P must be square of equal size");
    SchurDecomposition out;
    out.z = z;
    out.range_basis = projection_basis(p, true);
    out.complement_basis = projection_basis(p, false);
    const CMatrix& vp = out.range_basis;
    const CMatrix& vq = out.complement_basis;
    const CMatrix a = vp.adjoint() * h * vp;
    const CMatrix b = vp.adjoint() * h * vq;
    const CMatrix d = vq.adjoint() * h * vq;
    const Eigen::Index np = a.rows(), nq = d.rows();

    const CMatrix dz = d - z * CMatrix::Identity(nq, nq);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (nq > 0 && smallest_singular_value(dz) < singular_tol * scale)
        throw SingularBlock("complement block (1-P)(H-z)(1-P) is singular at z = (" + std::to_string(z.real()) +
                            "," + std::to_string(z.imag()) + ")");
    out.r_perp = nq > 0 ? CMatrix(dz.partialPivLu().inverse()) : CMatrix(0, 0);
    out.coupling = b * out.r_perp * b.adjoint();
    const CMatrix reduced = a - z * CMatrix::Identity(np, np) - out.coupling;
    if (np > 0 && smallest_singular_value(reduced) < singular_tol * scale)
        throw SingularBlock("reduced block P(H-z)P - PHR_perp HP is singular at z = (" +
                            std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")");
    out.r_tilde = np > 0 ? CMatrix(reduced.partialPivLu().inverse()) : CMatrix(0, 0);

    CMatrix blocks(np + nq, np + nq);
    blocks.topLeftCorner(np, np) = out.r_tilde;
    blocks.topRightCorner(np, nq) = -out.r_tilde * b * out.r_perp;
    blocks.bottomLeftCorner(nq, np) = -out.r_perp * b.adjoint() * out.r_tilde;
    blocks.bottomRightCorner(nq, nq) = out.r_perp + out.r_perp * b.adjoint() * out.r_tilde * b * out.r_perp;
    CMatrix w(h.rows(), np + nq);
    w << vp, vq;
    out.assembled = w * blocks * w.adjoint();
    out.coupling_norm = np > 0 ? op_norm(out.coupling) : 0.0;
    out.off_diagonal_norm = (np > 0 && nq > 0) ? op_norm(b) : 0.0;
    out.r_perp_norm = nq > 0 ? op_norm(out.r_perp) : 0.0;
    return out;
}

SchurSpectrumReport schur_spectrum_check(const CMatrix& h, const CMatrix& p, double j_lo, double j_hi,
                                         int grid_points, double floor_tol) {
    SchurSpectrumReport rep;
    const CMatrix vp = projection_basis(p, true);
    const CMatrix vq = projection_basis(p, false);
    const CMatrix a = vp.adjoint() * h * vp;
    const CMatrix b = vp.adjoint() * h * vq;
    const CMatrix d = vq.adjoint() * h * vq;
    const Eigen::Index np = a.rows(), nq = d.rows();

    // With d = W diag(w) W^dagger the reduced operator is
    // a - t - (bW) (w - t)^{-1} (bW)^dagger. Its eigenvalues strictly decrease in t.
    const EigenPairs dec = nq > 0 ? hermitian_eig(d) : EigenPairs{};
    const CMatrix bw = nq > 0 ? CMatrix(b * dec.vectors) : CMatrix(np, 0);
    auto reduced_eigs = [&](double t) {
        CMatrix red = a - t * CMatrix::Identity(np, np);
        if (nq > 0) {
            const RVector inv = (dec.values.array() - t).inverse().matrix();
            red.noalias() -= bw * inv.asDiagonal() * bw.adjoint();
        }
        return hermitian_eigvals(0.5 * (red + red.adjoint()));
    };
    auto reduced_value = [&](double t) { return reduced_eigs(t).cwiseAbs().minCoeff(); };
    auto complement_gap = [&](double t) {
        return nq > 0 ? (dec.values.array() - t).abs().minCoeff() : std::numeric_limits<double>::infinity();
    };

    rep.complement_floor = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid_points; ++k)
        rep.complement_floor = std::min(rep.complement_floor, complement_gap(j_lo + (j_hi - j_lo) * k / (grid_points - 1)));
    if (rep.complement_floor < floor_tol)
        throw ConditionTwoFails("complement block (1-P)(H-t)(1-P) nearly singular on the window: floor " +
                                std::to_string(rep.complement_floor));
    std::vector<RVector> branches;
    for (int k = 0; k < grid_points; ++k) {
        const double t = j_lo + (j_hi - j_lo) * k / (grid_points - 1);
        branches.push_back(reduced_eigs(t));
        rep.t_grid.push_back(t);
        rep.singular_values.push_back(branches.back().cwiseAbs().minCoeff());
    }

    const RVector ev = hermitian_eigvals(h);
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev(k) < j_lo || ev(k) > j_hi) continue;
        rep.eigenvalues.push_back(ev(k));
        rep.eigen_residuals.push_back(reduced_value(ev(k)));
    }

    // The i-th sorted reduced eigenvalue is continuous and strictly decreasing
    // on the window, so it has at most one zero there. Bracket it on the grid
    // and refine by regula falsi (Illinois); degenerate roots come out with
    // their multiplicity.
    const double h_grid = (j_hi - j_lo) / (grid_points - 1);
    for (Eigen::Index i = 0; i < np; ++i) {
        if (branches.front()(i) < 0.0 || branches.back()(i) > 0.0) continue;
        size_t k = 0;
        while (k + 1 < branches.size() && branches[k + 1](i) > 0.0) ++k;
        double lo = rep.t_grid[k], hi = rep.t_grid[std::min(k + 1, branches.size() - 1)];
        double flo = branches[k](i), fhi = branches[std::min(k + 1, branches.size() - 1)](i);
        double root = flo == 0.0 ? lo : hi;
        if (flo > 0.0 && fhi < 0.0) {
            int side = 0;
            for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
                root = (lo * fhi - hi * flo) / (fhi - flo);
                const double f = reduced_eigs(root)(i);
                if (f == 0.0) break;
                if (f > 0.0) {
                    lo = root, flo = f;
                    if (side == -1) fhi *= 0.5;
                    side = -1;
                } else {
                    hi = root, fhi = f;
                    if (side == 1) flo *= 0.5;
                    side = 1;
                }
                if (std::abs(f) < 1e-14) break;
            }
        }
        rep.roots.push_back(root);
    }
    std::sort(rep.roots.begin(), rep.roots.end());

    std::vector<bool> used(rep.roots.size(), false);
    for (size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        int best = -1;
        double best_dist = 2.0 * h_grid;
        for (size_t r = 0; r < rep.roots.size(); ++r) {
            const double dist = std::abs(rep.roots[r] - rep.eigenvalues[i]);
            if (!used[r] && dist <= best_dist) { best = static_cast<int>(r); best_dist = dist; }
        }
        if (best >= 0) {
            used[static_cast<size_t>(best)] = true;
            rep.matching.emplace_back(static_cast<int>(i), best);
        }
    }
    rep.bijective = rep.matching.size() == rep.eigenvalues.size() && rep.matching.size() == rep.roots.size();
    return rep;
}

CompactFunction CompactFunction::zero() {
    CompactFunction f;
    f.eval = [](double, int) { return 0.0; };
    return f;
}

CompactFunction CompactFunction::bump(double lo, double hi, double ramp) {
    if (!(hi - lo >= 2.0 * ramp && ramp > 0.0)) throw std::invalid_argument("bump needs hi - lo >= 2 ramp > 0");
    CompactFunction f;
    f.lo = lo;
    f.hi = hi;
    f.knots = {lo + ramp, hi - ramp};
    f.eval = [lo, hi, ramp](double x, int order) {
        const double u = (x - lo) / ramp, v = (hi - x) / ramp;
        double sum = 0.0, binom = 1.0;
        for (int k = 0; k <= order; ++k) {
            if (k > 0) binom = binom * (order - k + 1) / k;
            const double left = smoothstep(u, k) / std::pow(ramp, k);
            const double right = smoothstep(v, order - k) * std::pow(-1.0 / ramp, order - k);
            sum += binom * left * right;
        }
        return sum;
    };
    return f;
}

CompactFunction CompactFunction::operator+(const CompactFunction& o) const {
    CompactFunction f;
    f.lo = std::min(lo, o.lo);
    f.hi = std::max(hi, o.hi);
    f.knots = knots;
    f.knots.insert(f.knots.end(), o.knots.begin(), o.knots.end());
    for (double k : {lo, hi, o.lo, o.hi}) f.knots.push_back(k);
    auto a = eval, b = o.eval;
    f.eval = [a, b](double x, int k) { return a(x, k) + b(x, k); };
    return f;
}

CompactFunction CompactFunction::operator*(double s) const {
    CompactFunction f = *this;
    auto a = eval;
    f.eval = [a, s](double x, int k) { return s * a(x, k); };
    return f;
}

double hs_scalar(double lambda, const CompactFunction& phi, int order) {
    if (!(phi.hi > phi.lo)) return 0.0;
    const int per_panel = 10;
    const Nodes xs = panel_nodes(graded_panels(phi.lo, phi.hi, 16, lambda, 30, phi.knots), per_panel);
    std::vector<std::pair<double, double>> ypanels;
    for (const auto& pan : graded_panels(-2.0, 2.0, 4, 0.0, 30)) ypanels.push_back(pan);
    const Nodes ys = panel_nodes(ypanels, per_panel);

    std::vector<double> factorial(static_cast<size_t>(order + 2), 1.0);
    for (int k = 1; k <= order + 1; ++k) factorial[static_cast<size_t>(k)] = factorial[static_cast<size_t>(k - 1)] * k;
    std::vector<std::vector<double>> deriv(xs.x.size(), std::vector<double>(static_cast<size_t>(order + 2)));
    for (size_t i = 0; i < xs.x.size(); ++i)
        for (int k = 0; k <= order + 1; ++k) deriv[i][static_cast<size_t>(k)] = phi.eval(xs.x[i], k);

    cplx total = 0.0;
    for (size_t j = 0; j < ys.x.size(); ++j) {
        const double y = ys.x[j];
        const double c0 = chi(y), c1 = chi_prime(y);
        std::vector<cplx> iy_pow(static_cast<size_t>(order + 1), 1.0);
        for (int k = 1; k <= order; ++k) iy_pow[static_cast<size_t>(k)] = iy_pow[static_cast<size_t>(k - 1)] * cplx(0.0, y);
        cplx row = 0.0;
        for (size_t i = 0; i < xs.x.size(); ++i) {
            const auto& dv = deriv[i];
            cplx dbar = dv[static_cast<size_t>(order + 1)] * iy_pow[static_cast<size_t>(order)] /
                        factorial[static_cast<size_t>(order)] * c0;
            if (c1 != 0.0) {
                cplx series = 0.0;
                for (int k = 0; k <= order; ++k)
                    series += dv[static_cast<size_t>(k)] * iy_pow[static_cast<size_t>(k)] / factorial[static_cast<size_t>(k)];
                dbar += cplx(0.0, 1.0) * c1 * series;
            }
            row += xs.w[i] * 0.5 * dbar / (lambda - cplx(xs.x[i], y));
        }
        total += ys.w[j] * row;
    }
    return (total / kPi).real();
}

CMatrix hs_function_of_matrix(const CMatrix& h, const CompactFunction& phi, int order) {
    const EigenPairs eig = hermitian_eig(h);
    return apply_function(eig, [&](double x) { return cplx(hs_scalar(x, phi, order)); });
}

CMatrix spectral_function_of_matrix(const CMatrix& h, const std::function<double(double)>& f) {
    const EigenPairs eig = hermitian_eig(h);
    return apply_function(eig, [&](double x) { return cplx(f(x)); });
}

double band_window_estimate(const SectorOperator& p, const SectorOperator& h, const CompactFunction& phi,
                            const SpectralWindow& window) {
    if (phi.hi > phi.lo && (phi.lo < window.inner_lo() || phi.hi > window.inner_hi()))
        throw SupportViolation("support [" + std::to_string(phi.lo) + ", " + std::to_string(phi.hi) +
                               "] is not inside the window (" + std::to_string(window.inner_lo()) + ", " +
                               std::to_string(window.inner_hi()) + ")");
    double worst = 0.0;
    for (size_t s = 0; s < h.blocks.size(); ++s) {
        const CMatrix f = spectral_function_of_matrix(h.blocks[s], [&](double x) { return phi.eval(x, 0); });
        worst = std::max(worst, op_norm(p.blocks[s] * f - f));
    }
    return worst;
}

}  // namespace peierls
