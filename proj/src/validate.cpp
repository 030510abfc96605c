#include "peierls/validate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "peierls/errors.hpp"

namespace peierls {

SpectrumSet SpectrumSet::make(std::vector<double> values, std::string source) {
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("spectrum contains a non-finite value");
    std::sort(values.begin(), values.end());
    return SpectrumSet{std::move(values), std::move(source)};
}

namespace {

double distance_to_set(double x, const std::vector<double>& sorted) {
    if (sorted.empty()) return std::numeric_limits<double>::infinity();
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    double best = std::numeric_limits<double>::infinity();
    if (it != sorted.end()) best = *it - x;
    if (it != sorted.begin()) best = std::min(best, x - *(it - 1));
    return best;
}

std::vector<double> clip(const std::vector<double>& v, double lo, double hi) {
    std::vector<double> out;
    for (double x : v)
        if (x >= lo && x <= hi) out.push_back(x);
    return out;
}

}  // namespace

double hausdorff_in_window(const SpectrumSet& s1, const SpectrumSet& s2, double j_lo, double j_hi) {
    const auto a = clip(s1.values, j_lo, j_hi);
    const auto b = clip(s2.values, j_lo, j_hi);
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty())
        throw OneSideEmpty(std::string(a.empty() ? s1.source : s2.source) + " spectrum has no point in [" +
                           std::to_string(j_lo) + ", " + std::to_string(j_hi) + "]");
    double d = 0.0;
    for (double x : a) d = std::max(d, distance_to_set(x, s2.values));
    for (double y : b) d = std::max(d, distance_to_set(y, s1.values));
    return d;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log-log fit needs matching series of length >= 2");
    LogLogFit f;
    f.points = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("log-log fit needs positive data");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        sx += lx.back();
        sy += ly.back();
        sxx += lx.back() * lx.back();
        sxy += lx.back() * ly.back();
    }
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (f.intercept + f.slope * lx[i]);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

ScalingReport make_scaling_report(std::string metric, std::vector<double> parameters, std::vector<double> values,
                                  std::string fingerprint) {
    ScalingReport r;
    r.metric = std::move(metric);
    r.fit = fit_loglog(parameters, values);
    r.parameters = std::move(parameters);
    r.values = std::move(values);
    r.fingerprint = std::move(fingerprint);
    return r;
}

EnvelopeFit fit_envelope(const std::vector<double>& t, const std::vector<double>& err, double exponent) {
    EnvelopeFit f;
    f.exponent = exponent;
    // Relative weights: minimize sum ((a + b s_i) / e_i - 1)^2.
    double s00 = 0, s01 = 0, s11 = 0, r0 = 0, r1 = 0;
    std::vector<double> s(t.size()), w(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        s[i] = std::pow(1.0 + std::abs(t[i]), exponent);
        w[i] = err[i] > 0.0 ? 1.0 / err[i] : 0.0;
        s00 += w[i] * w[i];
        s01 += w[i] * w[i] * s[i];
        s11 += w[i] * w[i] * s[i] * s[i];
        r0 += w[i];
        r1 += w[i] * s[i];
    }
    const double det = s00 * s11 - s01 * s01;
    f.a = (r0 * s11 - r1 * s01) / det;
    f.b = (s00 * r1 - s01 * r0) / det;
    if (f.a < 0.0) {
        f.a = 0.0;
        f.b = r1 / s11;
    }
    if (f.b < 0.0) {
        f.b = 0.0;
        f.a = r0 / s00;
    }
    double ss = 0.0;
    int count = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (w[i] == 0.0) continue;
        const double r = (f.a + f.b * s[i]) * w[i] - 1.0;
        ss += r * r;
        ++count;
    }
    f.residual = count ? std::sqrt(ss / count) : 0.0;
    return f;
}

std::vector<double> harper_oracle(int p, int q, int L, double t, double onsite) {
    if (q < 1 || L % q != 0) throw IncommensurateFlux("torus side must be a multiple of q");
    const double phi = kTwoPi * p / q;
    std::vector<double> out;
    out.reserve(static_cast<size_t>(L) * L);
    for (int i1 = 0; i1 < L / q; ++i1)
        for (int i2 = 0; i2 < L; ++i2) {
            const double k1 = kTwoPi * i1 / L, k2 = kTwoPi * i2 / L;
            CMatrix m = CMatrix::Zero(q, q);
            for (int j = 0; j < q; ++j) {
                m(j, j) += 2.0 * t * std::cos(k2 + phi * j) + onsite;
                const int next = (j + 1) % q;
                const cplx hop = t * std::polar(1.0, j + 1 == q ? q * k1 : 0.0);
                m(next, j) += hop;
                m(j, next) += std::conj(hop);
            }
            const RVector ev = hermitian_eigvals(m);
            out.insert(out.end(), ev.data(), ev.data() + ev.size());
        }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ButterflyRow> butterfly_sweep(const BlockSequence& hoppings, const std::vector<std::pair<int, int>>& fluxes,
                                          int L) {
    if (hoppings.d != 2) throw NotTwoDimensional("butterfly sweeps need a planar model");
    if (2 * hoppings.radius() + 1 > L) throw PaddingInsufficient("hopping range does not fit the box");
    std::vector<ButterflyRow> rows;
    const LatticeBox box{2, L, Boundary::MagneticPeriodic};
    for (const auto& [p, q] : fluxes) {
        MagneticSetup s;
        s.field = ConstantField::plane(1.0);
        s.eps = kTwoPi * p / q;
        const auto basis = ZakSectors::adapted(box, hoppings.n, s);
        for (double e : basis->kernel_eigenvalues(hoppings.blocks)) rows.push_back({p, q, e});
    }
    return rows;
}

CVector evolve(const CMatrix& h, const CVector& v, double t) {
    const EigenPairs eig = hermitian_eig(h);
    CVector coeff = eig.vectors.adjoint() * v;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -t * eig.values(k));
    return eig.vectors * coeff;
}

SectorPropagator::SectorPropagator(const SectorOperator& h) : basis_(h.rows) {
    eig_.reserve(h.blocks.size());
    for (const auto& b : h.blocks) eig_.push_back(hermitian_eig(b));
}

CVector SectorPropagator::apply(const CVector& full, double t) const {
    auto parts = basis_->decompose(full);
    for (size_t s = 0; s < parts.size(); ++s) {
        CVector coeff = eig_[s].vectors.adjoint() * parts[s];
        for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -t * eig_[s].values(k));
        parts[s] = eig_[s].vectors * coeff;
    }
    return basis_->compose(parts);
}

SpectralPoint spectral_point(const UnperturbedModel& model, const ReducedPoint& base, double c) {
    SpectralPoint out;
    out.eps = base.band.setup.eps;
    out.c = c;
    const int nB = base.frame.nB;
    std::vector<double> full, effective;
    if (c == 0.0) {
        full = base.band.h.eigenvalues();
        effective = magnetic_quantize(base.matrix.hoppings, base.frame.basis->with_block_dim(nB)).op.eigenvalues();
    } else {
        MagneticSetup s = base.band.setup;
        s.c = c;
        const LatticeBox box = pipeline_box(model.options);
        full = ZakSectors::adapted(box, model.options.model.M, s)->kernel_eigenvalues(model.options.model.kernel());
        if (2 * base.matrix.hoppings.radius() + 1 > box.L) throw PaddingInsufficient("hopping range does not fit the box");
        effective = ZakSectors::adapted(box, nB, s)->kernel_eigenvalues(base.matrix.hoppings.blocks);
    }
    const double lo = model.window.J_lo(), hi = model.window.J_hi();
    const SpectrumSet a = SpectrumSet::make(std::move(full), "full");
    const SpectrumSet b = SpectrumSet::make(std::move(effective), "effective");
    out.hausdorff = hausdorff_in_window(a, b, lo, hi);
    out.full_in_window = static_cast<int>(clip(a.values, lo, hi).size());
    out.effective_in_window = static_cast<int>(clip(b.values, lo, hi).size());
    return out;
}

ScalingReport spectral_comparison(const UnperturbedModel& model, const std::vector<int>& ks, double c,
                                  std::vector<SpectralPoint>* points) {
    std::vector<double> eps, dist;
    for (int k : ks) {
        const ReducedPoint base = reduced_point(model, flux_setup(model.options, k, 0.0));
        SpectralPoint sp = spectral_point(model, base, c);
        sp.k = k;
        eps.push_back(sp.eps);
        dist.push_back(sp.hausdorff);
        if (points) points->push_back(sp);
    }
    return make_scaling_report(c == 0.0 ? "hausdorff_c0" : "hausdorff_c", eps, dist);
}

DynamicsTable dynamics_comparison(const UnperturbedModel& model, const ReducedPoint& point,
                                  const std::vector<double>& times, std::uint64_t seed) {
    DynamicsTable out;
    out.eps = point.band.setup.eps;
    out.times = times;
    const auto& basis = point.band.basis;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CVector r(basis->full_size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        r(i) = cplx(re, im);
    }
    const double lo = model.window.J_lo(), hi = model.window.J_hi();
    const SectorOperator window_proj = point.band.h.map([lo, hi](const CMatrix& b) -> CMatrix {
        return apply_function(hermitian_eig(b), [lo, hi](double x) { return cplx(x >= lo && x <= hi ? 1.0 : 0.0); });
    });
    CVector v = point.band.p.apply(window_proj.apply(r));
    if (v.norm() == 0.0) throw OneSideEmpty("no spectrum of H in the window");
    v.normalize();

    const SectorOperator c = point.frame.coordinate_map();
    const EffectiveMagneticOperator op = magnetic_quantize(point.matrix.hoppings, c.rows);
    const SectorPropagator full(point.band.h);
    const SectorPropagator effective(op.op);
    const CVector coeffs = c.apply(point.band.p.apply(v));
    const SectorOperator lift = c.adjoint();
    for (double t : times) {
        const CVector exact = full.apply(v, t);
        const CVector reduced = lift.apply(effective.apply(coeffs, t));
        out.errors.push_back((exact - reduced).norm());
    }
    return out;
}

}  // namespace peierls
