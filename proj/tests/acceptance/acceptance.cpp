// Acceptance run: one PASS/FAIL line per criterion, each at its stated
// tolerance and runtime budget. Criteria listed with --known-failure still
// print their real verdict; they only change the exit code (an unexpected
// pass is reported as an error so the list stays honest).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "peierls/config.hpp"
#include "peierls/errors.hpp"
#include "peierls/validate.hpp"

using namespace peierls;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

bool in_range(double x, double lo, double hi) { return x >= lo && x <= hi; }

CMatrix random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
    return 0.5 * (a + a.adjoint());
}

CMatrix random_projection(int n, int rank, std::mt19937_64& rng) {
    const EigenPairs e = hermitian_eig(random_hermitian(n, rng));
    const CMatrix v = e.vectors.leftCols(rank);
    return v * v.adjoint();
}

ProjectionField lower_band_field(const PipelineOptions& o, int nk) {
    const BandStructure b = compute_bands(o.model, ReciprocalGrid(2, nk));
    return band_projection_field(b, detect_isolated_family(b, o.k0, o.N));
}

// ---------------------------------------------------------------------------

Verdict parseval_certificate(const PipelineOptions& o) {
    const ProjectionField f = lower_band_field(o, 32);
    const FrameField frame = parsevalize(seed_candidates(f, 2, 0), o.a_min);
    const double defect = parseval_defect(frame, f);
    return {defect <= 1e-10, "defect " + fmt("%.2e", defect) + " (tol 1e-10)"};
}

Verdict nontriviality_witness(const PipelineOptions& o) {
    const ProjectionField f32 = lower_band_field(o, 32);
    const ProjectionField f64 = lower_band_field(o, 64);
    const int c32 = chern_number(f32), c64 = chern_number(f64);
    int deficient = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        try {
            parsevalize(seed_candidates(f64, 1, seed), o.a_min);
        } catch (const FrameDeficient&) {
            ++deficient;
        }
    }
    const bool pass = std::abs(c32) == 1 && c32 == c64 && deficient == 5;
    return {pass, "chern " + std::to_string(c32) + " (n_k 32), " + std::to_string(c64) + " (n_k 64); n_B = 1 deficient for " +
                      std::to_string(deficient) + "/5 seeds"};
}

Verdict cocycle_and_stokes() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> site(-11, 11);
    std::normal_distribution<double> g;
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    s.eps = kTwoPi / 4;
    const LatticeBox box{2, 12, Boundary::MagneticPeriodic};
    CVector f(box.sites());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = cplx(g(rng), g(rng));
    double cocycle = 0.0, stokes = 0.0;
    for (int n = 0; n < 100; ++n) {
        const Cell a{site(rng), site(rng)}, b{site(rng), site(rng)};
        const Point x = pt(site(rng), site(rng)), y = pt(site(rng), site(rng)), z = pt(site(rng), site(rng));
        const CVector lhs = zak_translate(s, box, 1, zak_translate(s, box, 1, f, b), a);
        const CVector rhs = lambda_total(s, to_point(b), to_point(a)) * zak_translate(s, box, 1, f, a + b);
        cocycle = std::max(cocycle, (lhs - rhs).norm() / f.norm());
        stokes = std::max(stokes, std::abs(flux_phase(s, x, y, z) - flux_phase_constant_closed(s, x, y, z)));
    }
    return {cocycle <= 1e-12 && stokes <= 1e-12,
            "cocycle " + fmt("%.2e", cocycle) + ", Stokes " + fmt("%.2e", stokes) + " (tol 1e-12, 100 tuples)"};
}

Verdict schur_identity() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const CMatrix h = random_hermitian(40, rng);
        const CMatrix p = random_projection(40, 10, rng);
        cplx z;
        if (n % 3 == 0) {
            z = cplx(0.0, 1.0);
        } else if (n % 3 == 1) {
            z = cplx(2.0, 0.5);
        } else {
            // Real point inside the spectral range, as far as possible from
            // sigma(H) and from the spectrum of the complement block.
            const RVector eh = hermitian_eigvals(h);
            const CMatrix q = CMatrix::Identity(40, 40) - p;
            const RVector eq = hermitian_eigvals(q * h * q);
            double best = -1.0, at = 0.0;
            for (Eigen::Index i = 10; i + 11 < eh.size(); ++i) {
                const double t = 0.5 * (eh(i) + eh(i + 1));
                const double dist = std::min((eh.array() - t).abs().minCoeff(), (eq.array() - t).abs().minCoeff());
                if (dist > best) best = dist, at = t;
            }
            z = cplx(at, 0.0);
        }
        const SchurDecomposition s = schur_resolvent(h, p, z);
        const CMatrix direct = (h - z * CMatrix::Identity(40, 40)).inverse();
        worst = std::max(worst, (s.assembled - direct).norm() / direct.norm());
    }
    const cplx a(1.3, 0), d(-0.4, 0), b(0.6, -0.2), z(0.2, 0.7);
    CMatrix h(2, 2);
    h << a, b, std::conj(b), d;
    CMatrix p = CMatrix::Zero(2, 2);
    p(0, 0) = 1.0;
    const SchurDecomposition s = schur_resolvent(h, p, z);
    const double scalar = std::abs(s.r_tilde(0, 0) - 1.0 / (a - std::norm(b) / (d - z) - z));
    return {worst <= 1e-9 && scalar <= 1e-12,
            "random rel " + fmt("%.2e", worst) + " (tol 1e-9), scalar " + fmt("%.2e", scalar) + " (tol 1e-12)"};
}

Verdict harper_equivalence() {
    BlockSequence harper;
    harper.d = 2;
    harper.n = 1;
    harper.blocks = models::harper(0.0).kernel();
    double worst = 0.0;
    for (int q : {3, 5})
        for (int L : {15, 30}) {
            const auto rows = butterfly_sweep(harper, {{1, q}}, L);
            std::vector<double> got;
            for (const auto& r : rows) got.push_back(r.energy);
            std::sort(got.begin(), got.end());
            const auto ref = harper_oracle(1, q, L);
            if (got.size() != ref.size()) return {false, "spectrum sizes differ at q = " + std::to_string(q)};
            for (size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - ref[i]));
        }
    return {worst <= 1e-8, "max deviation " + fmt("%.2e", worst) + " (tol 1e-8, q = 3, 5, L = 15, 30)"};
}

double hs_discrepancy() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
        // Diagonal spectrum with gaps >= 0.5; the bump edges sit off the spectrum.
        std::vector<double> spec;
        double x = -3.0;
        for (int i = 0; i < 10; ++i) {
            spec.push_back(x);
            x += 0.5 + u(rng);
        }
        CMatrix h = CMatrix::Zero(10, 10);
        for (int i = 0; i < 10; ++i) h(i, i) = spec[static_cast<size_t>(i)];
        const double lo = spec[2] + 0.25 * u(rng), hi = spec[6] + 0.1 + 0.3 * u(rng);
        const CompactFunction phi = CompactFunction::bump(lo, hi, std::min(0.4, 0.5 * (hi - lo)));
        const CMatrix ref = spectral_function_of_matrix(h, [&](double t) { return phi.eval(t, 0); });
        worst = std::max(worst, op_norm(hs_function_of_matrix(h, phi, 2) - ref));
    }
    return worst;
}

// Everything criteria 5, 6, 7 and 10 need at one flux quantum.
struct FluxSample {
    int k = 0;
    double eps = 0.0;
    double coupling = 0.0;
    double dressing = 0.0;
    double h0 = 0.0, h1 = 0.0;
    double t_reduced = 0.0, t_coupling = 0.0, t_dressing = 0.0, t_c0 = 0.0, t_c1 = 0.0;
};

struct Reporter {
    std::set<int> known;
    int unexpected = 0;

    void line(int id, const std::string& name, const Verdict& v, double secs, double budget) {
        const bool in_time = secs <= budget;
        const bool pass = v.pass && in_time;
        std::string detail = v.detail + "; " + fmt("%.1f", secs) + " s (budget " + fmt("%.0f", budget) + " s)";
        if (!in_time) detail += " over budget";
        const bool expected_fail = known.count(id) > 0;
        if (expected_fail) detail += pass ? " [listed as a known failure but passed]" : " [known failure]";
        std::printf("criterion %2d %s  %-28s %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
        std::fflush(stdout);
        if (pass == expected_fail) ++unexpected;
    }

    // `shared` is time already spent on inputs this criterion reuses.
    template <class F>
    void run(int id, const std::string& name, double budget, F&& f, double shared = 0.0) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = f();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        line(id, name, v, shared + seconds_since(t0), budget);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> known;
    app.add_option("--known-failure", known, "criteria whose failure is documented and expected");
    CLI11_PARSE(app, argc, argv);
    std::setvbuf(stdout, nullptr, _IONBF, 0);

    Reporter rep;
    rep.known.insert(known.begin(), known.end());

    const RunConfig cfg = default_config();
    const PipelineOptions o = pipeline_options(cfg);

    rep.run(1, "Parseval certificate", 10, [&] { return parseval_certificate(o); });
    rep.run(2, "non-triviality witness", 30, [&] { return nontriviality_witness(o); });
    rep.run(3, "cocycle and Stokes", 5, [] { return cocycle_and_stokes(); });
    rep.run(4, "Schur identity", 10, [] { return schur_identity(); });

    // Shared sweep over eps b = 2 pi k / 64, k = 1..5, at c = 0 (and c = 1 for
    // the spectral comparison).
    auto t0 = Clock::now();
    std::optional<UnperturbedModel> model;
    std::string prep_error;
    try {
        model = prepare_model(o);
    } catch (const std::exception& e) {
        prep_error = e.what();
    }
    const double t_prepare = seconds_since(t0);
    std::vector<FluxSample> samples;
    std::map<int, ReducedPoint> reduced;
    if (model) {
        for (int k = 1; k <= 5; ++k) {
            FluxSample s;
            s.k = k;
            auto t = Clock::now();
            reduced.emplace(k, reduced_point(*model, flux_setup(o, k, 0.0)));
            const ReducedPoint& rp = reduced.at(k);
            s.eps = rp.band.setup.eps;
            s.t_reduced = seconds_since(t);
            t = Clock::now();
            s.coupling = feshbach_norms(rp.band, model->window.midpoint()).coupling;
            s.t_coupling = seconds_since(t);
            t = Clock::now();
            s.dressing = dressing_deviation(rp.matrix.hoppings, model->m0, 2.0);
            s.t_dressing = seconds_since(t);
            t = Clock::now();
            s.h0 = spectral_point(*model, rp, 0.0).hausdorff;
            s.t_c0 = seconds_since(t);
            t = Clock::now();
            s.h1 = spectral_point(*model, rp, 1.0).hausdorff;
            s.t_c1 = seconds_since(t);
            samples.push_back(s);
        }
    }
    auto column = [&](double FluxSample::*m) {
        std::vector<double> v;
        for (const auto& s : samples) v.push_back(s.*m);
        return v;
    };
    auto total = [&](std::initializer_list<double FluxSample::*> parts) {
        double t = t_prepare;
        for (const auto& s : samples)
            for (auto p : parts) t += s.*p;
        return t;
    };
    auto series = [&](double FluxSample::*m) {
        std::string out;
        for (const auto& s : samples) out += (out.empty() ? "" : " ") + fmt("%.3e", s.*m);
        return out;
    };
    const auto eps = column(&FluxSample::eps);
    const Verdict no_model{false, "model preparation failed: " + prep_error};

    {
        Verdict v = no_model;
        if (model) {
            const LogLogFit f = fit_loglog(eps, column(&FluxSample::coupling));
            v = {in_range(f.slope, 1.7, 2.3) && f.residual < 0.15,
                 "slope " + fmt("%.3f", f.slope) + " in [1.7, 2.3], residual " + fmt("%.3f", f.residual) +
                     " (< 0.15); norms " + series(&FluxSample::coupling)};
        }
        rep.line(5, "quadratic Feshbach bound", v, total({&FluxSample::t_reduced, &FluxSample::t_coupling}), 300);
    }
    {
        Verdict v = no_model;
        if (model) {
            const LogLogFit f = fit_loglog(eps, column(&FluxSample::dressing));
            v = {in_range(f.slope, 0.8, 1.3),
                 "slope " + fmt("%.3f", f.slope) + " in [0.8, 1.3]; deviations " + series(&FluxSample::dressing)};
        }
        rep.line(6, "effective-hopping dressing", v, total({&FluxSample::t_reduced, &FluxSample::t_dressing}), 300);
    }
    {
        Verdict v = no_model;
        if (model) {
            const LogLogFit f0 = fit_loglog(eps, column(&FluxSample::h0));
            const LogLogFit f1 = fit_loglog(eps, column(&FluxSample::h1));
            const bool order = samples.front().h0 < samples.front().h1;
            v = {in_range(f0.slope, 1.6, 2.4) && in_range(f1.slope, 0.8, 1.4) && order,
                 "c=0 slope " + fmt("%.3f", f0.slope) + " in [1.6, 2.4] " + (in_range(f0.slope, 1.6, 2.4) ? "ok" : "NO") +
                     ", c=1 slope " + fmt("%.3f", f1.slope) + " in [0.8, 1.4] " +
                     (in_range(f1.slope, 0.8, 1.4) ? "ok" : "NO") + ", c0 < c1 at smallest eps " +
                     (order ? "ok" : "NO") + "; c=0 " + series(&FluxSample::h0) + "; c=1 " + series(&FluxSample::h1)};
        }
        rep.line(7, "spectral Hausdorff scaling", v,
                 total({&FluxSample::t_reduced, &FluxSample::t_c0, &FluxSample::t_c1}), 1200);
    }

    rep.run(8, "Harper oracle equivalence", 60, [] { return harper_equivalence(); });

    rep.run(9, "dynamics", 600, [&]() -> Verdict {
        if (!model) return no_model;
        const std::vector<double> times{0.0, 1.0, 2.0, 4.0, 8.0};
        // eps b = 2 pi / 32 is flux quantum 2 on the 64 box; halving it is quantum 1.
        const DynamicsTable d2 = dynamics_comparison(*model, reduced.at(2), times, cfg.seed);
        const DynamicsTable d1 = dynamics_comparison(*model, reduced.at(1), times, cfg.seed);
        const double e0 = d2.errors[0], e1 = d2.errors[1], e4 = d2.errors[3], e8 = d2.errors[4];
        const EnvelopeFit f3 = fit_envelope(times, d2.errors, 3.0);
        const EnvelopeFit f4 = fit_envelope(times, d2.errors, 4.0);
        const EnvelopeFit& env = f3.residual <= f4.residual ? f3 : f4;
        const double env_ratio = (env.a + env.b * std::pow(9.0, env.exponent)) / (env.a + env.b * std::pow(2.0, env.exponent));
        const double ratio = e8 / e1;
        const double halving = e4 / d1.errors[3];
        std::string errs;
        for (double e : d2.errors) errs += (errs.empty() ? "" : " ") + fmt("%.3e", e);
        return {e0 <= 1e-6 && ratio <= env_ratio && halving >= 1.7,
                "err(0) " + fmt("%.2e", e0) + " (tol 1e-6), err(8)/err(1) " + fmt("%.3f", ratio) + " <= envelope " +
                    fmt("%.3f", env_ratio) + " (exponent " + fmt("%.0f", env.exponent) + "), halving factor " +
                    fmt("%.3f", halving) + " (>= 1.7); errors " + errs};
    }, t_prepare + (samples.size() >= 2 ? samples[0].t_reduced + samples[1].t_reduced : 0.0));

    rep.run(10, "Helffer-Sjoestrand calculus", 120, [&]() -> Verdict {
        if (!model) return no_model;
        const double disc = hs_discrepancy();
        // Supported on the comparison window J, which sits inside J^delta.
        const double lo = model->window.J_lo(), hi = model->window.J_hi();
        const CompactFunction bump = CompactFunction::bump(lo, hi, 0.25 * (hi - lo));
        std::vector<double> est;
        for (int k = 1; k <= 5; ++k) {
            const ReducedPoint& rp = reduced.at(k);
            est.push_back(band_window_estimate(rp.band.p, rp.band.h, bump, model->window));
        }
        const LogLogFit f = fit_loglog(eps, est);
        std::string vals;
        for (double e : est) vals += (vals.empty() ? "" : " ") + fmt("%.3e", e);
        return {disc <= 1e-6 && in_range(f.slope, 0.8, 1.3),
                "HS discrepancy " + fmt("%.2e", disc) + " (tol 1e-6), band-window slope " + fmt("%.3f", f.slope) +
                    " in [0.8, 1.3]; estimates " + vals};
    }, total({&FluxSample::t_reduced}));

    if (rep.unexpected > 0) {
        std::printf("%d criterion verdict(s) differ from the expected outcome\n", rep.unexpected);
        return 1;
    }
    return 0;
}
