#include "peierls/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "peierls/errors.hpp"
#include "peierls/validate.hpp"

namespace peierls {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12e", x);
    return buf;
}

class Csv {
public:
    explicit Csv(const std::string& header) { text_ << header << '\n'; }
    template <class... T>
    void row(const T&... fields) {
        bool first = true;
        ((text_ << (first ? "" : ",") << cell(fields), first = false), ...);
        text_ << '\n';
    }
    void save(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary);
        out << text_.str();
    }

private:
    static std::string cell(double x) { return num(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(long x) { return std::to_string(x); }
    static std::string cell(const std::string& s) { return s; }
    std::ostringstream text_;
};

void save_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
}

// Runs f(0..n-1) on up to `workers` threads. The first failure by index is rethrown.
template <class F>
void parallel_for(int n, int workers, F f) {
    const int threads = std::max(1, std::min(workers, n));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
    std::atomic<int> next{0};
    auto body = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[static_cast<size_t>(i)] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Context {
    Context(const RunConfig& c, const RunFlags& f, std::ostream& l, fs::path o)
        : cfg(c), flags(f), log(l), out(std::move(o)) {}

    const RunConfig& cfg;
    const RunFlags& flags;
    std::ostream& log;
    fs::path out;
    int workers = 1;
    std::vector<Certificate> certs;
    json results = json::object();
    json anchors = json::object();
    std::vector<std::string> warnings;
    std::mutex mu;

    void note(const std::string& msg) {
        std::lock_guard<std::mutex> lock(mu);
        log << msg << '\n';
    }
    void warn(std::string msg) {
        if (msg.rfind("warning: ", 0) == 0) msg.erase(0, 9);
        std::lock_guard<std::mutex> lock(mu);
        log << "warning: " << msg << '\n';
        warnings.push_back(msg);
    }
    // value <= tolerance passes.
    void check(const std::string& name, double value, double tol, const std::string& detail = "") {
        certs.push_back({name, std::isfinite(value) && value <= tol, value, tol, detail});
    }
    void check_flag(const std::string& name, bool ok, const std::string& detail = "") {
        certs.push_back({name, ok, ok ? 0.0 : 1.0, 0.0, detail});
    }
};

void guard_block(const Context& ctx, const ZakSectors& basis, const std::string& what) {
    if (static_cast<std::size_t>(basis.sector_size()) > ctx.cfg.max_block_dim)
        throw ResourceBoundExceeded(what + ": sector block dimension " + std::to_string(basis.sector_size()) +
                                    " exceeds limits.max_block_dim = " + std::to_string(ctx.cfg.max_block_dim));
}

void guard_flux(const Context& ctx, const PipelineOptions& o, int k) {
    const MagneticSetup s = flux_setup(o, k, ctx.cfg.c);
    guard_block(ctx, *ZakSectors::adapted(pipeline_box(o), o.model.M, s), "flux quantum " + std::to_string(k));
}

double unitarity_defect(const BandStructure& bands) {
    double worst = 0.0;
    for (const auto& v : bands.vectors)
        worst = std::max(worst, op_norm(v.adjoint() * v - CMatrix::Identity(v.cols(), v.cols())));
    return worst;
}

double projection_defect(const ProjectionField& field) {
    double worst = 0.0;
    for (const auto& p : field.projection) {
        worst = std::max(worst, op_norm(p * p - p));
        worst = std::max(worst, op_norm(p - p.adjoint()));
    }
    return worst;
}

json family_json(const IsolatedFamily& f, const SpectralWindow& w) {
    auto finite_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    return {{"k0", f.k0},
            {"N", f.N},
            {"E_minus", finite_or_null(f.E_minus)},
            {"E_plus", finite_or_null(f.E_plus)},
            {"d0", finite_or_null(f.d0)},
            {"g_local", finite_or_null(f.g_local)},
            {"family_min", f.family_min},
            {"family_max", f.family_max},
            {"window", {{"a", w.a}, {"b", w.b}, {"delta", w.delta}, {"J", {w.J_lo(), w.J_hi()}}}}};
}

// Sorted eigenvalues of psi^dagger H_B psi over the grid versus the eps = 0
// quantization of m0 on a periodic box of side n_k.
double unperturbed_spectrum_gap(const UnperturbedModel& m) {
    std::vector<double> ref;
    const auto& frame = m.search.frame;
    for (size_t i = 0; i < frame.sections.size(); ++i) {
        const CMatrix& psi = frame.sections[i];
        const RVector ev = hermitian_eigvals(psi.adjoint() * m.field.band_hamiltonian[i] * psi);
        ref.insert(ref.end(), ev.data(), ev.data() + ev.size());
    }
    std::sort(ref.begin(), ref.end());
    MagneticSetup s;
    s.field = m.options.model.d == 2 ? ConstantField::plane(m.options.b) : ConstantField::none(m.options.model.d);
    const LatticeBox box{m.options.model.d, m.options.nk, Boundary::MagneticPeriodic};
    const auto got = ZakSectors::adapted(box, m.m0.n, s)->kernel_eigenvalues(m.m0.blocks);
    if (got.size() != ref.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - ref[i]));
    return worst;
}

UnperturbedModel prepare(Context& ctx) {
    ctx.note("preparing the unperturbed model (" + ctx.cfg.model + ", n_k = " + std::to_string(ctx.cfg.nk) + ")");
    UnperturbedModel m = prepare_model(pipeline_options(ctx.cfg));
    for (const auto& line : m.search.log) ctx.warn(line);
    ctx.results["family"] = family_json(m.family, m.window);
    ctx.results["frame_size"] = m.search.nB;
    if (m.options.model.d == 2) ctx.results["chern"] = m.chern;
    ctx.check("parseval_defect", parseval_defect(m.search.frame, m.field), 1e-10);
    return m;
}

std::string model_stem(const RunConfig& cfg) {
    if (models::is_builtin(cfg.model)) return cfg.model;
    return fs::path(cfg.model).stem().string();
}

// ---------------------------------------------------------------- subcommands

void run_bands(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const ReciprocalGrid grid(c.table.d, c.nk);
    const BandStructure bands = compute_bands(c.table, grid);
    Csv csv(c.table.d == 2 ? "index,theta1,theta2,band,energy" : "index,theta1,band,energy");
    for (int i = 0; i < grid.size(); ++i) {
        const Point th = grid.theta(i);
        for (int k = 0; k < bands.M; ++k) {
            if (c.table.d == 2)
                csv.row(i, th[0], th[1], k + 1, bands.values[static_cast<size_t>(i)](k));
            else
                csv.row(i, th[0], k + 1, bands.values[static_cast<size_t>(i)](k));
        }
    }
    csv.save(ctx.out / "bands.csv");
    ctx.check("eigenvector_unitarity", unitarity_defect(bands), 1e-10);
    const IsolatedFamily family = detect_isolated_family(bands, c.k0, c.N);
    const SpectralWindow window = window_from_family(family, c.delta);
    save_json(ctx.out / "family.json", family_json(family, window));
    ctx.results["family"] = family_json(family, window);
    ctx.results["spectral_floor"] = spectral_floor(bands);
    ctx.anchors["g_local"] = family.g_local;
    ctx.anchors["family_min"] = family.family_min;
    ctx.anchors["family_max"] = family.family_max;
}

void run_frame(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const ReciprocalGrid grid(c.table.d, c.nk);
    const BandStructure bands = compute_bands(c.table, grid);
    const IsolatedFamily family = detect_isolated_family(bands, c.k0, c.N);
    const ProjectionField field = band_projection_field(bands, family);
    ctx.check("projection_idempotency", projection_defect(field), 1e-10);
    ctx.check("riesz_agreement", field.route_agreement, 1e-8);
    const FrameSearch search = search_frame(field, c.nB_start, c.seed, c.a_min);
    for (const auto& line : search.log) ctx.warn(line);
    const double defect = parseval_defect(search.frame, field);
    ctx.check("parseval_defect", defect, 1e-10);
    json j = {{"nB", search.nB},
              {"nB_start", c.nB_start},
              {"rank", field.rank},
              {"lower_bound", search.frame.lower_bound},
              {"smoothness", search.frame.smoothness},
              {"parseval_defect", defect},
              {"beyond_bound", search.beyond_bound},
              {"escalation", search.log}};
    if (c.table.d == 2) {
        j["chern"] = chern_number(field);
        j["chern_raw"] = chern_number_raw(field);
        ctx.anchors["chern"] = chern_number(field);
    }
    save_json(ctx.out / "frame.json", j);
    ctx.results["frame"] = j;
    ctx.anchors["nB"] = search.nB;
    ctx.anchors["lower_bound"] = search.frame.lower_bound;
}

void run_wannier(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const UnperturbedModel m = prepare(ctx);
    const WannierFrame& w = m.wannier;
    Csv decay("radius,max_norm");
    for (size_t r = 0; r < w.decay_profile.size(); ++r) decay.row(static_cast<int>(r), w.decay_profile[r]);
    decay.save(ctx.out / "wannier_decay.csv");
    Csv values(c.table.d == 2 ? "g1,g2,p,orbital,re,im" : "g1,p,orbital,re,im");
    for (const auto& [g, block] : w.values)
        for (int p = 0; p < w.nB; ++p)
            for (int o = 0; o < w.M; ++o) {
                const cplx v = block(o, p);
                if (c.table.d == 2)
                    values.row(g[0], g[1], p, o, v.real(), v.imag());
                else
                    values.row(g[0], p, o, v.real(), v.imag());
            }
    values.save(ctx.out / "wannier.csv");
    // Parseval frame functions have norm^2 = (1/|grid|) sum_theta ||psi_p(theta)||^2.
    double tail = 0.0;
    json norms = json::array();
    for (int p = 0; p < w.nB; ++p) {
        double full = 0.0;
        for (const auto& s : m.search.frame.sections) full += s.col(p).squaredNorm();
        full /= double(m.search.frame.sections.size());
        tail = std::max(tail, std::abs(full - w.norms[static_cast<size_t>(p)]));
        norms.push_back(w.norms[static_cast<size_t>(p)]);
    }
    ctx.check("truncation_loss", tail, 1e-6, "norm^2 outside the kept radius");
    int reach = -1;
    for (size_t r = 0; r < w.decay_profile.size(); ++r)
        if (w.decay_profile[r] < 1e-6) {
            reach = static_cast<int>(r);
            break;
        }
    ctx.results["wannier"] = {{"radius", w.Lw}, {"norms", norms}, {"radius_below_1e-6", reach}};
    ctx.anchors["radius_below_1e-6"] = reach;
}

void write_blocks(const fs::path& path, const BlockSequence& m) {
    Csv csv("g1,g2,p,q,re,im");
    for (const auto& [g, block] : m.blocks)
        for (int p = 0; p < m.n; ++p)
            for (int q = 0; q < m.n; ++q) csv.row(g[0], g[1], p, q, block(p, q).real(), block(p, q).imag());
    csv.save(path);
}

void run_effective(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const UnperturbedModel m = prepare(ctx);
    write_blocks(ctx.out / "m0.csv", m.m0);
    ctx.check("m0_adjointness", m.m0.adjointness_defect(), 1e-10);
    const double gap = unperturbed_spectrum_gap(m);
    ctx.check("m0_band_spectrum", gap, 1e-6, "eps = 0 quantization vs band samples");
    ctx.anchors["m0_band_spectrum"] = gap;
    if (c.table.d != 2) {
        ctx.warn("magnetic effective matrices need a planar model; only m0 exported");
        return;
    }
    if (c.c != 0.0) ctx.warn("effective matrices are exported at c = 0; magnetic.c is ignored here");
    const auto ks = flux_quanta(c);
    for (int k : ks) guard_flux(ctx, m.options, k);
    std::vector<json> rows(ks.size());
    std::vector<StructureReport> reports(ks.size());
    std::vector<double> parseval(ks.size());
    parallel_for(static_cast<int>(ks.size()), ctx.workers, [&](int i) {
        ctx.note("effective matrix at flux quantum " + std::to_string(ks[static_cast<size_t>(i)]));
        const ReducedPoint rp = reduced_point(m, flux_setup(m.options, ks[static_cast<size_t>(i)], 0.0));
        reports[static_cast<size_t>(i)] = rp.matrix;
        parseval[static_cast<size_t>(i)] = rp.frame.parseval_defect;
        rows[static_cast<size_t>(i)] = {{"k", ks[static_cast<size_t>(i)]},
                                        {"eps", rp.band.setup.eps},
                                        {"structure_violation", rp.matrix.violation},
                                        {"parseval_defect", rp.frame.parseval_defect},
                                        {"ptilde_idempotency", rp.frame.ptilde_idempotency},
                                        {"dressing", dressing_deviation(rp.matrix.hoppings, m.m0, 0.0)},
                                        {"tail", rp.matrix.hoppings.tail}};
    });
    for (size_t i = 0; i < ks.size(); ++i) {
        write_blocks(ctx.out / ("m_eps_k" + std::to_string(ks[i]) + ".csv"), reports[i].hoppings);
        ctx.check("structure_violation_k" + std::to_string(ks[i]), reports[i].violation, 1e-6);
        ctx.check("frame_parseval_k" + std::to_string(ks[i]), parseval[i], 1e-9);
        ctx.anchors["dressing_k" + std::to_string(ks[i])] = rows[i]["dressing"];
    }
    ctx.results["points"] = rows;
}

void run_butterfly(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    if (c.table.d != 2) throw ConfigError("model", "butterfly sweeps need a planar model");
    const UnperturbedModel m = prepare(ctx);
    std::vector<std::pair<int, int>> fluxes;
    for (int q = 1; q <= c.butterfly_max_q; ++q) {
        if (c.butterfly_L % q != 0) continue;
        for (int p = 0; p <= q; ++p)
            if (std::gcd(p, q) == 1) fluxes.push_back({p, q});
    }
    if (2 * m.m0.radius() + 1 > c.butterfly_L)
        throw ConfigError("butterfly.L", "too small for hopping radius " + std::to_string(m.m0.radius()));
    BlockSequence full;
    full.d = 2;
    full.n = c.table.M;
    full.blocks = c.table.kernel();
    for (const auto& [p, q] : fluxes) {
        MagneticSetup s;
        s.field = ConstantField::plane(1.0);
        s.eps = kTwoPi * p / q;
        const LatticeBox box{2, c.butterfly_L, Boundary::MagneticPeriodic};
        guard_block(ctx, *ZakSectors::adapted(box, c.table.M, s), "butterfly flux " + std::to_string(p) + "/" +
                                                                      std::to_string(q));
    }
    std::vector<std::vector<ButterflyRow>> eff(fluxes.size()), ful(fluxes.size());
    parallel_for(static_cast<int>(fluxes.size()), ctx.workers, [&](int i) {
        const std::vector<std::pair<int, int>> one{fluxes[static_cast<size_t>(i)]};
        eff[static_cast<size_t>(i)] = butterfly_sweep(m.m0, one, c.butterfly_L);
        ful[static_cast<size_t>(i)] = butterfly_sweep(full, one, c.butterfly_L);
    });
    Csv e("flux_p,flux_q,eigenvalue"), f("flux_p,flux_q,eigenvalue");
    for (size_t i = 0; i < fluxes.size(); ++i) {
        for (const auto& r : eff[i]) e.row(r.p, r.q, r.energy);
        for (const auto& r : ful[i]) f.row(r.p, r.q, r.energy);
    }
    e.save(ctx.out / "butterfly_effective.csv");
    f.save(ctx.out / "butterfly_full.csv");
    ctx.results["fluxes"] = static_cast<int>(fluxes.size());
    ctx.results["box"] = c.butterfly_L;
}

json fit_json(const LogLogFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}, {"points", f.points},
            {"claim_ok", f.claim_ok()}};
}

void run_compare(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    if (c.table.d != 2) throw ConfigError("model", "spectral comparisons need a planar model");
    const UnperturbedModel m = prepare(ctx);
    const auto ks = flux_quanta(c);
    for (int k : ks) guard_flux(ctx, m.options, k);
    const bool with_c = c.c != 0.0;
    std::vector<SpectralPoint> p0(ks.size()), pc(ks.size());
    std::vector<double> violation(ks.size());
    parallel_for(static_cast<int>(ks.size()), ctx.workers, [&](int i) {
        const size_t u = static_cast<size_t>(i);
        ctx.note("spectral comparison at flux quantum " + std::to_string(ks[u]));
        const ReducedPoint base = reduced_point(m, flux_setup(m.options, ks[u], 0.0));
        violation[u] = base.matrix.violation;
        p0[u] = spectral_point(m, base, 0.0);
        p0[u].k = ks[u];
        if (with_c) {
            pc[u] = spectral_point(m, base, c.c);
            pc[u].k = ks[u];
        }
    });
    Csv csv("eps,c,hausdorff,full_in_window,effective_in_window,slope_partial");
    auto emit = [&](const std::vector<SpectralPoint>& pts) {
        std::vector<double> eps, dist;
        for (size_t i = 0; i < pts.size(); ++i) {
            const double partial = i == 0 ? std::nan("")
                                          : std::log(pts[i].hausdorff / pts[i - 1].hausdorff) /
                                                std::log(pts[i].eps / pts[i - 1].eps);
            csv.row(pts[i].eps, pts[i].c, pts[i].hausdorff, pts[i].full_in_window, pts[i].effective_in_window, partial);
            eps.push_back(pts[i].eps);
            dist.push_back(pts[i].hausdorff);
        }
        return eps.size() >= 2 ? json(fit_json(fit_loglog(eps, dist))) : json(nullptr);
    };
    json out;
    out["c0"] = emit(p0);
    if (with_c) out["c"] = emit(pc);
    csv.save(ctx.out / "scaling.csv");
    for (size_t i = 0; i < ks.size(); ++i)
        ctx.check("structure_violation_k" + std::to_string(ks[i]), violation[i], 1e-6);
    if (with_c && !ks.empty()) {
        const size_t first = static_cast<size_t>(
            std::min_element(p0.begin(), p0.end(), [](auto& a, auto& b) { return a.eps < b.eps; }) - p0.begin());
        out["c0_below_c_at_smallest_eps"] = p0[first].hausdorff < pc[first].hausdorff;
    }
    out["window"] = {m.window.J_lo(), m.window.J_hi()};
    ctx.results["scaling"] = out;
    for (size_t i = 0; i < ks.size(); ++i) ctx.anchors["hausdorff_c0_k" + std::to_string(ks[i])] = p0[i].hausdorff;
}

void run_schur(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const UnperturbedModel m = prepare(ctx);
    const auto ks = flux_quanta(c);
    for (int k : ks) guard_flux(ctx, m.options, k);
    const double lo = m.window.J_lo(), hi = m.window.J_hi();
    struct PointResult {
        double eps = 0.0;
        std::vector<std::tuple<int, double, double>> rows;  // sector, eigenvalue, residual
        bool bijective = true;
        double floor = std::numeric_limits<double>::infinity();
        double residual = 0.0;
        double identity = 0.0;
        int eigenvalues = 0, roots = 0;
    };
    std::vector<PointResult> res(ks.size());
    parallel_for(static_cast<int>(ks.size()), ctx.workers, [&](int i) {
        const size_t u = static_cast<size_t>(i);
        ctx.note("Schur checks at flux quantum " + std::to_string(ks[u]));
        const BandPoint bp = band_point(m, flux_setup(m.options, ks[u], c.c));
        PointResult& r = res[u];
        r.eps = bp.setup.eps;
        for (size_t s = 0; s < bp.h.blocks.size(); ++s) {
            const SchurSpectrumReport rep = schur_spectrum_check(bp.h.blocks[s], bp.p.blocks[s], lo, hi, c.schur_grid);
            r.bijective = r.bijective && rep.bijective;
            r.floor = std::min(r.floor, rep.complement_floor);
            r.eigenvalues += static_cast<int>(rep.eigenvalues.size());
            r.roots += static_cast<int>(rep.roots.size());
            for (size_t e = 0; e < rep.eigenvalues.size(); ++e) {
                r.residual = std::max(r.residual, rep.eigen_residuals[e]);
                r.rows.emplace_back(static_cast<int>(s), rep.eigenvalues[e], rep.eigen_residuals[e]);
            }
        }
        const CMatrix& h0 = bp.h.blocks.front();
        const cplx z(m.window.midpoint(), 0.5);
        const SchurDecomposition d = schur_resolvent(h0, bp.p.blocks.front(), z);
        const CMatrix shifted = h0 - z * CMatrix::Identity(h0.rows(), h0.cols());
        r.identity = op_norm(d.assembled * shifted - CMatrix::Identity(h0.rows(), h0.cols()));
    });
    Csv csv("eps,sector,eigenvalue,reduced_singular_value");
    json points = json::array();
    for (size_t i = 0; i < ks.size(); ++i) {
        for (const auto& [s, e, v] : res[i].rows) csv.row(res[i].eps, s, e, v);
        const std::string tag = "_k" + std::to_string(ks[i]);
        ctx.check_flag("schur_bijective" + tag, res[i].bijective, "eigenvalues in J vs roots of the reduced problem");
        ctx.check("schur_residual" + tag, res[i].residual, 1e-6);
        ctx.check("block_identity" + tag, res[i].identity, 1e-9);
        ctx.check_flag("complement_floor" + tag, res[i].floor > 1e-6, "min singular value " + num(res[i].floor));
        points.push_back({{"k", ks[i]},
                          {"eps", res[i].eps},
                          {"eigenvalues_in_J", res[i].eigenvalues},
                          {"roots", res[i].roots},
                          {"complement_floor", res[i].floor},
                          {"max_residual", res[i].residual}});
        ctx.anchors["eigenvalues_in_J" + tag] = res[i].eigenvalues;
    }
    csv.save(ctx.out / "schur.csv");
    ctx.results["points"] = points;
}

void run_evolve(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    if (c.table.d != 2) throw ConfigError("model", "dynamics studies need a planar model");
    if (c.c != 0.0) ctx.warn("dynamics are compared at c = 0; magnetic.c is ignored here");
    const UnperturbedModel m = prepare(ctx);
    const auto ks = flux_quanta(c);
    for (int k : ks) guard_flux(ctx, m.options, k);
    std::vector<DynamicsTable> tables(ks.size());
    parallel_for(static_cast<int>(ks.size()), ctx.workers, [&](int i) {
        const size_t u = static_cast<size_t>(i);
        ctx.note("dynamics at flux quantum " + std::to_string(ks[u]));
        const ReducedPoint rp = reduced_point(m, flux_setup(m.options, ks[u], 0.0));
        tables[u] = dynamics_comparison(m, rp, c.times, c.seed);
        tables[u].k = ks[u];
    });
    Csv csv("t,eps,error");
    json points = json::array();
    for (const auto& t : tables) {
        for (size_t j = 0; j < t.times.size(); ++j) csv.row(t.times[j], t.eps, t.errors[j]);
        const EnvelopeFit f3 = fit_envelope(t.times, t.errors, 3.0);
        const EnvelopeFit f4 = fit_envelope(t.times, t.errors, 4.0);
        points.push_back({{"k", t.k},
                          {"eps", t.eps},
                          {"envelope3", {{"a", f3.a}, {"b", f3.b}, {"residual", f3.residual}}},
                          {"envelope4", {{"a", f4.a}, {"b", f4.b}, {"residual", f4.residual}}},
                          {"active_exponent", f3.residual <= f4.residual ? 3 : 4}});
        for (size_t j = 0; j < t.times.size(); ++j)
            if (t.times[j] == 0.0) ctx.check("reconstruction_k" + std::to_string(t.k), t.errors[j], 1e-6);
        ctx.anchors["error_last_k" + std::to_string(t.k)] = t.errors.empty() ? 0.0 : t.errors.back();
    }
    csv.save(ctx.out / "dynamics.csv");
    ctx.results["points"] = points;
}

// Library identities that do not depend on the configured model.
void library_checks(Context& ctx) {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> site(-6, 6);
    std::normal_distribution<double> gauss(0.0, 1.0);

    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    s.eps = kTwoPi / 4;
    double stokes = 0.0, cocycle = 0.0;
    for (int n = 0; n < 100; ++n) {
        const Point x = pt(site(rng), site(rng)), y = pt(site(rng), site(rng)), z = pt(site(rng), site(rng));
        stokes = std::max(stokes, std::abs(flux_phase(s, x, y, z) - flux_phase_constant_closed(s, x, y, z)));
        cocycle = std::max(cocycle, std::abs(lambda_total(s, x, y) * lambda_total(s, y, x) - 1.0));
    }
    ctx.check("stokes_identity", stokes, 1e-12);
    ctx.check("phase_antisymmetry", cocycle, 1e-12);

    const LatticeBox box{2, 12, Boundary::MagneticPeriodic};
    CVector f(box.sites());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = cplx(gauss(rng), gauss(rng));
    double group = 0.0;
    for (int n = 0; n < 20; ++n) {
        const Cell a{site(rng), site(rng)}, b{site(rng), site(rng)};
        const CVector lhs = zak_translate(s, box, 1, zak_translate(s, box, 1, f, b), a);
        const CVector rhs = lambda_total(s, to_point(b), to_point(a)) * zak_translate(s, box, 1, f, a + b);
        group = std::max(group, (lhs - rhs).norm() / f.norm());
    }
    ctx.check("translation_group_law", group, 1e-12);

    CMatrix h = CMatrix::Random(40, 40);
    h = (h + h.adjoint()).eval();
    CMatrix v = CMatrix::Random(40, 10);
    const Eigen::HouseholderQR<CMatrix> qr(v);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(40, 10);
    const CMatrix p = q * q.adjoint();
    const cplx z(0.0, 1.0);
    const SchurDecomposition d = schur_resolvent(h, p, z);
    ctx.check("schur_block_identity",
              op_norm(d.assembled * (h - z * CMatrix::Identity(40, 40)) - CMatrix::Identity(40, 40)), 1e-9);

    CMatrix diag = CMatrix::Zero(3, 3);
    diag(1, 1) = 1.0;
    diag(2, 2) = 2.0;
    CMatrix expect = CMatrix::Zero(3, 3);
    expect(1, 1) = 1.0;
    ctx.check("helffer_sjostrand", op_norm(hs_function_of_matrix(diag, CompactFunction::bump(0.5, 1.5, 0.25)) - expect),
              1e-6);

    const double h1 = hausdorff_in_window(SpectrumSet::make({1.0, 2.0}, "a"), SpectrumSet::make({1.1, 2.3}, "b"), 0, 10);
    const double h2 = hausdorff_in_window(SpectrumSet::make({1.0, 5.0}, "a"), SpectrumSet::make({1.1}, "b"), 0, 3);
    ctx.check("hausdorff_examples", std::max(std::abs(h1 - 0.3), std::abs(h2 - 0.1)), 1e-12);

    BlockSequence harper;
    harper.d = 2;
    harper.n = 1;
    harper.blocks = models::harper(0.0).kernel();
    double worst = 0.0;
    for (int q : {3, 5}) {
        auto rows = butterfly_sweep(harper, {{1, q}}, 15);
        std::vector<double> got;
        for (const auto& r : rows) got.push_back(r.energy);
        std::sort(got.begin(), got.end());
        const auto ref = harper_oracle(1, q, 15);
        if (got.size() != ref.size()) {
            worst = std::numeric_limits<double>::infinity();
            break;
        }
        for (size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - ref[i]));
    }
    ctx.check("harper_oracle", worst, 1e-8);

    CMatrix g = CMatrix::Random(20, 20);
    g = (g + g.adjoint()).eval();
    CVector w = CVector::Random(20);
    ctx.check("evolution_group_law", (evolve(g, evolve(g, w, 0.7), 1.3) - evolve(g, w, 2.0)).norm(), 1e-10);
}

void run_selftest(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const ReciprocalGrid grid(c.table.d, c.nk);
    const BandStructure bands = compute_bands(c.table, grid);
    ctx.check("eigenvector_unitarity", unitarity_defect(bands), 1e-10);
    const UnperturbedModel m = prepare(ctx);
    ctx.check("projection_idempotency", projection_defect(m.field), 1e-10);
    ctx.check("riesz_agreement", m.field.route_agreement, 1e-8);
    ctx.check("m0_adjointness", m.m0.adjointness_defect(), 1e-10);
    ctx.check("m0_band_spectrum", unperturbed_spectrum_gap(m), 1e-6);

    // At zero field the perturbed projection is the band projection: its rank
    // is (N + 1) per site.
    const MagneticSetup zero = flux_setup(m.options, 0, 0.0);
    const auto basis = ZakSectors::adapted(pipeline_box(m.options), c.table.M, zero);
    guard_block(ctx, *basis, "zero-field box");
    const SectorOperator p0 = perturbed_band_projection(m.h_perp, basis, m.e0);
    double trace = 0.0;
    for (const auto& b : p0.blocks) trace += b.trace().real();
    ctx.check("zero_field_rank", std::abs(trace - double(m.family.size()) * pipeline_box(m.options).sites()), 1e-8);
    ctx.check("projection_hermitian", p0.hermiticity_defect(), 1e-10);

    if (c.table.d == 2 && !flux_quanta(c).empty()) {
        const int k = flux_quanta(c).front();
        guard_flux(ctx, m.options, k);
        const ReducedPoint rp = reduced_point(m, flux_setup(m.options, k, 0.0));
        ctx.check("structure_violation", rp.matrix.violation, 1e-6);
        ctx.check("magnetic_frame_parseval", rp.frame.parseval_defect, 1e-9);
        ctx.check("commutation_residual", (rp.h_eff * rp.band.p - rp.band.p * rp.h_eff).norm(), 1e-10);
    }
    library_checks(ctx);
    ctx.anchors["chern"] = m.chern;
    ctx.anchors["frame_size"] = m.search.nB;
    ctx.anchors["spectral_floor"] = m.e0;
    ctx.anchors["window_lo"] = m.window.J_lo();
    ctx.anchors["window_hi"] = m.window.J_hi();
    // Gauge-invariant summaries of the unperturbed effective matrix.
    double frob = 0.0;
    for (const auto& [g, b] : m.m0.blocks) frob += b.squaredNorm();
    ctx.anchors["m0_frobenius"] = std::sqrt(frob);
    ctx.anchors["m0_onsite_trace"] = m.m0.blocks.count(Cell{0, 0}) ? m.m0.blocks.at(Cell{0, 0}).trace().real() : 0.0;
}

void compare_anchors(Context& ctx, const fs::path& path) {
    std::ifstream in(path);
    const json ref = json::parse(in);
    double worst = 0.0;
    std::string where;
    for (const auto& [key, value] : ctx.anchors.items()) {
        if (!ref.contains(key)) {
            worst = std::numeric_limits<double>::infinity();
            where = key + " missing from the reference";
            break;
        }
        const double a = value.get<double>(), b = ref.at(key).get<double>();
        const double dev = std::abs(a - b) / std::max(1.0, std::abs(b));
        if (dev > worst) {
            worst = dev;
            where = key;
        }
    }
    ctx.check("reference_anchors", worst, 1e-8, where.empty() ? path.string() : "worst: " + where);
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"bands", "frame", "wannier", "effective", "butterfly",
                                                "compare", "schur", "evolve", "selftest"};
    return names;
}

int run_subcommand(const std::string& name, const RunConfig& cfg, const RunFlags& flags, std::ostream& log) {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        log << "error: unknown subcommand '" << name << "'\n";
        return kExitConfig;
    }
    Context ctx(cfg, flags, log, fs::path(flags.out.empty() ? cfg.output : flags.out));
    ctx.workers = flags.workers > 0 ? flags.workers : std::max(1u, std::thread::hardware_concurrency());
    fs::create_directories(ctx.out);
    {
        std::ofstream echo(ctx.out / "effective_config.json", std::ios::binary);
        echo << effective_config_json(cfg) << '\n';
    }
    log << "effective config:\n" << effective_config_json(cfg) << '\n';

    int code = kExitOk;
    std::string failure;
    try {
        if (name == "bands") run_bands(ctx);
        else if (name == "frame") run_frame(ctx);
        else if (name == "wannier") run_wannier(ctx);
        else if (name == "effective") run_effective(ctx);
        else if (name == "butterfly") run_butterfly(ctx);
        else if (name == "compare") run_compare(ctx);
        else if (name == "schur") run_schur(ctx);
        else if (name == "evolve") run_evolve(ctx);
        else run_selftest(ctx);

        if (!cfg.references.empty()) {
            const fs::path ref = fs::path(cfg.references) / (model_stem(cfg) + "_" + name + ".json");
            if (flags.bless) {
                fs::create_directories(ref.parent_path());
                save_json(ref, ctx.anchors);
                log << "blessed " << ref.string() << '\n';
            } else if (fs::exists(ref)) {
                compare_anchors(ctx, ref);
            } else {
                ctx.warn("no reference at " + ref.string() + " (run with --bless to create it)");
            }
        }
        for (const auto& c : ctx.certs)
            if (!c.pass) {
                code = kExitCertificate;
                if (failure.empty()) failure = "certificate failed: " + c.name + " (value " + num(c.value) + ")";
            }
    } catch (const ConfigError& e) {
        code = kExitConfig;
        failure = std::string("config error: ") + e.what();
    } catch (const ResourceBoundExceeded& e) {
        code = kExitResource;
        failure = std::string("resource bound exceeded: ") + e.what();
    } catch (const Error& e) {
        code = kExitCertificate;
        failure = std::string("certificate failed: ") + e.what();
    } catch (const std::bad_alloc&) {
        code = kExitResource;
        failure = "resource bound exceeded: out of memory";
    }

    json certs = json::array();
    for (const auto& c : ctx.certs) {
        json j = {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}};
        if (!c.detail.empty()) j["detail"] = c.detail;
        certs.push_back(j);
        log << (c.pass ? "  pass " : "  FAIL ") << c.name << " = " << num(c.value) << '\n';
    }
    const json summary = {{"subcommand", name},
                          {"schema_version", cfg.schema_version},
                          {"config_fingerprint", config_fingerprint(cfg)},
                          {"model", cfg.model},
                          {"status", code == kExitOk ? "pass" : "fail"},
                          {"exit_code", code},
                          {"failure", failure},
                          {"certificates", certs},
                          {"warnings", ctx.warnings},
                          {"results", ctx.results}};
    save_json(ctx.out / "summary.json", summary);
    if (!failure.empty()) log << failure << '\n';
    return code;
}

}  // namespace peierls
