#include "peierls/pipeline.hpp"

#include <cmath>

#include "peierls/errors.hpp"

namespace peierls {

UnperturbedModel prepare_model(const PipelineOptions& options) {
    UnperturbedModel m;
    m.options = options;
    const ReciprocalGrid grid(options.model.d, options.nk);
    m.bands = compute_bands(options.model, grid);
    m.family = detect_isolated_family(m.bands, options.k0, options.N);
    m.field = band_projection_field(m.bands, m.family);
    m.search = search_frame(m.field, std::max(options.nB_start, m.field.rank), options.seed, options.a_min);
    m.wannier = to_wannier(m.search.frame, options.frame_radius);
    m.family_kernel = band_kernel(m.field, options.kernel_radius);
    std::tie(m.h_B, m.h_perp) = kernel_split(options.model, m.family_kernel);
    m.e0 = spectral_floor(m.bands);
    m.window = window_from_family(m.family, options.delta);
    m.m0 = effective_hoppings_unperturbed(m.search.frame, m.field, options.hopping_radius);
    if (options.model.d == 2) m.chern = chern_number(m.field);
    return m;
}

LatticeBox pipeline_box(const PipelineOptions& options) {
    return LatticeBox{options.model.d, options.L, Boundary::MagneticPeriodic};
}

MagneticSetup flux_setup(const PipelineOptions& options, int k, double c) {
    MagneticSetup s;
    s.field = options.model.d == 2 ? ConstantField::plane(options.b) : ConstantField::none(options.model.d);
    s.eps = options.model.d == 2 ? kTwoPi * k / (options.L * options.b) : kTwoPi * k / options.L;
    s.c = c;
    s.fluct = options.fluct;
    return s;
}

BandPoint band_point(const UnperturbedModel& model, const MagneticSetup& setup) {
    BandPoint out;
    out.setup = setup;
    out.basis = ZakSectors::adapted(pipeline_box(model.options), model.options.model.M, setup);
    out.h = SectorOperator::from_kernel(out.basis, model.options.model.kernel());
    out.p = perturbed_band_projection(model.h_perp, out.basis, model.e0);
    return out;
}

ReducedPoint reduced_point(const UnperturbedModel& model, const MagneticSetup& setup) {
    if (setup.c != 0.0) throw std::invalid_argument("reduced_point builds the c = 0 frame");
    ReducedPoint out;
    out.band = band_point(model, setup);
    out.h_eff = effective_hamiltonian(out.band.p, out.band.h);
    out.frame = build_magnetic_frame(model.wannier, out.band.basis, out.band.p);
    out.matrix = effective_matrix(out.frame, out.h_eff, model.options.hopping_radius);
    return out;
}

MagneticFrame perturbed_frame(const ReducedPoint& base, const BandPoint& target) {
    std::vector<CVector> functions(base.frame.cell_functions.begin(),
                                   base.frame.cell_functions.begin() + base.frame.nB);
    return build_magnetic_frame(functions, base.frame.nB, target.basis, target.p);
}

FeshbachNorms feshbach_norms(const BandPoint& point, double lambda) {
    FeshbachNorms out;
    for (size_t s = 0; s < point.h.blocks.size(); ++s) {
        const SchurDecomposition d = schur_resolvent(point.h.blocks[s], point.p.blocks[s], lambda);
        out.coupling = std::max(out.coupling, d.coupling_norm);
        out.r_perp = std::max(out.r_perp, d.r_perp_norm);
        out.off_diagonal = std::max(out.off_diagonal, d.off_diagonal_norm);
    }
    return out;
}

double dressing_deviation(const BlockSequence& m, const BlockSequence& m0, double power) {
    double worst = 0.0;
    for (const auto& [g, block] : m.blocks) {
        const double weight = std::pow(1.0 + double(g[0]) * g[0] + double(g[1]) * g[1], 0.5 * power);
        worst = std::max(worst, weight * op_norm(block - m0.at(g)));
    }
    return worst;
}

}  // namespace peierls
