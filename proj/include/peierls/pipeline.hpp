#pragma once

#include <cstdint>
#include <memory>

#include "peierls/magnetic_frames.hpp"
#include "peierls/reduction.hpp"

namespace peierls {

struct PipelineOptions {
    HoppingTable model;
    int k0 = 1;
    int N = 0;
    int nk = 64;
    int nB_start = 2;
    std::uint64_t seed = 0;
    double a_min = 1e-3;
    int L = 64;
    int frame_radius = 20;    // Wannier truncation
    int kernel_radius = 20;   // family kernel truncation
    int hopping_radius = 24;  // effective hoppings kept
    double b = 1.0;
    FluctuationPotential fluct;
    double delta = -1.0;      // window margin, < 0 for the default
};

// Everything that does not depend on the magnetic field.
struct UnperturbedModel {
    PipelineOptions options;
    BandStructure bands;
    IsolatedFamily family;
    ProjectionField field;
    FrameSearch search;
    WannierFrame wannier;
    BlockSequence family_kernel;
    HoppingTable h_B, h_perp;
    double e0 = 0.0;
    SpectralWindow window;
    BlockSequence m0;
    int chern = 0;  // 0 in d = 1
};

UnperturbedModel prepare_model(const PipelineOptions& options);

// eps * b = 2 pi k / L on the configured box.
MagneticSetup flux_setup(const PipelineOptions& options, int k, double c);
LatticeBox pipeline_box(const PipelineOptions& options);

// Peierls Hamiltonian and perturbed band projection on the symmetry sectors.
struct BandPoint {
    MagneticSetup setup;
    std::shared_ptr<const ZakSectors> basis;
    SectorOperator h;
    SectorOperator p;
};
BandPoint band_point(const UnperturbedModel& model, const MagneticSetup& setup);

// c = 0 magnetic frame and the dressed effective hoppings.
struct ReducedPoint {
    BandPoint band;
    SectorOperator h_eff;  // P H P
    MagneticFrame frame;
    StructureReport matrix;
};
ReducedPoint reduced_point(const UnperturbedModel& model, const MagneticSetup& setup);

// c != 0 frame: dress the c = 0 frame functions and intertwine with P^{eps,c}.
MagneticFrame perturbed_frame(const ReducedPoint& base, const BandPoint& target);

// max over sectors of ||P H R_perp(lambda) H P|| (and ||R_perp||, ||(1-P) H P||).
struct FeshbachNorms {
    double coupling = 0.0;
    double r_perp = 0.0;
    double off_diagonal = 0.0;
};
FeshbachNorms feshbach_norms(const BandPoint& point, double lambda);

// sup_g <g>^power || m_g - m0_g ||, <g> = sqrt(1 + |g|^2).
double dressing_deviation(const BlockSequence& m, const BlockSequence& m0, double power);

}  // namespace peierls
