#pragma once

#include <string>
#include <utility>
#include <vector>

#include "peierls/pipeline.hpp"

namespace peierls {

struct SpectrumSet {
    std::vector<double> values;  // sorted
    std::string source;          // full | effective | oracle

    static SpectrumSet make(std::vector<double> values, std::string source);
};

// Symmetric window-restricted Hausdorff distance: each set's points inside
// [j_lo, j_hi] are measured against the whole other set. 0 when both sides are
// empty in the window, OneSideEmpty when exactly one is.
double hausdorff_in_window(const SpectrumSet& s1, const SpectrumSet& s2, double j_lo, double j_hi);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of the log residuals
    int points = 0;
    bool claim_ok() const { return points >= 4; }
};
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingReport {
    std::string metric;
    std::vector<double> parameters;
    std::vector<double> values;
    LogLogFit fit;
    std::string fingerprint;
};
ScalingReport make_scaling_report(std::string metric, std::vector<double> parameters, std::vector<double> values,
                                  std::string fingerprint = "");

// Least-squares fit error(t) ~ a + b (1 + t)^n with a, b >= 0.
struct EnvelopeFit {
    double exponent = 0.0;
    double a = 0.0;
    double b = 0.0;
    double residual = 0.0;  // RMS relative deviation
};
EnvelopeFit fit_envelope(const std::vector<double>& t, const std::vector<double>& err, double exponent);

// Spectrum of the Landau-gauge Harper matrix (hopping t, on-site e) at flux
// 2 pi p / q, sampled on the periodic momentum grid of an L x L torus.
std::vector<double> harper_oracle(int p, int q, int L, double t = 1.0, double onsite = 0.0);

struct ButterflyRow {
    int p, q;
    double energy;
};
// Spectra of the magnetic quantization of `hoppings` at flux 2 pi p / q per
// plaquette on an L x L magnetic-periodic box.
std::vector<ButterflyRow> butterfly_sweep(const BlockSequence& hoppings, const std::vector<std::pair<int, int>>& fluxes,
                                          int L);

// exp(-i t H) v via the eigendecomposition.
CVector evolve(const CMatrix& h, const CVector& v, double t);

// Propagator of a sector-blocked Hermitian operator with cached eigenpairs.
class SectorPropagator {
public:
    explicit SectorPropagator(const SectorOperator& h);
    CVector apply(const CVector& full, double t) const;

private:
    std::shared_ptr<const ZakSectors> basis_;
    std::vector<EigenPairs> eig_;
};

// Spectral comparison sigma(H^{eps,c}) vs sigma(Op^{eps,c}(m^eps)) on J.
struct SpectralPoint {
    int k = 0;
    double eps = 0.0;
    double c = 0.0;
    double hausdorff = 0.0;
    int full_in_window = 0;
    int effective_in_window = 0;
};
// `base` must be the c = 0 point at the same flux; for c != 0 the operators are
// rebuilt with the fluctuation potential switched on.
SpectralPoint spectral_point(const UnperturbedModel& model, const ReducedPoint& base, double c);
ScalingReport spectral_comparison(const UnperturbedModel& model, const std::vector<int>& ks, double c,
                                  std::vector<SpectralPoint>* points = nullptr);

struct DynamicsTable {
    int k = 0;
    double eps = 0.0;
    std::vector<double> times;
    std::vector<double> errors;
};
// || e^{-itH} v - C^dagger e^{-it Op(m)} C P v || for v = normalized P E_J(H) r.
DynamicsTable dynamics_comparison(const UnperturbedModel& model, const ReducedPoint& point,
                                  const std::vector<double>& times, std::uint64_t seed);

}  // namespace peierls
