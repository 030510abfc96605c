#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "peierls/errors.hpp"
#include "peierls/frames.hpp"

using namespace peierls;

namespace {

struct Qwz {
    BandStructure bands;
    ProjectionField field;
    explicit Qwz(int nk) {
        bands = compute_bands(models::qwz(), ReciprocalGrid(2, nk));
        field = band_projection_field(bands, detect_isolated_family(bands, 1, 0), 0);
    }
};

}  // namespace

TEST_CASE("canonical seeds give a tight frame of the lower band") {
    const Qwz q(32);
    const CandidateSections c = seed_candidates(q.field, 2, 0);
    // phi = (P e1, P e2) so S = P P^dagger = P and the bound is 1.
    CHECK(frame_lower_bound(c).value == doctest::Approx(1.0).epsilon(1e-12));
    const FrameField f = parsevalize(c);
    CHECK(parseval_defect(f, q.field) <= 1e-10);
}

TEST_CASE("Parseval property for random seeds") {
    const Qwz q(32);
    for (std::uint64_t seed : {1, 2, 3}) {
        const FrameField f = parsevalize(seed_candidates(q.field, 3, seed));
        CHECK(parseval_defect(f, q.field) <= 1e-10);
        for (const auto& s : f.sections) CHECK((s.adjoint() * s).trace().real() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("a single section cannot span a Chern band") {
    const Qwz q(64);
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK_THROWS_AS(parsevalize(seed_candidates(q.field, 1, seed)), FrameDeficient);
}

TEST_CASE("frame search escalates and records why") {
    const Qwz q(32);
    const FrameSearch s = search_frame(q.field, 1, 0);
    CHECK(s.nB == 2);
    REQUIRE(s.log.size() == 1);
    CHECK(s.log[0].find("n_B=1") != std::string::npos);
    CHECK_FALSE(s.beyond_bound);
}

TEST_CASE("too few seeds for the family rank") {
    const BandStructure b = compute_bands(models::fourband(), ReciprocalGrid(2, 8));
    const ProjectionField f = band_projection_field(b, detect_isolated_family(b, 1, 1), 0);
    CHECK_THROWS_AS(seed_candidates(f, 1, 0), std::invalid_argument);
}

TEST_CASE("Wannier functions decay and carry the frame norm") {
    const Qwz q(64);
    const FrameField f = parsevalize(seed_candidates(q.field, 2, 0));
    const WannierFrame w = to_wannier(f, 20);
    int reach = -1;
    for (size_t r = 0; r < w.decay_profile.size(); ++r)
        if (w.decay_profile[r] < 1e-6) {
            reach = static_cast<int>(r);
            break;
        }
    CHECK(reach >= 0);
    CHECK(reach <= 16);
    double total = 0.0;
    for (double n : w.norms) total += n;
    // sum_p ||psi_p||^2 = trace of the average projection = rank.
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("matrix representation of a periodic operator") {
    const int nk = 24;
    const Qwz q(nk);
    const FrameField f = parsevalize(seed_candidates(q.field, 2, 0));
    const WannierFrame w = to_wannier(f, 11);
    const LatticeBox box{2, nk, Boundary::MagneticPeriodic};
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    const DenseOperator h = real_space_hamiltonian(models::qwz(), box, s);
    const MatrixRep rep = matrix_rep(f, w, h, 4);
    CHECK(rep.route_agreement < 1e-6);
    const BlockSequence direct = effective_hoppings_unperturbed(f, q.field, 4);
    // psi^dagger H psi equals psi^dagger H_B psi since psi lies in the band.
    for (const auto& [g, b] : direct.blocks) CHECK((rep.hoppings.at(g) - b).norm() < 1e-6);
    CHECK(direct.adjointness_defect() < 1e-12);
}

TEST_CASE("non-invariant operators are rejected") {
    const int nk = 8;
    const Qwz q(nk);
    const FrameField f = parsevalize(seed_candidates(q.field, 2, 0));
    const WannierFrame w = to_wannier(f, 3);
    DenseOperator t;
    t.box = LatticeBox{2, nk, Boundary::MagneticPeriodic};
    t.orbitals = 2;
    t.matrix = CMatrix::Zero(2 * nk * nk, 2 * nk * nk);
    t.matrix(0, 0) = 1.0;
    CHECK_THROWS_AS(matrix_rep(f, w, t, 2), NotTranslationInvariant);
}

TEST_CASE("coordinate map is an isometry onto coefficients for Parseval frames") {
    const int nk = 24;
    const Qwz q(nk);
    const FrameField f = parsevalize(seed_candidates(q.field, 2, 0));
    const WannierFrame w = to_wannier(f, 11);
    const LatticeBox box{2, nk, Boundary::MagneticPeriodic};
    // The truncated frame is only approximately Parseval; on the band the
    // reconstruction C^dagger C v recovers v up to the truncation error.
    CVector coeff = CVector::Zero(box.sites() * 2);
    coeff(5) = 1.0;
    const CVector v = coordinate_map_adjoint(w, box, coeff);
    const CVector back = coordinate_map_adjoint(w, box, coordinate_map(w, box, v));
    CHECK((back - v).norm() / v.norm() < 1e-3);
}
