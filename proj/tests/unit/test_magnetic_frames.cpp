#include <doctest.h>

#include <cmath>
#include <random>

#include "peierls/errors.hpp"
#include "peierls/pipeline.hpp"

using namespace peierls;

namespace {

MagneticSetup flux(double eps) {
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    s.eps = eps;
    return s;
}

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v;
}

BlockSequence random_sequence(int n, int radius, std::mt19937_64& rng) {
    BlockSequence s;
    s.d = 2;
    s.n = n;
    std::normal_distribution<double> g;
    for (int a = -radius; a <= radius; ++a)
        for (int b = -radius; b <= radius; ++b) {
            CMatrix m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
            s.blocks[{a, b}] = m;
        }
    return s;
}

std::shared_ptr<const ZakSectors> single_site(int dim) {
    MagneticSetup s;
    s.field = ConstantField::none(1);
    return ZakSectors::trivial(LatticeBox{1, 1, Boundary::MagneticPeriodic}, dim, s);
}

SectorOperator single_block(const CMatrix& m) {
    const auto b = single_site(static_cast<int>(m.rows()));
    return SectorOperator(b, b, {m});
}

PipelineOptions small_qwz() {
    PipelineOptions o;
    o.model = models::qwz();
    o.nk = 32;
    o.L = 32;
    o.frame_radius = 12;
    o.kernel_radius = 12;
    o.hopping_radius = 12;
    return o;
}

}  // namespace

TEST_CASE("magnetic translations compose with the cocycle") {
    const LatticeBox box{2, 12, Boundary::MagneticPeriodic};
    const MagneticSetup s = flux(2 * M_PI / 4);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> site(-7, 7);
    const CVector f = random_vector(box.sites() * 2, rng);
    for (int n = 0; n < 30; ++n) {
        const Cell a{site(rng), site(rng)}, b{site(rng), site(rng)};
        const CVector lhs = zak_translate(s, box, 2, zak_translate(s, box, 2, f, b), a);
        const CVector rhs = lambda_total(s, to_point(b), to_point(a)) * zak_translate(s, box, 2, f, a + b);
        CHECK((lhs - rhs).norm() < 1e-12 * f.norm());
    }
}

TEST_CASE("Sz.-Nagy intertwiner of two lines in the plane is a rotation") {
    for (double t : {0.1, 0.5, 1.2}) {
        CMatrix p = CMatrix::Zero(2, 2);
        p(0, 0) = 1.0;
        Eigen::Vector2cd u(std::cos(t), std::sin(t));
        const CMatrix q = u * u.adjoint();
        const Intertwiner w = nagy_intertwiner(single_block(p), single_block(q));
        CMatrix rot(2, 2);
        rot << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
        CHECK((w.unitary.blocks[0] - rot).norm() < 1e-12);
        CHECK(w.distance == doctest::Approx(std::sin(t)).epsilon(1e-12));
        CHECK((p * w.unitary.blocks[0] - w.unitary.blocks[0] * q).norm() < 1e-12);
    }
    CMatrix p = CMatrix::Zero(2, 2), q = CMatrix::Zero(2, 2);
    p(0, 0) = 1.0;
    q(1, 1) = 1.0;
    CHECK_THROWS_AS(nagy_intertwiner(single_block(p), single_block(q)), ProjectionsTooFar);
}

TEST_CASE("Theta and the projection near one of an almost-projection") {
    std::mt19937_64 rng(4);
    CMatrix a = CMatrix::Zero(8, 8);
    for (int i = 0; i < 8; ++i) a.col(i) = random_vector(8, rng);
    const Eigen::HouseholderQR<CMatrix> qr(a);
    const CMatrix basis = qr.householderQ() * CMatrix::Identity(8, 3);
    CMatrix noise = 0.04 * (a + a.adjoint()) / a.norm();
    const CMatrix pt = basis * basis.adjoint() + noise;
    const SectorOperator ptilde = single_block(pt);
    const SectorOperator q = spectral_projection_near_one(ptilde);
    const SectorOperator theta = theta_operator(ptilde);
    const CMatrix& qm = q.blocks[0];
    CHECK((qm * qm - qm).norm() < 1e-12);
    CHECK(std::abs(qm.trace() - 3.0) < 1e-12);
    CHECK(((theta * ptilde * theta).blocks[0] - qm).norm() < 1e-12);
    CHECK((spectral_projection_near_one(ptilde, CalculusRoute::Contour).blocks[0] - qm).norm() < 1e-10);
    CHECK((theta_operator(ptilde, CalculusRoute::Contour).blocks[0] - theta.blocks[0]).norm() < 1e-10);

    CMatrix half = CMatrix::Zero(2, 2);
    half(0, 0) = 1.0;
    half(1, 1) = 0.5;
    CHECK_THROWS_AS(spectral_projection_near_one(single_block(half)), NoSpectralDichotomy);
}

TEST_CASE("frame sums over the sector group equal the sum over every translate") {
    const LatticeBox box{2, 6, Boundary::MagneticPeriodic};
    const MagneticSetup s = flux(2 * M_PI / 3);
    const auto basis = ZakSectors::adapted(box, 2, s);
    REQUIRE(basis->cell_sites() > 1);
    std::mt19937_64 rng(9);
    const std::vector<CVector> fs{random_vector(basis->full_size(), rng), random_vector(basis->full_size(), rng)};
    const SectorOperator sum = frame_sum(basis, cell_translates(*basis, fs), 2);
    CMatrix dense = CMatrix::Zero(basis->full_size(), basis->full_size());
    for (int i = 0; i < box.sites(); ++i)
        for (const auto& f : fs) {
            const CVector t = zak_translate(s, box, 2, f, box.site(i));
            dense += t * t.adjoint();
        }
    CHECK((sum.dense() - dense).norm() < 1e-10 * dense.norm());
}

TEST_CASE("twisted product is the symbol of the operator product") {
    std::mt19937_64 rng(21);
    const LatticeBox box{2, 12, Boundary::MagneticPeriodic};
    for (int k : {1, 5}) {
        const MagneticSetup s = flux(2 * M_PI * k / 12);
        const BlockSequence a = random_sequence(2, 1, rng), b = random_sequence(2, 2, rng);
        const CMatrix lhs = magnetic_quantize_dense(a, s, box) * magnetic_quantize_dense(b, s, box);
        const CMatrix rhs = magnetic_quantize_dense(twisted_product(a, b, s), s, box);
        CHECK((lhs - rhs).norm() < 1e-11 * lhs.norm());
    }
}

TEST_CASE("sector quantization agrees with the dense one") {
    std::mt19937_64 rng(2);
    const LatticeBox box{2, 12, Boundary::MagneticPeriodic};
    const MagneticSetup s = flux(2 * M_PI * 2 / 12);
    const BlockSequence a = random_sequence(2, 2, rng);
    const auto basis = ZakSectors::adapted(box, 2, s);
    CHECK((magnetic_quantize(a, basis).op.dense() - magnetic_quantize_dense(a, s, box)).norm() < 1e-11);
    const BlockSequence wide = random_sequence(2, 6, rng);
    CHECK_THROWS_AS(magnetic_quantize(wide, basis), PaddingInsufficient);
}

TEST_CASE("magnetic frame of the QWZ lower band") {
    const UnperturbedModel m = prepare_model(small_qwz());
    std::vector<double> idem;
    for (int k : {1, 2}) {
        const ReducedPoint rp = reduced_point(m, flux_setup(m.options, k, 0.0));
        CHECK(rp.frame.used_ptilde);
        CHECK(rp.frame.used_theta);
        CHECK(rp.frame.used_u);
        CHECK(rp.frame.parseval_defect <= 1e-9);
        CHECK(rp.matrix.violation < 1e-9);
        const SectorOperator c = rp.frame.coordinate_map();
        CHECK(((c.adjoint() * c) - rp.band.p).norm() < 1e-9);
        CHECK(rp.matrix.hoppings.adjointness_defect() < 1e-10);
        idem.push_back(rp.frame.ptilde_idempotency);
        // Small flux keeps the dressed hoppings close to the zero-field ones.
        CHECK(dressing_deviation(rp.matrix.hoppings, m.m0, 0.0) < 0.2);
    }
    // ||P~^2 - P~|| is linear in the flux.
    CHECK(idem[0] / idem[1] >= 0.4);
    CHECK(idem[0] / idem[1] <= 0.6);
}
