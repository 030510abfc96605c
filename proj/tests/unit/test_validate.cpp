#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "peierls/errors.hpp"
#include "peierls/validate.hpp"

using namespace peierls;

TEST_CASE("window-restricted Hausdorff distance") {
    const auto s = [](std::vector<double> v) { return SpectrumSet::make(std::move(v), "test"); };
    CHECK(hausdorff_in_window(s({1.0, 2.0}), s({1.1, 2.3}), 0.0, 10.0) == doctest::Approx(0.3));
    // Points outside J only serve as targets.
    CHECK(hausdorff_in_window(s({1.0, 5.0}), s({1.1}), 0.0, 3.0) == doctest::Approx(0.1));
    CHECK(hausdorff_in_window(s({1.0}), s({1.0}), 0.0, 3.0) == 0.0);
    CHECK(hausdorff_in_window(s({5.0}), s({6.0}), 0.0, 3.0) == 0.0);
    CHECK_THROWS_AS(hausdorff_in_window(s({1.0}), s({6.0}), 0.0, 3.0), OneSideEmpty);
    CHECK_THROWS_AS(SpectrumSet::make({1.0, std::nan("")}, "bad"), std::invalid_argument);
}

TEST_CASE("Hausdorff distance is symmetric and vanishes on equal sets") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 4);
    for (int n = 0; n < 20; ++n) {
        std::vector<double> a(12), b(9);
        for (auto& x : a) x = u(rng);
        for (auto& x : b) x = u(rng);
        const auto sa = SpectrumSet::make(a, "a"), sb = SpectrumSet::make(b, "b");
        CHECK(hausdorff_in_window(sa, sb, -1, 5) == hausdorff_in_window(sb, sa, -1, 5));
        CHECK(hausdorff_in_window(sa, sa, -1, 5) == 0.0);
    }
}

TEST_CASE("log-log fits recover power laws") {
    std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5}, y;
    for (double v : x) y.push_back(3.0 * v * v);
    const LogLogFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.residual < 1e-12);
    CHECK(f.claim_ok());
    CHECK_FALSE(fit_loglog({0.1, 0.2, 0.3}, {1, 2, 3}).claim_ok());
    CHECK_THROWS_AS(fit_loglog({0.1, 0.2}, {1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("envelope fits recover a + b (1 + t)^n") {
    const std::vector<double> t{0, 1, 2, 4, 8};
    std::vector<double> e;
    for (double x : t) e.push_back(0.01 + 0.002 * std::pow(1 + x, 3));
    const EnvelopeFit f = fit_envelope(t, e, 3.0);
    CHECK(f.a == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(f.b == doctest::Approx(0.002).epsilon(1e-10));
    CHECK(f.residual < 1e-10);
    CHECK(fit_envelope(t, e, 4.0).residual > 1e-3);
}

TEST_CASE("Harper oracle matches the magnetic box spectrum") {
    BlockSequence harper;
    harper.d = 2;
    harper.n = 1;
    harper.blocks = models::harper(0.0).kernel();
    for (auto [q, L] : {std::pair{3, 15}, std::pair{5, 15}, std::pair{3, 30}, std::pair{5, 30}}) {
        const auto rows = butterfly_sweep(harper, {{1, q}}, L);
        std::vector<double> got;
        for (const auto& r : rows) got.push_back(r.energy);
        std::sort(got.begin(), got.end());
        const auto ref = harper_oracle(1, q, L);
        REQUIRE(got.size() == ref.size());
        for (size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - ref[i]) < 1e-8);
    }
    // Dense real-space route at one flux.
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    s.eps = 2 * M_PI / 3;
    const RVector dense =
        hermitian_eigvals(real_space_hamiltonian(models::harper(0.0), LatticeBox{2, 6, Boundary::MagneticPeriodic}, s).matrix);
    const auto ref = harper_oracle(1, 3, 6);
    for (size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(dense(static_cast<Eigen::Index>(i)) - ref[i]) < 1e-10);
    CHECK_THROWS_AS(harper_oracle(1, 4, 15), IncommensurateFlux);
}

TEST_CASE("Harper spectrum at flux 2 pi / 2 is symmetric") {
    const auto ev = harper_oracle(1, 2, 8);
    for (size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(ev[i] + ev[ev.size() - 1 - i]) < 1e-12);
}

TEST_CASE("evolution is unitary and a one-parameter group") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    CMatrix h(16, 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) h(i, j) = cplx(g(rng), g(rng));
    h = (h + h.adjoint()).eval();
    CVector v(16);
    for (int i = 0; i < 16; ++i) v(i) = cplx(g(rng), g(rng));
    CHECK((evolve(h, v, 0.0) - v).norm() < 1e-12);
    CHECK(evolve(h, v, 3.7).norm() == doctest::Approx(v.norm()).epsilon(1e-12));
    CHECK((evolve(h, evolve(h, v, 0.4), 1.1) - evolve(h, v, 1.5)).norm() < 1e-11);
    CHECK((evolve(h, evolve(h, v, 2.0), -2.0) - v).norm() < 1e-11);
}

TEST_CASE("sector propagator agrees with dense evolution") {
    const LatticeBox box{2, 6, Boundary::MagneticPeriodic};
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    s.eps = 2 * M_PI / 3;
    const auto basis = ZakSectors::adapted(box, 2, s);
    const SectorOperator h = SectorOperator::from_kernel(basis, models::qwz().kernel());
    const SectorPropagator u(h);
    CVector v = CVector::Zero(basis->full_size());
    v(3) = 1.0;
    v(17) = cplx(0.0, 2.0);
    CHECK((u.apply(v, 1.3) - evolve(h.dense(), v, 1.3)).norm() < 1e-11);
}
