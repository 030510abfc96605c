#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "peierls/bloch.hpp"
#include "peierls/errors.hpp"
#include "peierls/model.hpp"

using namespace peierls;

namespace {

double qwz_gap_function(double u, const Point& th) {
    const double a = std::sin(th[0]), b = std::sin(th[1]), c = u + std::cos(th[0]) + std::cos(th[1]);
    return std::sqrt(a * a + b * b + c * c);
}

}  // namespace

TEST_CASE("QWZ fiber at the origin") {
    const RVector ev = hermitian_eigvals(fiber_hamiltonian(models::qwz(-1.0, 0.0), pt(0, 0)));
    CHECK(ev(0) == doctest::Approx(-1.0));
    CHECK(ev(1) == doctest::Approx(1.0));
}

TEST_CASE("QWZ fibers follow the closed-form band formula") {
    for (double shift : {0.0, 3.0, 5.0})
        for (double t1 : {0.0, 0.4, 1.9, M_PI})
            for (double t2 : {0.0, 0.7, 2.5, M_PI}) {
                const Point th = pt(t1, t2);
                const RVector ev = hermitian_eigvals(fiber_hamiltonian(models::qwz(-1.0, shift), th));
                const double r = qwz_gap_function(-1.0, th);
                CHECK(ev(0) == doctest::Approx(shift - r).epsilon(1e-13));
                CHECK(ev(1) == doctest::Approx(shift + r).epsilon(1e-13));
            }
    // At (pi, pi) the shift-3 bands touch {0, 6}.
    const RVector ev = hermitian_eigvals(fiber_hamiltonian(models::qwz(-1.0, 3.0), pt(M_PI, M_PI)));
    CHECK(std::abs(ev(0)) < 1e-14);
    CHECK(ev(1) == doctest::Approx(6.0));
}

TEST_CASE("chain with shift 3 has the band 3 + 2 cos") {
    const HoppingTable h = models::chain1d(3.0);
    for (double t : {0.0, 1.0, 2.0, M_PI}) CHECK(fiber_hamiltonian(h, pt(t))(0, 0).real() == doctest::Approx(3 + 2 * std::cos(t)));
}

TEST_CASE("non-self-adjoint tables are rejected") {
    HoppingTable h = models::chain1d();
    h.hoppings[{1, 0}](0, 0) = 2.0;
    CHECK_THROWS_AS(h.check_self_adjoint(), InvalidModel);
}

TEST_CASE("model documents round-trip") {
    const HoppingTable h = models::qwz(-1.2, 4.0);
    const HoppingTable back = parse_model(serialize_model(h));
    CHECK(back.d == 2);
    CHECK(back.M == 2);
    CHECK(back.energy_shift == 4.0);
    for (const auto& [g, b] : h.hoppings) CHECK((back.hoppings.at(g) - b).norm() == 0.0);
    CHECK_THROWS_AS(parse_model(R"({"dimension": 2, "orbitals": 1, "hoppings": [], "extra": 1})"), InvalidModel);
    CHECK_THROWS_AS(parse_model(R"({"dimension": 2, "orbitals": 1,
        "hoppings": [{"gamma": [1, 0], "block": [[1, 0]]}]})"), InvalidModel);
}

TEST_CASE("box reduction returns the image shift") {
    const LatticeBox box{2, 8, Boundary::MagneticPeriodic};
    const auto [y, n] = box.reduce({-1, 17});
    CHECK(y == Cell{7, 1});
    CHECK(n == Cell{-1, 2});
    for (int i = 0; i < box.sites(); ++i) CHECK(box.index(box.site(i)) == i);
}

TEST_CASE("zero-field periodic box reproduces the Bloch samples") {
    const HoppingTable h = models::qwz(-1.0, 5.0);
    const LatticeBox box{2, 6, Boundary::MagneticPeriodic};
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    const RVector got = hermitian_eigvals(real_space_hamiltonian(h, box, s).matrix);
    const BandStructure bands = compute_bands(h, ReciprocalGrid(2, 6));
    std::vector<double> ref;
    for (const auto& v : bands.values) ref.insert(ref.end(), v.data(), v.data() + v.size());
    std::sort(ref.begin(), ref.end());
    REQUIRE(static_cast<size_t>(got.size()) == ref.size());
    for (size_t i = 0; i < ref.size(); ++i) CHECK(got(static_cast<Eigen::Index>(i)) == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("magnetic box Hamiltonian is Hermitian and needs commensurate flux") {
    const HoppingTable h = models::qwz(-1.0, 5.0);
    const LatticeBox box{2, 8, Boundary::MagneticPeriodic};
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    s.eps = 2 * M_PI * 3 / 8;
    const CMatrix m = real_space_hamiltonian(h, box, s).matrix;
    CHECK((m - m.adjoint()).norm() < 1e-13);
    s.eps = 0.1;
    CHECK_THROWS_AS(check_commensurate(s, box), IncommensurateFlux);
}

TEST_CASE("flux fractions are reduced") {
    MagneticSetup s;
    s.field = ConstantField::plane(1.0);
    s.eps = 2 * M_PI * 6 / 64;
    CHECK(flux_fraction(s) == std::pair<long, long>{3, 32});
}
