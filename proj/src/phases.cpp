#include "peierls/phases.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "peierls/errors.hpp"

namespace peierls {

ConstantField ConstantField::plane(double b12) {
    ConstantField f;
    f.d = 2;
    f.b << 0.0, b12, -b12, 0.0;
    return f;
}

ConstantField ConstantField::none(int d) {
    ConstantField f;
    f.d = d;
    return f;
}

bool FluctuationPotential::is_zero() const {
    if (constant.squaredNorm() != 0.0) return false;
    for (const auto& m : modes)
        if (m.amplitude.squaredNorm() != 0.0) return false;
    return true;
}

Point FluctuationPotential::value(const Point& x) const {
    Point v = constant;
    for (const auto& m : modes) v += m.amplitude * std::cos(m.wavevector.dot(x) + m.phase);
    return v;
}

void MagneticSetup::validate() const {
    if (!(eps >= 0.0)) throw std::invalid_argument("magnetic setup: eps must be >= 0");
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("magnetic setup: c must lie in [0,1]");
    if ((field.b + field.b.transpose()).norm() > 1e-14)
        throw std::invalid_argument("magnetic setup: constant field not antisymmetric");
    if (quadrature_nodes < 1) throw std::invalid_argument("magnetic setup: quadrature_nodes < 1");
}

const Quadrature& gauss_legendre_unit(int n) {
    static std::mutex mu;
    static std::map<int, Quadrature> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    // Newton iteration on P_n from the Chebyshev guesses.
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        q.nodes[i] = 0.5 * (1.0 - x);
        q.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // (2/((1-x^2)P'^2)) / 2
    }
    return cache.emplace(n, std::move(q)).first->second;
}

cplx lambda_const(const MagneticSetup& s, const Point& x, const Point& y) {
    const auto& b = s.field.b;
    long double acc = 0.0L;
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            acc += static_cast<long double>(b(k, j)) * x(k) * y(j);
    long double angle = -0.5L * static_cast<long double>(s.eps) * acc;
    angle = std::fmod(angle, 2.0L * 3.141592653589793238462643383279502884L);
    return std::polar(1.0, static_cast<double>(angle));
}

double fluct_line_integral(const MagneticSetup& s, const Point& x, const Point& y) {
    const Point delta = y - x;
    if (delta.squaredNorm() == 0.0) return 0.0;
    const Quadrature& q = gauss_legendre_unit(s.quadrature_nodes);
    double sum = 0.0;
    for (size_t i = 0; i < q.nodes.size(); ++i)
        sum += q.weights[i] * s.fluct.value(x + q.nodes[i] * delta).dot(delta);
    return sum;
}

cplx lambda_fluct(const MagneticSetup& s, const Point& x, const Point& y) {
    if (s.c == 0.0 || s.eps == 0.0 || s.fluct.is_zero()) return 1.0;
    return std::polar(1.0, -s.c * s.eps * fluct_line_integral(s, x, y));
}

cplx lambda_total(const MagneticSetup& s, const Point& x, const Point& y) {
    return lambda_fluct(s, x, y) * lambda_const(s, x, y);
}

cplx flux_phase(const MagneticSetup& s, const Point& x, const Point& y, const Point& z) {
    return lambda_total(s, x, y) * lambda_total(s, y, z) * lambda_total(s, z, x);
}

cplx flux_phase_constant_closed(const MagneticSetup& s, const Point& x, const Point& y,
                                const Point& z) {
    const Point u = y - x, v = z - x;
    // <B, u ^ v> with the pairing sum_{kj} B_kj u_k v_j.
    double pairing = 0.0;
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) pairing += s.field.b(k, j) * u(k) * v(j);
    return std::polar(1.0, -0.5 * s.eps * pairing);
}

}  // namespace peierls
