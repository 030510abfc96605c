#pragma once

#include <Eigen/Dense>
#include <vector>

#include "peierls/linalg.hpp"

namespace peierls {

// Points of R^d for d <= 2; in d = 1 the second coordinate stays zero.
using Point = Eigen::Vector2d;

inline Point pt(double x, double y = 0.0) { return Point(x, y); }

struct ConstantField {
    int d = 2;
    Eigen::Matrix2d b = Eigen::Matrix2d::Zero();  // antisymmetric

    static ConstantField plane(double b12);  // d = 2, B_12 = b12
    static ConstantField none(int d);
    double b12() const { return b(0, 1); }
};

// One real trigonometric term amplitude * cos(<k, x> + phase).
struct FluctuationMode {
    Point wavevector = Point::Zero();
    Point amplitude = Point::Zero();
    double phase = 0.0;
};

// Bounded vector potential: constant + sum of cosine modes.
struct FluctuationPotential {
    Point constant = Point::Zero();
    std::vector<FluctuationMode> modes;

    bool is_zero() const;
    Point value(const Point& x) const;
};

struct MagneticSetup {
    ConstantField field;
    FluctuationPotential fluct;
    double eps = 0.0;
    double c = 0.0;
    int quadrature_nodes = 16;

    // Flux per unit plaquette, eps * B_12.
    double plaquette_flux() const { return eps * field.b12(); }
    void validate() const;
};

// Gauss-Legendre nodes and weights mapped to [0, 1].
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const Quadrature& gauss_legendre_unit(int n);

// exp(-(i eps / 2) sum_{kj} B_kj x_k y_j)
cplx lambda_const(const MagneticSetup& s, const Point& x, const Point& y);

// Line integral of the fluctuation potential along [x, y] (quadrature).
double fluct_line_integral(const MagneticSetup& s, const Point& x, const Point& y);

// exp(-i c eps \int_{[x,y]} A)
cplx lambda_fluct(const MagneticSetup& s, const Point& x, const Point& y);

// Full phase: lambda_fluct * lambda_const.
cplx lambda_total(const MagneticSetup& s, const Point& x, const Point& y);

// Lambda(x,y) Lambda(y,z) Lambda(z,x) with the full phase.
cplx flux_phase(const MagneticSetup& s, const Point& x, const Point& y, const Point& z);

// Closed form of the constant-field part: exp(-(i eps / 2) <B, (y-x) ^ (z-x)>),
// i.e. exp(-i eps b * signed area) in d = 2.
cplx flux_phase_constant_closed(const MagneticSetup& s, const Point& x, const Point& y,
                                const Point& z);

}  // namespace peierls
