#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>

#include "peierls/linalg.hpp"
#include "peierls/phases.hpp"

namespace peierls {

// Lattice vector of Z^d (d <= 2, unused trailing component is zero).
using Cell = std::array<int, 2>;

inline Cell operator+(const Cell& a, const Cell& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Cell operator-(const Cell& a, const Cell& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Cell operator-(const Cell& a) { return {-a[0], -a[1]}; }
inline Point to_point(const Cell& c) { return Point(c[0], c[1]); }
inline int sup_norm(const Cell& c) { return std::max(std::abs(c[0]), std::abs(c[1])); }

// Matrix-valued sequence over Z^d with finite support.
struct BlockSequence {
    int d = 2;
    int n = 1;  // block dimension
    std::map<Cell, CMatrix> blocks;
    bool self_adjoint = false;
    double tail = 0.0;  // max block norm on the outermost shell kept

    int radius() const;
    CMatrix at(const Cell& g) const;  // zero block when absent
    // Largest ||m_{-g} - m_g^dagger||.
    double adjointness_defect() const;
};

// Finite-range periodic hopping model. Blocks are stored without the energy
// shift; block(g) adds the shift on the diagonal of g = 0.
struct HoppingTable {
    int d = 2;
    int M = 1;
    std::map<Cell, CMatrix> hoppings;
    double energy_shift = 0.0;

    CMatrix block(const Cell& g) const;
    // Blocks with the shift folded into g = 0.
    std::map<Cell, CMatrix> kernel() const;
    int radius() const;
    // Throws InvalidModel naming the first offending lattice vector.
    void check_self_adjoint(double tol = 1e-12) const;
    // Sum of |g| * ||h_g||, a Lipschitz constant for the fibers.
    double lipschitz_bound() const;
    // Table with every block complex-conjugated (time reversal partner).
    HoppingTable conjugated() const;
};

struct ReciprocalGrid {
    int d = 2;
    int nk = 32;

    ReciprocalGrid() = default;
    ReciprocalGrid(int dim, int points);
    int size() const;
    Point theta(int index) const;
    Cell coords(int index) const;
    int index(Cell c) const;  // wraps
};

enum class Boundary { Open, MagneticPeriodic };

struct LatticeBox {
    int d = 2;
    int L = 8;
    Boundary boundary = Boundary::MagneticPeriodic;

    int sites() const { return d == 1 ? L : L * L; }
    Cell site(int index) const;
    int index(const Cell& x) const;  // x must lie inside the box
    // Reduce x to the box, returning the image shift n with x = site + L n.
    std::pair<Cell, Cell> reduce(const Cell& x) const;
};

struct DenseOperator {
    CMatrix matrix;
    int orbitals = 1;
    LatticeBox box;
};

// Phase acquired by the magnetic-periodic extension at y + L n (y in the box).
cplx boundary_phase(const MagneticSetup& s, const LatticeBox& box, const Cell& y, const Cell& n);

// IncommensurateFlux unless eps*b*L/(2 pi) is an integer and the fluctuation
// wavevectors are multiples of 2 pi / L.
void check_commensurate(const MagneticSetup& s, const LatticeBox& box);

// Reduced fraction p/q with eps*b = 2 pi p / q (q <= max_q). q = 1 for zero flux.
std::pair<long, long> flux_fraction(const MagneticSetup& s, long max_q = 4096);

CMatrix fiber_hamiltonian(const HoppingTable& h, const Point& theta);

// Peierls-substituted matrix: entry ((x,m),(y,m')) = Lambda(x,y) [kernel_{x-y}]_{m m'}
// summed over magnetic-periodic images.
CMatrix assemble_magnetic_kernel(const std::map<Cell, CMatrix>& kernel, int block_dim,
                                 const LatticeBox& box, const MagneticSetup& s);

DenseOperator real_space_hamiltonian(const HoppingTable& h, const LatticeBox& box,
                                     const MagneticSetup& s);

// (h_B table, h_perp = h - h_B table).
std::pair<HoppingTable, HoppingTable> kernel_split(const HoppingTable& h,
                                                   const BlockSequence& family_kernel);

namespace models {
HoppingTable chain1d(double shift = 3.0);
HoppingTable qwz(double u = -1.0, double shift = 5.0);
HoppingTable harper(double shift = 5.0);
HoppingTable fourband(double u = -1.0, double coupling = 0.3, double shift = 4.0);
// Built-in by name; throws std::invalid_argument for unknown names.
HoppingTable builtin(const std::string& name);
bool is_builtin(const std::string& name);
}  // namespace models

// Model definition document (JSON text). See README for the schema.
HoppingTable parse_model(const std::string& text);
std::string serialize_model(const HoppingTable& h);

}  // namespace peierls
