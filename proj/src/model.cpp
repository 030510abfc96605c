#include "peierls/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "peierls/errors.hpp"

namespace peierls {

namespace {

std::string cell_str(const Cell& g, int d) {
    std::ostringstream os;
    os << "(" << g[0];
    if (d == 2) os << "," << g[1];
    os << ")";
    return os.str();
}

long floor_div(long a, long b) {
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

CMatrix pauli(char which) {
    CMatrix s(2, 2);
    switch (which) {
        case 'x': s << 0, 1, 1, 0; break;
        case 'y': s << 0, cplx(0, -1), cplx(0, 1), 0; break;
        case 'z': s << 1, 0, 0, -1; break;
        default: s = CMatrix::Identity(2, 2);
    }
    return s;
}

}  // namespace

int BlockSequence::radius() const {
    int r = 0;
    for (const auto& [g, _] : blocks) r = std::max(r, sup_norm(g));
    return r;
}

CMatrix BlockSequence::at(const Cell& g) const {
    auto it = blocks.find(g);
    return it == blocks.end() ? CMatrix::Zero(n, n) : it->second;
}

double BlockSequence::adjointness_defect() const {
    double worst = 0.0;
    for (const auto& [g, m] : blocks) worst = std::max(worst, (at(-g) - m.adjoint()).norm());
    return worst;
}

CMatrix HoppingTable::block(const Cell& g) const {
    auto it = hoppings.find(g);
    CMatrix out = it == hoppings.end() ? CMatrix::Zero(M, M) : it->second;
    if (g == Cell{0, 0}) out.diagonal().array() += energy_shift;
    return out;
}

int HoppingTable::radius() const {
    int r = 0;
    for (const auto& [g, _] : hoppings) r = std::max(r, sup_norm(g));
    return r;
}

void HoppingTable::check_self_adjoint(double tol) const {
    for (const auto& [g, hg] : hoppings) {
        if (hg.rows() != M || hg.cols() != M)
            throw InvalidModel("block at gamma=" + cell_str(g, d) + " is not " +
                               std::to_string(M) + "x" + std::to_string(M));
        auto partner = hoppings.find(-g);
        CMatrix other = partner == hoppings.end() ? CMatrix::Zero(M, M) : partner->second;
        if ((other - hg.adjoint()).cwiseAbs().maxCoeff() > tol)
            throw InvalidModel("hopping table is not self-adjoint: h(-gamma) != h(gamma)^dagger at gamma=" +
                               cell_str(g, d));
    }
}

double HoppingTable::lipschitz_bound() const {
    double sum = 0.0;
    for (const auto& [g, hg] : hoppings)
        sum += std::sqrt(double(g[0]) * g[0] + double(g[1]) * g[1]) * op_norm(hg);
    return sum;
}

HoppingTable HoppingTable::conjugated() const {
    HoppingTable out = *this;
    for (auto& [g, hg] : out.hoppings) hg = hg.conjugate().eval();
    return out;
}

ReciprocalGrid::ReciprocalGrid(int dim, int points) : d(dim), nk(points) {
    if (dim < 1 || dim > 2) throw std::invalid_argument("grid: dimension must be 1 or 2");
    if (points < 4 || points % 2 != 0)
        throw std::invalid_argument("grid: n_k must be even and >= 4");
}

int ReciprocalGrid::size() const { return d == 1 ? nk : nk * nk; }

Cell ReciprocalGrid::coords(int index) const {
    return d == 1 ? Cell{index, 0} : Cell{index / nk, index % nk};
}

int ReciprocalGrid::index(Cell c) const {
    auto wrap = [this](int v) { return ((v % nk) + nk) % nk; };
    return d == 1 ? wrap(c[0]) : wrap(c[0]) * nk + wrap(c[1]);
}

Point ReciprocalGrid::theta(int index) const {
    Cell c = coords(index);
    return Point(kTwoPi * c[0] / nk, d == 1 ? 0.0 : kTwoPi * c[1] / nk);
}

Cell LatticeBox::site(int index) const {
    return d == 1 ? Cell{index, 0} : Cell{index / L, index % L};
}

int LatticeBox::index(const Cell& x) const { return d == 1 ? x[0] : x[0] * L + x[1]; }

std::pair<Cell, Cell> LatticeBox::reduce(const Cell& x) const {
    Cell n{static_cast<int>(floor_div(x[0], L)), d == 1 ? 0 : static_cast<int>(floor_div(x[1], L))};
    Cell y{x[0] - L * n[0], x[1] - L * n[1]};
    return {y, n};
}

cplx boundary_phase(const MagneticSetup& s, const LatticeBox& box, const Cell& y, const Cell& n) {
    if (n == Cell{0, 0}) return 1.0;
    MagneticSetup constant_only = s;
    constant_only.c = 0.0;
    const Point shift = Point(double(box.L) * n[0], double(box.L) * n[1]);
    return lambda_const(constant_only, to_point(y), shift) *
           lambda_const(constant_only, Point(double(box.L) * n[0], 0.0),
                        Point(0.0, double(box.L) * n[1]));
}

std::pair<long, long> flux_fraction(const MagneticSetup& s, long max_q) {
    const double f = s.plaquette_flux() / kTwoPi;
    for (long q = 1; q <= max_q; ++q) {
        const double p = f * q;
        if (std::abs(p - std::round(p)) < 1e-9 * std::max(1.0, std::abs(p))) {
            return {std::lround(p), q};
        }
    }
    throw IncommensurateFlux("flux eps*b/(2 pi) = " + std::to_string(f) +
                             " has no rational form with denominator <= " + std::to_string(max_q));
}

void check_commensurate(const MagneticSetup& s, const LatticeBox& box) {
    if (box.boundary != Boundary::MagneticPeriodic) return;
    const double windings = s.plaquette_flux() * box.L / kTwoPi;
    if (std::abs(windings - std::round(windings)) > 1e-9)
        throw IncommensurateFlux("eps*b*L/(2 pi) = " + std::to_string(windings) +
                                 " is not an integer for L=" + std::to_string(box.L));
    if (s.c != 0.0) {
        for (const auto& m : s.fluct.modes) {
            for (int k = 0; k < box.d; ++k) {
                const double turns = m.wavevector(k) * box.L / kTwoPi;
                if (std::abs(turns - std::round(turns)) > 1e-9)
                    throw IncommensurateFlux(
                        "fluctuation wavevector is not a multiple of 2 pi / L on the periodic box");
            }
        }
    }
}

CMatrix fiber_hamiltonian(const HoppingTable& h, const Point& theta) {
    CMatrix out = CMatrix::Zero(h.M, h.M);
    for (const auto& [g, hg] : h.hoppings)
        out += std::polar(1.0, -(theta(0) * g[0] + theta(1) * g[1])) * hg;
    out.diagonal().array() += h.energy_shift;
    return out;
}

CMatrix assemble_magnetic_kernel(const std::map<Cell, CMatrix>& kernel, int block_dim,
                                 const LatticeBox& box, const MagneticSetup& s) {
    s.validate();
    check_commensurate(s, box);
    const int n_sites = box.sites();
    CMatrix out = CMatrix::Zero(Eigen::Index(n_sites) * block_dim, Eigen::Index(n_sites) * block_dim);
    for (int ix = 0; ix < n_sites; ++ix) {
        const Cell x = box.site(ix);
        for (const auto& [g, block] : kernel) {
            const Cell image = x - g;
            auto [y, n] = box.reduce(image);
            if (box.boundary == Boundary::Open && n != Cell{0, 0}) continue;
            cplx phase = lambda_total(s, to_point(x), to_point(image));
            if (n != Cell{0, 0}) phase *= boundary_phase(s, box, y, n);
            out.block(Eigen::Index(ix) * block_dim, Eigen::Index(box.index(y)) * block_dim, block_dim,
                      block_dim) += phase * block;
        }
    }
    return out;
}

std::map<Cell, CMatrix> HoppingTable::kernel() const {
    std::map<Cell, CMatrix> k = hoppings;
    k[Cell{0, 0}] = block(Cell{0, 0});
    return k;
}

DenseOperator real_space_hamiltonian(const HoppingTable& h, const LatticeBox& box,
                                     const MagneticSetup& s) {
    DenseOperator op;
    op.matrix = assemble_magnetic_kernel(h.kernel(), h.M, box, s);
    op.orbitals = h.M;
    op.box = box;
    return op;
}

std::pair<HoppingTable, HoppingTable> kernel_split(const HoppingTable& h,
                                                   const BlockSequence& family_kernel) {
    if (family_kernel.n != h.M)
        throw ShapeMismatch("family kernel blocks are " + std::to_string(family_kernel.n) +
                            "x" + std::to_string(family_kernel.n) + ", table has M=" +
                            std::to_string(h.M));
    HoppingTable hb;
    hb.d = h.d;
    hb.M = h.M;
    hb.energy_shift = 0.0;
    hb.hoppings = family_kernel.blocks;
    HoppingTable hperp = h;
    for (const auto& [g, k] : family_kernel.blocks) {
        auto it = hperp.hoppings.find(g);
        if (it == hperp.hoppings.end())
            hperp.hoppings.emplace(g, -k);
        else
            it->second -= k;
    }
    return {hb, hperp};
}

namespace models {

HoppingTable chain1d(double shift) {
    HoppingTable h;
    h.d = 1;
    h.M = 1;
    h.energy_shift = shift;
    h.hoppings[{1, 0}] = CMatrix::Constant(1, 1, 1.0);
    h.hoppings[{-1, 0}] = CMatrix::Constant(1, 1, 1.0);
    return h;
}

HoppingTable qwz(double u, double shift) {
    const cplx i(0, 1);
    HoppingTable h;
    h.d = 2;
    h.M = 2;
    h.energy_shift = shift;
    h.hoppings[{0, 0}] = u * pauli('z');
    h.hoppings[{1, 0}] = 0.5 * (pauli('z') - i * pauli('x'));
    h.hoppings[{-1, 0}] = 0.5 * (pauli('z') + i * pauli('x'));
    h.hoppings[{0, 1}] = 0.5 * (pauli('z') - i * pauli('y'));
    h.hoppings[{0, -1}] = 0.5 * (pauli('z') + i * pauli('y'));
    return h;
}

HoppingTable harper(double shift) {
    HoppingTable h;
    h.d = 2;
    h.M = 1;
    h.energy_shift = shift;
    for (Cell g : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}})
        h.hoppings[g] = CMatrix::Constant(1, 1, 1.0);
    return h;
}

HoppingTable fourband(double u, double coupling, double shift) {
    HoppingTable base = qwz(u, 0.0);
    HoppingTable h;
    h.d = 2;
    h.M = 4;
    h.energy_shift = shift;
    for (const auto& [g, b] : base.hoppings) {
        CMatrix big = CMatrix::Zero(4, 4);
        big.block(0, 0, 2, 2) = b;
        big.block(2, 2, 2, 2) = b;
        h.hoppings[g] = big;
    }
    CMatrix& onsite = h.hoppings[{0, 0}];
    onsite.block(0, 2, 2, 2) += coupling * CMatrix::Identity(2, 2);
    onsite.block(2, 0, 2, 2) += coupling * CMatrix::Identity(2, 2);
    return h;
}

bool is_builtin(const std::string& name) {
    return name == "chain1d" || name == "qwz" || name == "harper" || name == "fourband";
}

HoppingTable builtin(const std::string& name) {
    if (name == "chain1d") return chain1d();
    if (name == "qwz") return qwz();
    if (name == "harper") return harper();
    if (name == "fourband") return fourband();
    throw std::invalid_argument("unknown built-in model '" + name + "'");
}

}  // namespace models

}  // namespace peierls
