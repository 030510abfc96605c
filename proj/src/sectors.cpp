#include "peierls/sectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "peierls/errors.hpp"

namespace peierls {

namespace {

int minimal_period(const MagneticSetup& s, int axis, int L) {
    if (s.c == 0.0 || s.fluct.is_zero()) return 1;
    for (int ell = 1; ell <= L; ++ell) {
        if (L % ell != 0) continue;
        bool ok = true;
        for (const auto& m : s.fluct.modes) {
            if (m.amplitude.squaredNorm() == 0.0) continue;
            const double turns = m.wavevector(axis) * ell / kTwoPi;
            if (std::abs(turns - std::round(turns)) > 1e-9) { ok = false; break; }
        }
        if (ok) return ell;
    }
    return L;
}

}  // namespace

std::pair<Cell, cplx> translate_delta(const MagneticSetup& s, const LatticeBox& box, const Cell& y,
                                      cplx value, const Cell& g) {
    MagneticSetup constant_only = s;
    constant_only.c = 0.0;
    auto [x, nprime] = box.reduce(y + g);
    const Cell n = -nprime;
    return {x, lambda_const(constant_only, to_point(x), to_point(g)) * boundary_phase(s, box, y, n) * value};
}

ZakSectors::ZakSectors(const LatticeBox& box, int block_dim, const MagneticSetup& setup, int l1, int l2)
    : box_(box), block_dim_(block_dim), setup_(setup), l1_(l1), l2_(box.d == 1 ? 1 : l2) {
    if (box.boundary != Boundary::MagneticPeriodic)
        throw std::invalid_argument("symmetry sectors need a magnetic-periodic box");
    check_commensurate(setup, box);
    if (l1_ < 1 || box.L % l1_ != 0 || l2_ < 1 || (box.d == 2 && box.L % l2_ != 0))
        throw std::invalid_argument("sector translations must divide the box side");
    n1_ = box.L / l1_;
    n2_ = box.d == 1 ? 1 : box.L / l2_;
    if (box.d == 1) l2_ = 1;
    const double turns = setup.plaquette_flux() * l1_ * l2_ / kTwoPi;
    if (box.d == 2 && std::abs(turns - std::round(turns)) > 1e-9)
        throw IncommensurateFlux("sector translations (" + std::to_string(l1_) + ",0),(0," +
                                 std::to_string(l2_) + ") do not commute at this flux");

    for (int r1 = 0; r1 < l1_; ++r1)
        for (int r2 = 0; r2 < (box.d == 1 ? 1 : l2_); ++r2) cell_.push_back({r1, r2});

    chars_.resize(static_cast<size_t>(n1_ * n2_ * n1_ * n2_));
    for (int sec = 0; sec < n1_ * n2_; ++sec)
        for (int a = 0; a < n1_; ++a)
            for (int b = 0; b < n2_; ++b) {
                const int s1 = sec / n2_, s2 = sec % n2_;
                const long t1 = (long(s1) * a) % n1_, t2 = (long(s2) * b) % n2_;
                chars_[static_cast<size_t>((sec * n1_ + a) * n2_ + b)] =
                    std::polar(1.0, kTwoPi * (double(t1) / n1_ + double(t2) / n2_));
            }

    orbit_.assign(static_cast<size_t>(box.sites()), Orbit{-1, 0, 0, 0.0});
    const Cell step1{l1_, 0};
    const Cell step2{0, box.d == 1 ? 0 : l2_};
    for (int r = 0; r < cell_sites(); ++r) {
        std::pair<Cell, cplx> column{cell_[static_cast<size_t>(r)], 1.0};
        for (int b = 0; b < n2_; ++b) {
            if (b > 0) column = translate_delta(setup_, box_, column.first, column.second, step2);
            std::pair<Cell, cplx> cur = column;
            for (int a = 0; a < n1_; ++a) {
                if (a > 0) cur = translate_delta(setup_, box_, cur.first, cur.second, step1);
                Orbit& o = orbit_[static_cast<size_t>(box_.index(cur.first))];
                if (o.cell_index != -1) throw std::logic_error("sector orbits overlap");
                o = Orbit{r, a, b, cur.second};
            }
        }
    }
}

std::shared_ptr<const ZakSectors> ZakSectors::adapted(const LatticeBox& box, int block_dim,
                                                      const MagneticSetup& setup) {
    check_commensurate(setup, box);
    const int l1a = minimal_period(setup, 0, box.L);
    if (box.d == 1) return std::make_shared<const ZakSectors>(box, block_dim, setup, l1a, 1);
    const int l2a = minimal_period(setup, 1, box.L);
    const long q = flux_fraction(setup).second;
    const int l1 = std::lcm(static_cast<int>(q), l1a);
    return std::make_shared<const ZakSectors>(box, block_dim, setup, l1, l2a);
}

std::shared_ptr<const ZakSectors> ZakSectors::trivial(const LatticeBox& box, int block_dim,
                                                      const MagneticSetup& setup) {
    return std::make_shared<const ZakSectors>(box, block_dim, setup, box.L, box.L);
}

std::shared_ptr<const ZakSectors> ZakSectors::with_block_dim(int block_dim) const {
    return std::make_shared<const ZakSectors>(box_, block_dim, setup_, l1_, l2_);
}


std::vector<CVector> ZakSectors::decompose(const CVector& full) const {
    if (full.size() != full_size()) throw ShapeMismatch("vector length does not match the box");
    const int ns = sector_count();
    const double norm = 1.0 / std::sqrt(double(ns));
    std::vector<CVector> parts(static_cast<size_t>(ns), CVector::Zero(sector_size()));
    std::vector<cplx> chars(static_cast<size_t>(ns));
    for (int x = 0; x < box_.sites(); ++x) {
        const Orbit& o = orbit_[static_cast<size_t>(x)];
        const cplx base = std::conj(o.weight) * norm;
        for (int s = 0; s < ns; ++s) {
            const cplx coef = character(s, o.a, o.b) * base;
            for (int m = 0; m < block_dim_; ++m)
                parts[static_cast<size_t>(s)](o.cell_index * block_dim_ + m) += coef * full(x * block_dim_ + m);
        }
    }
    return parts;
}

CVector ZakSectors::compose(const std::vector<CVector>& parts) const {
    const int ns = sector_count();
    const double norm = 1.0 / std::sqrt(double(ns));
    CVector full = CVector::Zero(full_size());
    for (int x = 0; x < box_.sites(); ++x) {
        const Orbit& o = orbit_[static_cast<size_t>(x)];
        const cplx base = o.weight * norm;
        for (int s = 0; s < ns; ++s) {
            const cplx coef = std::conj(character(s, o.a, o.b)) * base;
            for (int m = 0; m < block_dim_; ++m)
                full(x * block_dim_ + m) += coef * parts[static_cast<size_t>(s)](o.cell_index * block_dim_ + m);
        }
    }
    return full;
}

CVector ZakSectors::basis_vector(int s, int r, int m) const {
    std::vector<CVector> parts(static_cast<size_t>(sector_count()), CVector::Zero(sector_size()));
    parts[static_cast<size_t>(s)](r * block_dim_ + m) = 1.0;
    return compose(parts);
}

std::vector<ZakSectors::KernelEntry> ZakSectors::kernel_entries(
    const std::map<Cell, CMatrix>& kernel) const {
    std::vector<KernelEntry> entries;
    entries.reserve(cell_.size() * kernel.size());
    for (int r = 0; r < cell_sites(); ++r) {
        const Cell x = cell_[static_cast<size_t>(r)];
        for (const auto& [g, block] : kernel) {
            if (block.rows() != block_dim_ || block.cols() != block_dim_)
                throw ShapeMismatch("kernel block dimension differs from the sector space");
            const Cell image = x - g;
            auto [y, n] = box_.reduce(image);
            const cplx phase = lambda_total(setup_, to_point(x), to_point(image)) *
                               boundary_phase(setup_, box_, y, n);
            const Orbit& o = orbit_[static_cast<size_t>(box_.index(y))];
            entries.push_back({r, o.cell_index, o.a, o.b, phase * o.weight, &block});
        }
    }
    return entries;
}

CMatrix ZakSectors::block_from_entries(const std::vector<KernelEntry>& entries, int s) const {
    CMatrix out = CMatrix::Zero(sector_size(), sector_size());
    const int n = block_dim_;
    for (const auto& e : entries) {
        const cplx coef = std::conj(character(s, e.a, e.b)) * e.phase;
        out.block(e.row_cell * n, e.col_cell * n, n, n) += coef * (*e.block);
    }
    return out;
}

CMatrix ZakSectors::kernel_block(const std::map<Cell, CMatrix>& kernel, int s) const {
    return block_from_entries(kernel_entries(kernel), s);
}

std::vector<CMatrix> ZakSectors::kernel_blocks(const std::map<Cell, CMatrix>& kernel) const {
    const auto entries = kernel_entries(kernel);
    std::vector<CMatrix> blocks;
    blocks.reserve(static_cast<size_t>(sector_count()));
    for (int s = 0; s < sector_count(); ++s) blocks.push_back(block_from_entries(entries, s));
    return blocks;
}

std::vector<double> ZakSectors::kernel_eigenvalues(const std::map<Cell, CMatrix>& kernel) const {
    const auto entries = kernel_entries(kernel);
    std::vector<double> all;
    all.reserve(static_cast<size_t>(full_size()));
    for (int s = 0; s < sector_count(); ++s) {
        RVector ev = hermitian_eigvals(block_from_entries(entries, s));
        all.insert(all.end(), ev.data(), ev.data() + ev.size());
    }
    std::sort(all.begin(), all.end());
    return all;
}

SectorOperator::SectorOperator(std::shared_ptr<const ZakSectors> r, std::shared_ptr<const ZakSectors> c,
                               std::vector<CMatrix> b)
    : rows(std::move(r)), cols(std::move(c)), blocks(std::move(b)) {}

SectorOperator SectorOperator::identity(std::shared_ptr<const ZakSectors> basis) {
    std::vector<CMatrix> b(static_cast<size_t>(basis->sector_count()),
                           CMatrix::Identity(basis->sector_size(), basis->sector_size()));
    return SectorOperator(basis, basis, std::move(b));
}

SectorOperator SectorOperator::zero(std::shared_ptr<const ZakSectors> r, std::shared_ptr<const ZakSectors> c) {
    std::vector<CMatrix> b(static_cast<size_t>(r->sector_count()),
                           CMatrix::Zero(r->sector_size(), c->sector_size()));
    return SectorOperator(r, c, std::move(b));
}

SectorOperator SectorOperator::from_kernel(std::shared_ptr<const ZakSectors> basis,
                                           const std::map<Cell, CMatrix>& kernel) {
    auto blocks = basis->kernel_blocks(kernel);
    return SectorOperator(basis, basis, std::move(blocks));
}

SectorOperator SectorOperator::adjoint() const {
    SectorOperator out(cols, rows, {});
    out.blocks.reserve(blocks.size());
    for (const auto& b : blocks) out.blocks.push_back(b.adjoint());
    return out;
}

SectorOperator SectorOperator::operator*(const SectorOperator& o) const {
    if (blocks.size() != o.blocks.size()) throw ShapeMismatch("sector operators use different groups");
    SectorOperator out(rows, o.cols, {});
    out.blocks.reserve(blocks.size());
    for (size_t s = 0; s < blocks.size(); ++s) out.blocks.push_back(blocks[s] * o.blocks[s]);
    return out;
}

SectorOperator SectorOperator::operator+(const SectorOperator& o) const {
    SectorOperator out = *this;
    for (size_t s = 0; s < blocks.size(); ++s) out.blocks[s] += o.blocks[s];
    return out;
}

SectorOperator SectorOperator::operator-(const SectorOperator& o) const {
    SectorOperator out = *this;
    for (size_t s = 0; s < blocks.size(); ++s) out.blocks[s] -= o.blocks[s];
    return out;
}

SectorOperator SectorOperator::operator*(cplx a) const {
    SectorOperator out = *this;
    for (auto& b : out.blocks) b *= a;
    return out;
}

CVector SectorOperator::apply(const CVector& full) const {
    auto parts = cols->decompose(full);
    std::vector<CVector> out(parts.size());
    for (size_t s = 0; s < parts.size(); ++s) out[s] = blocks[s] * parts[s];
    return rows->compose(out);
}

double SectorOperator::norm() const {
    double n = 0.0;
    for (const auto& b : blocks) n = std::max(n, op_norm(b));
    return n;
}

double SectorOperator::hermitian_norm() const {
    double n = 0.0;
    for (const auto& b : blocks) n = std::max(n, peierls::hermitian_norm(b));
    return n;
}

double SectorOperator::hermiticity_defect() const {
    double n = 0.0;
    for (const auto& b : blocks) n = std::max(n, (b - b.adjoint()).cwiseAbs().maxCoeff());
    return n;
}

std::vector<double> SectorOperator::eigenvalues() const {
    std::vector<double> all;
    for (const auto& b : blocks) {
        RVector ev = hermitian_eigvals(b);
        all.insert(all.end(), ev.data(), ev.data() + ev.size());
    }
    std::sort(all.begin(), all.end());
    return all;
}

CMatrix SectorOperator::dense() const {
    const int nr = rows->full_size(), nc = cols->full_size();
    CMatrix out = CMatrix::Zero(nr, nc);
    for (int s = 0; s < static_cast<int>(blocks.size()); ++s) {
        CMatrix vr(nr, rows->sector_size()), vc(nc, cols->sector_size());
        for (int r = 0; r < rows->cell_sites(); ++r)
            for (int m = 0; m < rows->block_dim(); ++m)
                vr.col(r * rows->block_dim() + m) = rows->basis_vector(s, r, m);
        for (int r = 0; r < cols->cell_sites(); ++r)
            for (int m = 0; m < cols->block_dim(); ++m)
                vc.col(r * cols->block_dim() + m) = cols->basis_vector(s, r, m);
        out += vr * blocks[static_cast<size_t>(s)] * vc.adjoint();
    }
    return out;
}

}  // namespace peierls
