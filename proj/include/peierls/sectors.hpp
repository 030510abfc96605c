#pragma once

#include <map>
#include <memory>
#include <vector>

#include "peierls/model.hpp"

namespace peierls {

// Symmetry-adapted basis of a magnetic-periodic box. The magnetic
// translations by (l1, 0) and (0, l2) commute when eps*b*l1*l2 is a multiple of
// 2 pi; their joint eigenspaces ("sectors") block-diagonalize every operator
// that commutes with them. With l1 = l2 = L there is one sector and the basis
// is the site basis, so the same type also carries plain dense operators.
class ZakSectors {
public:
    ZakSectors(const LatticeBox& box, int block_dim, const MagneticSetup& setup, int l1, int l2);

    // Largest symmetry group compatible with the flux and the fluctuation potential.
    static std::shared_ptr<const ZakSectors> adapted(const LatticeBox& box, int block_dim,
                                                     const MagneticSetup& setup);
    static std::shared_ptr<const ZakSectors> trivial(const LatticeBox& box, int block_dim,
                                                     const MagneticSetup& setup);
    // Same group acting on a space with another internal dimension.
    std::shared_ptr<const ZakSectors> with_block_dim(int block_dim) const;

    const LatticeBox& box() const { return box_; }
    const MagneticSetup& setup() const { return setup_; }
    int block_dim() const { return block_dim_; }
    int l1() const { return l1_; }
    int l2() const { return l2_; }
    int sector_count() const { return n1_ * n2_; }
    int cell_sites() const { return static_cast<int>(cell_.size()); }
    int sector_size() const { return cell_sites() * block_dim_; }
    int full_size() const { return box_.sites() * block_dim_; }
    const std::vector<Cell>& cell() const { return cell_; }

    // Character of the translation group element (a, b) in sector s.
    cplx character(int s, int a, int b) const {
        return chars_[static_cast<size_t>((s * n1_ + a) * n2_ + b)];
    }

    std::vector<CVector> decompose(const CVector& full) const;
    CVector compose(const std::vector<CVector>& parts) const;
    // Basis vector of sector s, cell site r, orbital m as a full vector.
    CVector basis_vector(int s, int r, int m) const;

    // Sector blocks of the magnetic kernel operator
    // ((x,m),(y',m')) -> Lambda(x,y') [kernel_{x-y'}]_{m m'} with magnetic-periodic wrap.
    std::vector<CMatrix> kernel_blocks(const std::map<Cell, CMatrix>& kernel) const;
    // Streaming variant: eigenvalues of each block, concatenated and sorted.
    std::vector<double> kernel_eigenvalues(const std::map<Cell, CMatrix>& kernel) const;
    CMatrix kernel_block(const std::map<Cell, CMatrix>& kernel, int s) const;

    struct Orbit {
        int cell_index;
        int a, b;
        cplx weight;  // value of the translated delta at this site
    };
    const Orbit& orbit(int site) const { return orbit_[static_cast<size_t>(site)]; }

private:
    struct KernelEntry {
        int row_cell;
        int col_cell;
        int a, b;
        cplx phase;
        const CMatrix* block;
    };
    std::vector<KernelEntry> kernel_entries(const std::map<Cell, CMatrix>& kernel) const;
    CMatrix block_from_entries(const std::vector<KernelEntry>& entries, int s) const;

    LatticeBox box_;
    int block_dim_;
    MagneticSetup setup_;
    int l1_, l2_, n1_, n2_;
    std::vector<Cell> cell_;
    std::vector<Orbit> orbit_;
    std::vector<cplx> chars_;
};

// Magnetic translation (T_g f)(x) = Lambda(x, g) f(x - g) of a single
// delta function at y with value v on the magnetic-periodic box.
std::pair<Cell, cplx> translate_delta(const MagneticSetup& s, const LatticeBox& box, const Cell& y,
                                      cplx value, const Cell& g);

// Block-diagonal operator between two symmetry-adapted spaces sharing the
// same translation group (they may differ in internal dimension).
struct SectorOperator {
    std::shared_ptr<const ZakSectors> rows;
    std::shared_ptr<const ZakSectors> cols;
    std::vector<CMatrix> blocks;

    SectorOperator() = default;
    SectorOperator(std::shared_ptr<const ZakSectors> r, std::shared_ptr<const ZakSectors> c,
                   std::vector<CMatrix> b);

    static SectorOperator identity(std::shared_ptr<const ZakSectors> basis);
    static SectorOperator zero(std::shared_ptr<const ZakSectors> r, std::shared_ptr<const ZakSectors> c);
    static SectorOperator from_kernel(std::shared_ptr<const ZakSectors> basis,
                                      const std::map<Cell, CMatrix>& kernel);

    SectorOperator adjoint() const;
    SectorOperator operator*(const SectorOperator& o) const;
    SectorOperator operator+(const SectorOperator& o) const;
    SectorOperator operator-(const SectorOperator& o) const;
    SectorOperator operator*(cplx a) const;

    // Apply a blockwise matrix map.
    template <class F>
    SectorOperator map(F&& f) const {
        SectorOperator out = *this;
        for (auto& b : out.blocks) b = f(b);
        return out;
    }

    CVector apply(const CVector& full) const;
    double norm() const;            // operator norm
    double hermitian_norm() const;  // for Hermitian operators
    double hermiticity_defect() const;
    std::vector<double> eigenvalues() const;  // Hermitian, sorted
    // Dense matrix in the site basis (small boxes only).
    CMatrix dense() const;
};

}  // namespace peierls
