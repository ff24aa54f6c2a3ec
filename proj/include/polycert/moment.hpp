#pragma once

#include <memory>
#include <vector>

#include "polycert/linalg.hpp"
#include "polycert/poly.hpp"

// Monomial bases, moment vectors and the structural moment matrix.

namespace polycert::moment {

using poly::ExponentVector;
using poly::Polynomial;

// Ordered basis of all monomials of degree <= degree_bound, graded
// lexicographic, starting with the constant monomial.
struct MonomialBasis {
    int nvars = 0;
    int degree_bound = 0;
    std::vector<ExponentVector> monomials;

    std::size_t size() const { return monomials.size(); }
    // position of e, or -1 if e is not in the basis
    long index_of(const ExponentVector& e) const;
};

// binomial(n + r, r) without overflow at desk scale
std::uint64_t basis_dimension(int nvars, int r);

// Throws std::length_error when the basis would exceed size_cap.
MonomialBasis build_basis(int nvars, int r, std::size_t size_cap = 5000);

struct MomentVector {
    std::shared_ptr<const MonomialBasis> basis;  // degree 2r basis
    std::vector<double> values;

    double y0() const { return values.empty() ? 0.0 : values[0]; }
};

// Moments of a finite atomic measure sum_a weights[a] * Dirac(points[a]).
MomentVector atomic_moments(std::shared_ptr<const MonomialBasis> basis,
                            const std::vector<std::vector<double>>& points,
                            const std::vector<double>& weights);
// Moments of the Dirac measure at a single point.
MomentVector dirac_moments(std::shared_ptr<const MonomialBasis> basis,
                           std::span<const double> point);

// <p, y> = sum_alpha p_alpha y_alpha. Throws if p has a monomial outside
// the basis of y.
double linear_functional(const MomentVector& y, const Polynomial& p);

// Structural map (i,j) -> position of alpha_i + alpha_j in the degree-2r
// basis; independent of any numeric moment data.
struct MomentMatrixIndex {
    int nvars = 0;
    int r = 0;
    std::size_t rows = 0;                // s(r)
    std::shared_ptr<const MonomialBasis> basis_r;
    std::shared_ptr<const MonomialBasis> basis_2r;
    std::vector<std::size_t> entry;      // rows x rows, row-major

    std::size_t entry_index(std::size_t i, std::size_t j) const {
        return entry[i * rows + j];
    }
};

// Cached per (nvars, r); concurrent callers share one instance.
std::shared_ptr<const MomentMatrixIndex> build_moment_index(
    int nvars, int r, std::size_t size_cap = 5000);

linalg::Matrix assemble_moment_matrix(const MomentMatrixIndex& idx,
                                      const MomentVector& y);

// Diagnostic from the moment-bound inequality |y_alpha| <= sqrt(y0 * S):
// S is the largest pure-power even moment y[x_i^{2k}], k <= r, and the
// bound must hold for every |alpha| <= r, as must y_{2 alpha} <= S.
struct MomentBoundsReport {
    bool pass = false;
    double s_value = 0.0;
    double worst_ratio = 0.0;           // max over checks of lhs/bound
    ExponentVector worst_monomial;
    double worst_diag_ratio = 0.0;
    ExponentVector worst_diag_monomial;
};

MomentBoundsReport check_moment_bounds(const MomentVector& y, double tol = 1e-7);

}  // namespace polycert::moment
