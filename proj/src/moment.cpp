#include "polycert/moment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace polycert::moment {

long MonomialBasis::index_of(const ExponentVector& e) const {
    // monomials are sorted in the basis order, so binary search suffices
    auto it = std::lower_bound(monomials.begin(), monomials.end(), e);
    if (it == monomials.end() || !(*it == e)) return -1;
    return static_cast<long>(it - monomials.begin());
}

std::uint64_t basis_dimension(int nvars, int r) {
    std::uint64_t num = 1;
    for (int i = 1; i <= r; ++i) {
        num = num * static_cast<std::uint64_t>(nvars + i) / static_cast<std::uint64_t>(i);
    }
    return num;
}

namespace {

void enumerate_degree(int nvars, int var, std::uint32_t remaining,
                      std::vector<std::uint32_t>& scratch,
                      std::vector<ExponentVector>& out) {
    if (var == nvars - 1) {
        scratch[var] = remaining;
        out.emplace_back(scratch);
        return;
    }
    for (std::uint32_t e = remaining; e != static_cast<std::uint32_t>(-1); --e) {
        scratch[var] = e;
        enumerate_degree(nvars, var + 1, remaining - e, scratch, out);
        if (e == 0) break;
    }
}

}  // namespace

MonomialBasis build_basis(int nvars, int r, std::size_t size_cap) {
    if (nvars < 1) throw std::invalid_argument("build_basis: nvars < 1");
    if (r < 0) throw std::invalid_argument("build_basis: negative degree bound");
    const std::uint64_t dim = basis_dimension(nvars, r);
    if (dim > size_cap)
        throw std::length_error("basis size " + std::to_string(dim) +
                                " exceeds cap " + std::to_string(size_cap));
    MonomialBasis b;
    b.nvars = nvars;
    b.degree_bound = r;
    b.monomials.reserve(dim);
    std::vector<std::uint32_t> scratch(nvars, 0);
    for (int d = 0; d <= r; ++d) {
        enumerate_degree(nvars, 0, static_cast<std::uint32_t>(d), scratch,
                         b.monomials);
    }
    return b;
}

MomentVector atomic_moments(std::shared_ptr<const MonomialBasis> basis,
                            const std::vector<std::vector<double>>& points,
                            const std::vector<double>& weights) {
    if (points.size() != weights.size())
        throw std::invalid_argument("atomic_moments: points/weights mismatch");
    MomentVector y;
    y.basis = std::move(basis);
    y.values.assign(y.basis->size(), 0.0);
    for (std::size_t a = 0; a < points.size(); ++a) {
        if (static_cast<int>(points[a].size()) != y.basis->nvars)
            throw std::invalid_argument("atomic_moments: point dimension mismatch");
        for (std::size_t k = 0; k < y.basis->size(); ++k) {
            const auto& e = y.basis->monomials[k];
            double m = 1.0;
            for (int i = 0; i < y.basis->nvars; ++i)
                for (std::uint32_t t = 0; t < e.exps[i]; ++t) m *= points[a][i];
            y.values[k] += weights[a] * m;
        }
    }
    return y;
}

MomentVector dirac_moments(std::shared_ptr<const MonomialBasis> basis,
                           std::span<const double> point) {
    return atomic_moments(std::move(basis),
                          {std::vector<double>(point.begin(), point.end())},
                          {1.0});
}

double linear_functional(const MomentVector& y, const Polynomial& p) {
    if (p.nvars() != y.basis->nvars)
        throw std::invalid_argument("linear_functional: variable count mismatch");
    double sum = 0.0;
    for (const auto& [e, c] : p.terms()) {
        const long idx = y.basis->index_of(e);
        if (idx < 0)
            throw std::invalid_argument(
                "linear_functional: polynomial degree exceeds moment basis");
        sum += c * y.values[idx];
    }
    return sum;
}

namespace {

std::mutex g_index_cache_mutex;
std::map<std::pair<int, int>, std::shared_ptr<const MomentMatrixIndex>>
    g_index_cache;

}  // namespace

std::shared_ptr<const MomentMatrixIndex> build_moment_index(
    int nvars, int r, std::size_t size_cap) {
    {
        std::lock_guard<std::mutex> lock(g_index_cache_mutex);
        auto it = g_index_cache.find({nvars, r});
        if (it != g_index_cache.end()) return it->second;
    }
    auto idx = std::make_shared<MomentMatrixIndex>();
    idx->nvars = nvars;
    idx->r = r;
    idx->basis_r = std::make_shared<MonomialBasis>(build_basis(nvars, r, size_cap));
    idx->basis_2r =
        std::make_shared<MonomialBasis>(build_basis(nvars, 2 * r, size_cap));
    idx->rows = idx->basis_r->size();
    idx->entry.resize(idx->rows * idx->rows);
    for (std::size_t i = 0; i < idx->rows; ++i) {
        for (std::size_t j = i; j < idx->rows; ++j) {
            const long pos = idx->basis_2r->index_of(idx->basis_r->monomials[i] +
                                                     idx->basis_r->monomials[j]);
            if (pos < 0) throw std::logic_error("moment index: product outside basis");
            idx->entry[i * idx->rows + j] = static_cast<std::size_t>(pos);
            idx->entry[j * idx->rows + i] = static_cast<std::size_t>(pos);
        }
    }
    std::lock_guard<std::mutex> lock(g_index_cache_mutex);
    auto [it, inserted] = g_index_cache.emplace(std::pair{nvars, r}, idx);
    return it->second;
}

linalg::Matrix assemble_moment_matrix(const MomentMatrixIndex& idx,
                                      const MomentVector& y) {
    if (y.basis->nvars != idx.nvars || y.basis->degree_bound < 2 * idx.r)
        throw std::invalid_argument("assemble_moment_matrix: basis does not cover 2r");
    linalg::Matrix m(idx.rows);
    for (std::size_t i = 0; i < idx.rows; ++i)
        for (std::size_t j = 0; j < idx.rows; ++j)
            m(i, j) = y.values[idx.entry_index(i, j)];
    return m;
}

MomentBoundsReport check_moment_bounds(const MomentVector& y, double tol) {
    if (y.y0() <= 0.0)
        throw std::invalid_argument("check_moment_bounds: y0 must be positive");
    const MonomialBasis& basis = *y.basis;
    const int r = basis.degree_bound / 2;

    MomentBoundsReport rep;
    rep.worst_monomial = ExponentVector::zero(basis.nvars);
    rep.worst_diag_monomial = rep.worst_monomial;

    // S = max over pure-power even moments y[x_i^{2k}], k = 0..r
    double s = 0.0;
    for (int i = 0; i < basis.nvars; ++i) {
        for (int k = 0; k <= r; ++k) {
            std::vector<std::uint32_t> e(basis.nvars, 0);
            e[i] = static_cast<std::uint32_t>(2 * k);
            const long pos = basis.index_of(ExponentVector(std::move(e)));
            if (pos >= 0) s = std::max(s, y.values[pos]);
        }
    }
    rep.s_value = s;

    const double bound = std::sqrt(std::max(0.0, y.y0() * s));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto& alpha = basis.monomials[k];
        if (alpha.degree > static_cast<std::uint64_t>(r)) continue;
        const double lhs = std::abs(y.values[k]);
        const double ratio = lhs / std::max(bound, 1e-300);
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_monomial = alpha;
        }
        // diagonal entries of the moment matrix are y_{2 alpha}
        const long diag = basis.index_of(alpha + alpha);
        if (diag >= 0) {
            const double dratio = y.values[diag] / std::max(s, 1e-300);
            if (dratio > rep.worst_diag_ratio) {
                rep.worst_diag_ratio = dratio;
                rep.worst_diag_monomial = alpha;
            }
        }
    }
    const double bound_tol = tol / std::max(bound, 1e-300);
    const double diag_tol = tol / std::max(s, 1e-300);
    rep.pass = rep.worst_ratio <= 1.0 + bound_tol &&
               rep.worst_diag_ratio <= 1.0 + diag_tol;
    return rep;
}

}  // namespace polycert::moment
