#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "polycert/moment.hpp"

using namespace polycert::moment;
using polycert::poly::parse_polynomial;
using polycert::poly::Polynomial;

namespace {

ExponentVector ev(std::vector<std::uint32_t> e) { return ExponentVector(std::move(e)); }

std::shared_ptr<const MonomialBasis> basis_ptr(int n, int r) {
    return std::make_shared<MonomialBasis>(build_basis(n, r));
}

// moments of a random atomic measure with nonnegative weights
MomentVector random_atomic(std::mt19937& rng, std::shared_ptr<const MonomialBasis> b,
                           int atoms, bool normalize) {
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> wdist(0.1, 1.0);
    std::vector<std::vector<double>> pts;
    std::vector<double> w;
    for (int a = 0; a < atoms; ++a) {
        std::vector<double> x(b->nvars);
        for (double& v : x) v = coord(rng);
        pts.push_back(std::move(x));
        w.push_back(wdist(rng));
    }
    if (normalize) {
        double total = 0.0;
        for (double v : w) total += v;
        for (double& v : w) v /= total;
    }
    return atomic_moments(std::move(b), pts, w);
}

}  // namespace

TEST_CASE("build_basis") {
    SUBCASE("two variables, order two: the six canonical monomials") {
        const MonomialBasis b = build_basis(2, 2);
        REQUIRE(b.size() == 6);
        CHECK(b.monomials[0] == ev({0, 0}));
        CHECK(b.monomials[1] == ev({1, 0}));
        CHECK(b.monomials[2] == ev({0, 1}));
        CHECK(b.monomials[3] == ev({2, 0}));
        CHECK(b.monomials[4] == ev({1, 1}));
        CHECK(b.monomials[5] == ev({0, 2}));
    }
    SUBCASE("one variable, order three") {
        const MonomialBasis b = build_basis(1, 3);
        REQUIRE(b.size() == 4);
        for (std::uint32_t d = 0; d <= 3; ++d) CHECK(b.monomials[d] == ev({d}));
    }
    SUBCASE("dimension equals the enumeration count") {
        // independent oracle: count exponent vectors of degree <= 2 directly
        int count = 0;
        for (int e1 = 0; e1 <= 2; ++e1)
            for (int e2 = 0; e2 <= 2; ++e2)
                for (int e3 = 0; e3 <= 2; ++e3)
                    if (e1 + e2 + e3 <= 2) ++count;
        CHECK(count == 10);
        CHECK(build_basis(3, 2).size() == 10);
        CHECK(basis_dimension(3, 2) == 10);
    }
    SUBCASE("binomial dimension formula across sizes") {
        for (int n = 1; n <= 4; ++n) {
            for (int r = 0; r <= 5; ++r) {
                // binomial(n+r, r) via Pascal recursion as the oracle
                std::vector<std::vector<std::uint64_t>> pas(n + r + 1);
                for (int i = 0; i <= n + r; ++i) {
                    pas[i].assign(i + 1, 1);
                    for (int j = 1; j < i; ++j)
                        pas[i][j] = pas[i - 1][j - 1] + pas[i - 1][j];
                }
                CHECK(build_basis(n, r).size() == pas[n + r][r]);
            }
        }
    }
    SUBCASE("index_of inverts the listing") {
        const MonomialBasis b = build_basis(3, 3);
        for (std::size_t i = 0; i < b.size(); ++i)
            CHECK(b.index_of(b.monomials[i]) == static_cast<long>(i));
        CHECK(b.index_of(ev({4, 0, 0})) == -1);
    }
    SUBCASE("size cap") {
        CHECK_THROWS_AS(build_basis(6, 10, 5000), std::length_error);
    }
}

TEST_CASE("linear_functional") {
    auto b2 = basis_ptr(1, 4);
    SUBCASE("constant polynomial reads y0") {
        MomentVector y;
        y.basis = b2;
        y.values = {2.5, 0, 0, 0, 0};
        const std::vector<std::string> vars = {"x1"};
        CHECK(linear_functional(y, parse_polynomial("1", vars)) == 2.5);
    }
    SUBCASE("Dirac moments reproduce evaluation") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> dist(-1.5, 1.5);
        const std::vector<std::string> vars = {"x1", "x2"};
        auto b = basis_ptr(2, 4);
        for (int trial = 0; trial < 10; ++trial) {
            const std::vector<double> x = {dist(rng), dist(rng)};
            const MomentVector y = dirac_moments(b, x);
            const Polynomial p =
                parse_polynomial("x1^2*x2 - 3*x1*x2 + 0.5*x2^2 - 2", vars);
            CHECK(linear_functional(y, p) ==
                  doctest::Approx(polycert::poly::evaluate(p, x)).epsilon(1e-12));
        }
    }
    SUBCASE("alternating vector against the squared constraint") {
        MomentVector y;
        y.basis = b2;
        y.values = {1, -1, 1, -1, 1};  // Dirac at -1
        const std::vector<std::string> vars = {"x1"};
        const Polynomial gsq = parse_polynomial("x1^4 - 2*x1^2 + 1", vars);
        CHECK(linear_functional(y, gsq) == 0.0);
    }
    SUBCASE("degree beyond the basis throws") {
        MomentVector y;
        y.basis = b2;
        y.values.assign(5, 1.0);
        const std::vector<std::string> vars = {"x1"};
        CHECK_THROWS_AS(linear_functional(y, parse_polynomial("x1^5", vars)),
                        std::invalid_argument);
    }
}

TEST_CASE("build_moment_index") {
    auto idx = build_moment_index(2, 2);
    const auto& b2r = *idx->basis_2r;
    SUBCASE("structural invariants") {
        CHECK(idx->rows == 6);
        // entry (0,0) is y0
        CHECK(idx->entry_index(0, 0) == 0);
        // row 0 reproduces the basis itself
        for (std::size_t j = 0; j < idx->rows; ++j)
            CHECK(idx->entry_index(0, j) == static_cast<std::size_t>(b2r.index_of(
                                                idx->basis_r->monomials[j])));
        // symmetry
        for (std::size_t i = 0; i < idx->rows; ++i)
            for (std::size_t j = 0; j < idx->rows; ++j)
                CHECK(idx->entry_index(i, j) == idx->entry_index(j, i));
    }
    SUBCASE("named entries of the 6x6 layout") {
        // rows/cols ordered 1, x1, x2, x1^2, x1x2, x2^2: entry (1,2) holds
        // y_11 and entry (5,5) holds y_04
        CHECK(idx->entry_index(1, 2) == static_cast<std::size_t>(b2r.index_of(ev({1, 1}))));
        CHECK(idx->entry_index(5, 5) == static_cast<std::size_t>(b2r.index_of(ev({0, 4}))));
    }
    SUBCASE("full layout matches the canonical displayed matrix") {
        const std::uint32_t want[6][6][2] = {
            {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}},
            {{1, 0}, {2, 0}, {1, 1}, {3, 0}, {2, 1}, {1, 2}},
            {{0, 1}, {1, 1}, {0, 2}, {2, 1}, {1, 2}, {0, 3}},
            {{2, 0}, {3, 0}, {2, 1}, {4, 0}, {3, 1}, {2, 2}},
            {{1, 1}, {2, 1}, {1, 2}, {3, 1}, {2, 2}, {1, 3}},
            {{0, 2}, {1, 2}, {0, 3}, {2, 2}, {1, 3}, {0, 4}},
        };
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                CHECK(idx->entry_index(i, j) ==
                      static_cast<std::size_t>(b2r.index_of(ev({want[i][j][0],
                                                                want[i][j][1]}))));
    }
    SUBCASE("cache returns the same instance") {
        CHECK(build_moment_index(2, 2).get() == idx.get());
    }
}

TEST_CASE("assemble_moment_matrix") {
    SUBCASE("Dirac moments give the rank-one outer product") {
        auto idx = build_moment_index(2, 2);
        const std::vector<double> x = {0.7, -1.3};
        const MomentVector y = dirac_moments(idx->basis_2r, x);
        const auto m = assemble_moment_matrix(*idx, y);
        // v_r(x) those six monomial values
        std::vector<double> v;
        for (const auto& e : idx->basis_r->monomials) {
            double val = 1.0;
            for (int i = 0; i < 2; ++i)
                for (std::uint32_t t = 0; t < e.exps[i]; ++t) val *= x[i];
            v.push_back(val);
        }
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                CHECK(m(i, j) == doctest::Approx(v[i] * v[j]).epsilon(1e-12));
        const auto eig = polycert::linalg::jacobi_eigh(m);
        CHECK(eig.values.front() >= -1e-10);  // PSD
        // rank one: all but the top eigenvalue vanish
        for (std::size_t i = 0; i + 1 < eig.values.size(); ++i)
            CHECK(std::abs(eig.values[i]) <= 1e-10 * (1.0 + eig.values.back()));
    }
    SUBCASE("two-point measure in one variable") {
        auto idx = build_moment_index(1, 2);
        const MomentVector y =
            atomic_moments(idx->basis_2r, {{1.0}, {-1.0}}, {0.5, 0.5});
        const auto m = assemble_moment_matrix(*idx, y);
        const double want[3][3] = {{1, 0, 1}, {0, 1, 0}, {1, 0, 1}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(m(i, j) == doctest::Approx(want[i][j]));
        const auto eig = polycert::linalg::jacobi_eigh(m);
        CHECK(eig.values[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(eig.values[1] == doctest::Approx(1.0));
        CHECK(eig.values[2] == doctest::Approx(2.0));
    }
}

TEST_CASE("moment matrix bilinearity: <q, M p> = L_y(q p)") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + trial % 2;
        const int r = 1 + trial % 3;
        auto idx = build_moment_index(n, r);
        const MomentVector y = random_atomic(rng, idx->basis_2r, 3, false);
        const auto m = assemble_moment_matrix(*idx, y);

        Polynomial p(n), q(n);
        std::vector<double> pv, qv;
        for (const auto& e : idx->basis_r->monomials) {
            pv.push_back(coef(rng));
            qv.push_back(coef(rng));
            p.add_term(e, pv.back());
            q.add_term(e, qv.back());
        }
        double quad = 0.0;
        for (std::size_t i = 0; i < idx->rows; ++i)
            for (std::size_t j = 0; j < idx->rows; ++j)
                quad += qv[i] * m(i, j) * pv[j];
        const double riesz = linear_functional(y, q * p);
        CHECK(quad == doctest::Approx(riesz).epsilon(1e-9));
    }
}

TEST_CASE("atomic-measure moment matrices are PSD") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 3;
        const int r = 1 + trial % 2;
        auto idx = build_moment_index(n, r);
        const MomentVector y = random_atomic(rng, idx->basis_2r, 2 + trial % 4, false);
        const auto m = assemble_moment_matrix(*idx, y);
        CHECK(polycert::linalg::min_eigenvalue(m) >= -1e-9);
    }
}

TEST_CASE("check_moment_bounds") {
    SUBCASE("Dirac inside the unit box passes") {
        auto b = basis_ptr(2, 4);
        const std::vector<double> x = {0.9, -0.4};
        const MomentVector y = dirac_moments(b, x);
        const auto rep = check_moment_bounds(y);
        CHECK(rep.pass);
        CHECK(rep.worst_ratio <= 1.0);
    }
    SUBCASE("random atomic measures always pass") {
        std::mt19937 rng(41);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 1 + trial % 3;
            const int r = 1 + trial % 2;
            auto b = basis_ptr(n, 2 * r);
            const MomentVector y = random_atomic(rng, b, 1 + trial % 5, true);
            CHECK(check_moment_bounds(y).pass);
        }
    }
    SUBCASE("constructed violation is reported with its ratio") {
        auto b = basis_ptr(2, 4);
        MomentVector y;
        y.basis = b;
        y.values.assign(b->size(), 0.0);
        y.values[0] = 1.0;  // y0
        // pure even powers capped at 1, but the x1*x2 moment is 2
        y.values[b->index_of(ev({2, 0}))] = 1.0;
        y.values[b->index_of(ev({0, 2}))] = 1.0;
        y.values[b->index_of(ev({4, 0}))] = 1.0;
        y.values[b->index_of(ev({0, 4}))] = 1.0;
        y.values[b->index_of(ev({1, 1}))] = 2.0;
        const auto rep = check_moment_bounds(y);
        CHECK_FALSE(rep.pass);
        CHECK(rep.worst_ratio == doctest::Approx(2.0));
        CHECK(rep.worst_monomial == ev({1, 1}));
    }
    SUBCASE("nonpositive mass is rejected") {
        auto b = basis_ptr(1, 2);
        MomentVector y;
        y.basis = b;
        y.values = {0.0, 0.0, 0.0};
        CHECK_THROWS_AS(check_moment_bounds(y), std::invalid_argument);
    }
}
