#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "polycert/relax.hpp"
#include "polycert/sdp.hpp"

using namespace polycert::relax;
using polycert::moment::dirac_moments;
using polycert::moment::linear_functional;
using polycert::poly::parse_polynomial;
using polycert::poly::Polynomial;
using polycert::poly::ProblemInstance;

namespace {

ProblemInstance make_instance(const std::vector<std::string>& vars,
                              const std::string& objective,
                              const std::vector<std::string>& eqs,
                              const std::vector<std::string>& ineqs = {}) {
    ProblemInstance inst;
    inst.variables = vars;
    inst.objective = parse_polynomial(objective, vars);
    for (const auto& e : eqs) inst.equalities.push_back(parse_polynomial(e, vars));
    for (const auto& g : ineqs)
        inst.inequalities.push_back(parse_polynomial(g, vars));
    return inst;
}

polycert::poly::ExponentVector ev(std::vector<std::uint32_t> e) {
    return polycert::poly::ExponentVector(std::move(e));
}

}  // namespace

TEST_CASE("lift_semialgebraic") {
    SUBCASE("half line: one slack variable") {
        const auto inst = make_instance({"x1"}, "x1", {}, {"x1"});
        const LiftedInstance lifted = lift_semialgebraic(inst);
        CHECK(lifted.slack_count == 1);
        CHECK(lifted.instance.nvars() == 2);
        CHECK(lifted.instance.variables == std::vector<std::string>{"x1", "z1"});
        REQUIRE(lifted.instance.equalities.size() == 1);
        // x1 - z1^2
        const auto& g = lifted.instance.equalities[0];
        CHECK(g.coefficient(ev({1, 0})) == 1.0);
        CHECK(g.coefficient(ev({0, 2})) == -1.0);
        CHECK(g.terms().size() == 2);
        CHECK(lifted.instance.inequalities.empty());
    }
    SUBCASE("unit disk lifts to one equality over three variables") {
        const auto inst =
            make_instance({"x1", "x2"}, "x1", {}, {"1 - x1^2 - x2^2"});
        const LiftedInstance lifted = lift_semialgebraic(inst);
        CHECK(lifted.instance.nvars() == 3);
        REQUIRE(lifted.instance.equalities.size() == 1);
        const auto& g = lifted.instance.equalities[0];
        CHECK(g.coefficient(ev({0, 0, 0})) == 1.0);
        CHECK(g.coefficient(ev({2, 0, 0})) == -1.0);
        CHECK(g.coefficient(ev({0, 2, 0})) == -1.0);
        CHECK(g.coefficient(ev({0, 0, 2})) == -1.0);
        // feasible points map onto the lifted variety
        const std::vector<double> x = {0.3, -0.4};
        const auto lifted_pt = lifted.lift_point(x);
        CHECK(polycert::poly::evaluate(g, lifted_pt) ==
              doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("no inequalities: identity lift") {
        const auto inst = make_instance({"x1"}, "x1", {"x1^2 - 1"});
        const LiftedInstance lifted = lift_semialgebraic(inst);
        CHECK(lifted.slack_count == 0);
        CHECK(lifted.instance.nvars() == 1);
        CHECK(lifted.instance.equalities.size() == 1);
    }
    SUBCASE("mixed instances keep existing equalities") {
        const auto inst =
            make_instance({"x1", "x2"}, "x1 + x2", {"x1 - x2"}, {"x1"});
        const LiftedInstance lifted = lift_semialgebraic(inst);
        CHECK(lifted.instance.nvars() == 3);
        CHECK(lifted.instance.equalities.size() == 2);
    }
    SUBCASE("slack names avoid collisions") {
        const auto inst = make_instance({"z1"}, "z1", {}, {"z1"});
        const LiftedInstance lifted = lift_semialgebraic(inst);
        CHECK(lifted.instance.variables[0] == "z1");
        CHECK(lifted.instance.variables[1] != "z1");
    }
}

TEST_CASE("min_relaxation_order") {
    CHECK(min_relaxation_order(make_instance({"x1"}, "x1", {"x1^2 - 1"})) == 2);
    CHECK(min_relaxation_order(make_instance(
              {"x1", "x2"}, "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1", {})) == 3);
    CHECK(min_relaxation_order(make_instance({"x1"}, "5", {})) == 0);
    // lifting applies first: x >= 0 becomes x - z^2 = 0 of degree 2
    CHECK(min_relaxation_order(make_instance({"x1"}, "x1", {}, {"x1"})) == 2);
}

TEST_CASE("build_relaxation") {
    SUBCASE("circle instance with Dirac feasibility oracle") {
        const auto inst = make_instance({"x1"}, "x1", {"x1^2 - 1"});
        const Relaxation relax = build_relaxation(inst, 0.0, 2);
        CHECK(relax.nvars == 1);
        CHECK(relax.basis_2r->size() == 5);
        // objective vector has a single entry at the monomial x
        CHECK(relax.objective_vector[0] == 0.0);
        CHECK(relax.objective_vector[1] == 1.0);
        for (std::size_t i = 2; i < 5; ++i) CHECK(relax.objective_vector[i] == 0.0);
        REQUIRE(relax.constraint_rows.size() == 1);
        // row holds x^4 - 2 x^2 + 1
        CHECK(relax.constraint_rows[0][0] == 1.0);
        CHECK(relax.constraint_rows[0][2] == -2.0);
        CHECK(relax.constraint_rows[0][4] == 1.0);

        // Dirac at -1 is feasible with objective -1
        const std::vector<double> minus_one = {-1.0};
        const auto y = dirac_moments(relax.basis_2r, minus_one);
        CHECK(linear_functional(y, relax.constraint_squares[0]) == 0.0);
        CHECK(linear_functional(y, relax.objective_perturbed) == -1.0);
        const auto m = assemble_moment_matrix(*relax.moment_index, y);
        CHECK(polycert::linalg::min_eigenvalue(m) >= -1e-12);
    }
    SUBCASE("unconstrained case has no rows") {
        const auto inst = make_instance({"x1"}, "x1^2", {});
        const Relaxation relax = build_relaxation(inst, 0.0, 1);
        CHECK(relax.constraint_rows.empty());
        CHECK(relax.multiplier_count == 0);
    }
    SUBCASE("perturbed zero objective at the origin") {
        const auto inst = make_instance({"x1"}, "0", {});
        const Relaxation relax = build_relaxation(inst, 0.1, 1);
        const std::vector<double> origin = {0.0};
        const auto y = dirac_moments(relax.basis_2r, origin);
        CHECK(linear_functional(y, relax.objective_perturbed) ==
              doctest::Approx(0.1).epsilon(1e-15));
    }
    SUBCASE("order below the minimum throws") {
        const auto inst = make_instance({"x1"}, "x1", {"x1^2 - 1"});
        CHECK_THROWS_AS(build_relaxation(inst, 0.0, 1), std::invalid_argument);
    }
    SUBCASE("negative eps throws") {
        const auto inst = make_instance({"x1"}, "x1", {"x1^2 - 1"});
        CHECK_THROWS_AS(build_relaxation(inst, -0.1, 2), std::invalid_argument);
    }
    SUBCASE("inequalities must be lifted first") {
        const auto inst = make_instance({"x1"}, "x1", {}, {"x1"});
        CHECK_THROWS_AS(build_relaxation(inst, 0.0, 2), std::invalid_argument);
    }
    SUBCASE("single shared multiplier row sums the squares") {
        const auto inst =
            make_instance({"x1", "x2"}, "x1", {"x1 - 1", "x2 - 2"});
        RelaxOptions opts;
        opts.single_lambda = true;
        const Relaxation relax = build_relaxation(inst, 0.0, 1, opts);
        REQUIRE(relax.constraint_rows.size() == 1);
        const std::vector<std::string> xy = {"x1", "x2"};
        const Polynomial g1 = parse_polynomial("x1 - 1", xy);
        const Polynomial g2 = parse_polynomial("x2 - 2", xy);
        CHECK(relax.constraint_squares[0].terms() == (g1 * g1 + g2 * g2).terms());
    }
}

TEST_CASE("dirac moments of feasible points satisfy the relaxation exactly") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(-1.2, 1.2);
    // random inequality-constrained instances, lifted; feasible x extended
    // with sqrt(g(x)) satisfies every constraint row exactly and carries
    // objective value f_eps(x, sqrt(g))
    for (int trial = 0; trial < 15; ++trial) {
        const auto inst = make_instance({"x1", "x2"}, "x1 + 2*x2", {},
                                        {"2 - x1^2 - x2^2", "x2 + 1.5"});
        const LiftedInstance lifted = lift_semialgebraic(inst);
        const Relaxation relax = build_relaxation(lifted.instance, 0.01, 2);
        std::vector<double> x = {dist(rng), dist(rng)};
        bool feasible = true;
        for (const auto& g : inst.inequalities)
            if (polycert::poly::evaluate(g, x) < 0.0) feasible = false;
        if (!feasible) continue;
        const auto zx = lifted.lift_point(x);
        const auto y = dirac_moments(relax.basis_2r, zx);
        for (const auto& gsq : relax.constraint_squares)
            CHECK(linear_functional(y, gsq) ==
                  doctest::Approx(0.0).epsilon(1e-10));
        CHECK(linear_functional(y, relax.objective_perturbed) ==
              doctest::Approx(polycert::poly::evaluate(relax.objective_perturbed, zx))
                  .epsilon(1e-10));
    }
}

TEST_CASE("dual_sos_form") {
    SUBCASE("constant objective at order zero") {
        const auto inst = make_instance({"x1"}, "5", {});
        const Relaxation relax = build_relaxation(inst, 0.0, 0);
        const DualSosForm form = dual_sos_form(relax);
        polycert::linalg::Matrix q(1);  // zero Gram
        const auto res = dual_match_residuals(form, 5.0, {}, q);
        for (double v : res) CHECK(v == 0.0);
    }
    SUBCASE("x^2 is its own square") {
        const auto inst = make_instance({"x1"}, "x1^2", {});
        const Relaxation relax = build_relaxation(inst, 0.0, 1);
        const DualSosForm form = dual_sos_form(relax);
        polycert::linalg::Matrix q(2);
        q(1, 1) = 1.0;  // Gram diag(0, 1) over basis (1, x)
        const auto res = dual_match_residuals(form, 0.0, {}, q);
        for (double v : res) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("match equations contracted against y reproduce weak duality") {
        // <residuals, y> equals L_y(q) + sum lambda L_y(g^2) + gamma - L_y(f_eps)
        // identically, for random data
        std::mt19937 rng(23);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        const auto inst = make_instance({"x1", "x2"}, "x1^2 + x2", {"x1 + x2 - 1"});
        const Relaxation relax = build_relaxation(inst, 0.05, 2);
        const DualSosForm form = dual_sos_form(relax);
        const std::size_t sr = relax.moment_index->rows;
        for (int trial = 0; trial < 10; ++trial) {
            polycert::linalg::Matrix q(sr);
            for (std::size_t i = 0; i < sr; ++i)
                for (std::size_t j = i; j < sr; ++j) {
                    q(i, j) = dist(rng);
                    q(j, i) = q(i, j);
                }
            const double gamma = dist(rng);
            std::vector<double> lambda = {dist(rng)};
            std::vector<double> y(relax.basis_2r->size());
            for (double& v : y) v = dist(rng);
            y[0] = 1.0;

            const auto res = dual_match_residuals(form, gamma, lambda, q);
            double res_dot_y = 0.0;
            for (std::size_t b = 0; b < res.size(); ++b) res_dot_y += res[b] * y[b];

            // assemble the same contraction from the pieces
            double qforms = 0.0;
            const auto& idx = *relax.moment_index;
            for (std::size_t i = 0; i < sr; ++i)
                for (std::size_t j = 0; j < sr; ++j)
                    qforms += q(i, j) * y[idx.entry_index(i, j)];
            double lg = 0.0;
            for (std::size_t b = 0; b < y.size(); ++b)
                lg += lambda[0] * relax.constraint_rows[0][b] * y[b];
            double fy = 0.0;
            for (std::size_t b = 0; b < y.size(); ++b)
                fy += relax.objective_vector[b] * y[b];
            CHECK(res_dot_y ==
                  doctest::Approx(qforms + lg + gamma - fy).epsilon(1e-10));
        }
    }
}

TEST_CASE("weak duality and eps monotonicity on solved instances") {
    const auto inst = make_instance({"x1"}, "x1", {"x1^2 - 1"});
    double previous_primal = -1e300;
    for (double eps : {0.0, 0.01, 0.05, 0.1}) {
        const Relaxation relax = build_relaxation(inst, eps, 2);
        const auto prob = polycert::sdp::to_standard_form(relax);
        polycert::sdp::SolveOptions opts;
        opts.gap_tol = 1e-7;
        opts.feas_tol = 1e-7;
        const auto sol = polycert::sdp::solve_with_restarts(prob, opts);
        if (sol.status == polycert::sdp::SolveStatus::Optimal) {
            CHECK(sol.objective_dual <= sol.objective_primal + 1e-6);
        }
        // objective is nondecreasing in eps at fixed order
        CHECK(sol.objective_primal >= previous_primal - 1e-6);
        previous_primal = sol.objective_primal;
    }
}
