#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "polycert/moment.hpp"
#include "polycert/poly.hpp"

// Builds the moment relaxation of a polynomial minimization problem over
// an algebraic set: minimize L_y(f + eps*theta) subject to the moment
// matrix being PSD, L_y(g_j^2) <= 0 for every equality g_j, and y0 = 1.
// Inequality-constrained problems are first rewritten over an algebraic
// set with one slack variable per inequality.

namespace polycert::relax {

using moment::MomentMatrixIndex;
using moment::MomentVector;
using moment::MonomialBasis;
using poly::Polynomial;
using poly::ProblemInstance;

struct LiftedInstance {
    ProblemInstance instance;  // over n + m variables, equalities only
    int original_nvars = 0;
    int slack_count = 0;       // m, one per original inequality

    // extends a feasible point x of the original problem with
    // z_j = sqrt(g_j(x)); throws if some g_j(x) < -tol
    std::vector<double> lift_point(std::span<const double> x,
                                   double tol = 1e-9) const;
    std::vector<Polynomial> original_inequalities;
};

// Replaces every inequality g_j >= 0 with the equality g_j - z_j^2 = 0.
// Existing equalities pass through; with no inequalities this is the
// identity lift (slack_count = 0).
LiftedInstance lift_semialgebraic(const ProblemInstance& inst);

// Smallest r with 2r >= max(deg f, 2*max_j deg g_j) over the lifted
// instance (the lift is applied internally when inequalities exist).
int min_relaxation_order(const ProblemInstance& inst);

struct RelaxOptions {
    // replace the per-constraint rows by their single sum, so the dual
    // carries one shared multiplier for all constraints
    bool single_lambda = false;
    std::size_t basis_cap = 5000;
};

struct Relaxation {
    int nvars = 0;
    int r = 0;
    double eps = 0.0;
    RelaxOptions options;

    std::shared_ptr<const MomentMatrixIndex> moment_index;
    std::shared_ptr<const MonomialBasis> basis_2r;   // y is indexed by this
    std::size_t normalization_index = 0;             // position of y0

    Polynomial objective_perturbed;                  // f + eps*theta_r
    std::vector<double> objective_vector;            // its coefficients over basis_2r

    // one row per constraint: coefficients of g_j^2 over basis_2r
    std::vector<Polynomial> constraint_squares;
    std::vector<std::vector<double>> constraint_rows;
    int multiplier_count = 0;  // number of lambda entries the dual carries

    ProblemInstance instance;  // the (already lifted) equality instance
};

// inst must contain equalities only (lift first). Throws on eps < 0 or
// r < min_relaxation_order(inst).
Relaxation build_relaxation(const ProblemInstance& inst, double eps, int r,
                            const RelaxOptions& options = {});

// The dual program in coefficient-match form: for every basis monomial mu
// of degree <= 2r,
//   sum_{(i,j): alpha_i+alpha_j = mu} Q_ij
//     + sum_j lambda_j * coeff(g_j^2, mu) + gamma * [mu == 1]
//   = coeff(f_eps, mu).
struct DualSosForm {
    std::shared_ptr<const MonomialBasis> basis_2r;
    std::shared_ptr<const MonomialBasis> basis_r;
    // per basis_2r position: the (i,j) pairs with i <= j mapping there
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> gram_positions;
    std::vector<double> objective_coeffs;             // coeff(f_eps, mu)
    std::vector<std::vector<double>> constraint_rows; // coeff(g_j^2, mu)
};

DualSosForm dual_sos_form(const Relaxation& relax);

// Residuals of the coefficient-match equations for a candidate
// (gamma, lambda, Q); Q is over basis_r, symmetric.
std::vector<double> dual_match_residuals(const DualSosForm& form, double gamma,
                                         std::span<const double> lambda,
                                         const linalg::Matrix& gram);

}  // namespace polycert::relax
