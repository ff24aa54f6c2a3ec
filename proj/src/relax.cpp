#include "polycert/relax.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polycert::relax {

namespace {

// embed a polynomial over n variables into the first n of n_total
Polynomial extend_vars(const Polynomial& p, int n_total) {
    Polynomial out(n_total);
    for (const auto& [e, c] : p.terms()) {
        std::vector<std::uint32_t> exps(n_total, 0);
        std::copy(e.exps.begin(), e.exps.end(), exps.begin());
        out.add_term(poly::ExponentVector(std::move(exps)), c);
    }
    return out;
}

std::string unique_name(const std::vector<std::string>& taken,
                        const std::string& base) {
    std::string name = base;
    while (std::find(taken.begin(), taken.end(), name) != taken.end())
        name += "_";
    return name;
}

}  // namespace

std::vector<double> LiftedInstance::lift_point(std::span<const double> x,
                                               double tol) const {
    if (static_cast<int>(x.size()) != original_nvars)
        throw std::invalid_argument("lift_point: wrong dimension");
    std::vector<double> out(x.begin(), x.end());
    for (const auto& g : original_inequalities) {
        const double v = poly::evaluate(g, x);
        if (v < -tol)
            throw std::invalid_argument("lift_point: point violates an inequality");
        out.push_back(std::sqrt(std::max(0.0, v)));
    }
    return out;
}

LiftedInstance lift_semialgebraic(const ProblemInstance& inst) {
    inst.validate();
    LiftedInstance lifted;
    lifted.original_nvars = inst.nvars();
    lifted.slack_count = static_cast<int>(inst.inequalities.size());
    lifted.original_inequalities = inst.inequalities;

    const int n = inst.nvars();
    const int total = n + lifted.slack_count;

    lifted.instance.variables = inst.variables;
    for (int j = 0; j < lifted.slack_count; ++j) {
        lifted.instance.variables.push_back(
            unique_name(lifted.instance.variables, "z" + std::to_string(j + 1)));
    }
    lifted.instance.objective = extend_vars(inst.objective, total);
    for (const auto& g : inst.equalities)
        lifted.instance.equalities.push_back(extend_vars(g, total));
    for (int j = 0; j < lifted.slack_count; ++j) {
        Polynomial zsq = Polynomial::variable(total, n + j);
        zsq = zsq * zsq;
        lifted.instance.equalities.push_back(extend_vars(inst.inequalities[j], total) -
                                             zsq);
    }
    return lifted;
}

int min_relaxation_order(const ProblemInstance& inst) {
    const ProblemInstance* eq = &inst;
    LiftedInstance lifted;
    if (!inst.inequalities.empty()) {
        lifted = lift_semialgebraic(inst);
        eq = &lifted.instance;
    }
    std::uint64_t need = eq->objective.degree();
    for (const auto& g : eq->equalities) need = std::max(need, 2 * g.degree());
    return static_cast<int>((need + 1) / 2);
}

Relaxation build_relaxation(const ProblemInstance& inst, double eps, int r,
                            const RelaxOptions& options) {
    inst.validate();
    if (!inst.inequalities.empty())
        throw std::invalid_argument(
            "build_relaxation: lift inequalities before building");
    if (eps < 0.0) throw std::invalid_argument("build_relaxation: negative eps");
    const int r_min = min_relaxation_order(inst);
    if (r < r_min)
        throw std::invalid_argument("build_relaxation: order " + std::to_string(r) +
                                    " below required " + std::to_string(r_min));

    Relaxation relax;
    relax.nvars = inst.nvars();
    relax.r = r;
    relax.eps = eps;
    relax.options = options;
    relax.instance = inst;
    relax.moment_index = moment::build_moment_index(inst.nvars(), r, options.basis_cap);
    relax.basis_2r = relax.moment_index->basis_2r;
    relax.normalization_index = 0;

    relax.objective_perturbed = (eps == 0.0)
                                    ? inst.objective
                                    : poly::perturb(inst.objective, eps, r);

    auto to_row = [&](const Polynomial& p) {
        std::vector<double> row(relax.basis_2r->size(), 0.0);
        for (const auto& [e, c] : p.terms()) {
            const long pos = relax.basis_2r->index_of(e);
            if (pos < 0)
                throw std::logic_error("build_relaxation: degree bookkeeping failed");
            row[pos] = c;
        }
        return row;
    };
    relax.objective_vector = to_row(relax.objective_perturbed);

    if (options.single_lambda && !inst.equalities.empty()) {
        Polynomial total(inst.nvars());
        for (const auto& g : inst.equalities) total = total + g * g;
        relax.constraint_squares.push_back(total);
        relax.constraint_rows.push_back(to_row(total));
        relax.multiplier_count = 1;
    } else {
        for (const auto& g : inst.equalities) {
            Polynomial sq = g * g;
            relax.constraint_rows.push_back(to_row(sq));
            relax.constraint_squares.push_back(std::move(sq));
        }
        relax.multiplier_count = static_cast<int>(inst.equalities.size());
    }
    return relax;
}

DualSosForm dual_sos_form(const Relaxation& relax) {
    DualSosForm form;
    form.basis_2r = relax.basis_2r;
    form.basis_r = relax.moment_index->basis_r;
    form.objective_coeffs = relax.objective_vector;
    form.constraint_rows = relax.constraint_rows;
    form.gram_positions.resize(relax.basis_2r->size());
    const auto& idx = *relax.moment_index;
    for (std::size_t i = 0; i < idx.rows; ++i)
        for (std::size_t j = i; j < idx.rows; ++j)
            form.gram_positions[idx.entry_index(i, j)].push_back({i, j});
    return form;
}

std::vector<double> dual_match_residuals(const DualSosForm& form, double gamma,
                                         std::span<const double> lambda,
                                         const linalg::Matrix& gram) {
    if (lambda.size() != form.constraint_rows.size())
        throw std::invalid_argument("dual_match_residuals: lambda size mismatch");
    if (gram.rows() != form.basis_r->size())
        throw std::invalid_argument("dual_match_residuals: gram size mismatch");
    std::vector<double> res(form.basis_2r->size(), 0.0);
    for (std::size_t mu = 0; mu < res.size(); ++mu) {
        double lhs = 0.0;
        for (const auto& [i, j] : form.gram_positions[mu])
            lhs += (i == j) ? gram(i, i) : gram(i, j) + gram(j, i);
        for (std::size_t jrow = 0; jrow < lambda.size(); ++jrow)
            lhs += lambda[jrow] * form.constraint_rows[jrow][mu];
        if (mu == 0) lhs += gamma;
        res[mu] = lhs - form.objective_coeffs[mu];
    }
    return res;
}

}  // namespace polycert::relax
