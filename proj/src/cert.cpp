#include "polycert/cert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace polycert::cert {

namespace {

using json = nlohmann::ordered_json;

// the certified identity, fully re-expanded: f_eps - gamma + sum lambda g^2 - q
Polynomial identity_residual_poly(const ProblemInstance& inst,
                                  const Certificate& cert) {
    Polynomial lhs = (cert.eps == 0.0)
                         ? inst.objective
                         : poly::perturb(inst.objective, cert.eps, cert.r);
    lhs = lhs - Polynomial::constant(inst.nvars(), cert.gamma);
    if (cert.lambda.size() == inst.equalities.size()) {
        for (std::size_t j = 0; j < inst.equalities.size(); ++j) {
            const Polynomial& g = inst.equalities[j];
            lhs = lhs + cert.lambda[j] * (g * g);
        }
    } else if (cert.lambda.size() == 1 && !inst.equalities.empty()) {
        // single shared multiplier over the summed squares
        Polynomial total(inst.nvars());
        for (const auto& g : inst.equalities) total = total + g * g;
        lhs = lhs + cert.lambda[0] * total;
    } else if (!cert.lambda.empty()) {
        throw std::invalid_argument("certificate multiplier count mismatch");
    }
    return lhs - gram_polynomial(cert);
}

std::pair<double, poly::ExponentVector> linf_with_witness(const Polynomial& p) {
    double worst = 0.0;
    poly::ExponentVector witness = poly::ExponentVector::zero(p.nvars());
    for (const auto& [e, c] : p.terms()) {
        if (std::abs(c) > worst) {
            worst = std::abs(c);
            witness = e;
        }
    }
    return {worst, witness};
}

}  // namespace

Polynomial gram_polynomial(const Certificate& cert) {
    Polynomial q(cert.nvars);
    const std::size_t s = cert.basis.size();
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = i; j < s; ++j) {
            const double v = (i == j) ? cert.gram(i, i)
                                      : cert.gram(i, j) + cert.gram(j, i);
            if (v == 0.0) continue;
            q.add_term(cert.basis[i] + cert.basis[j], v);
        }
    }
    return q;
}

Certificate extract_certificate(const Relaxation& relax, const SdpSolution& sol) {
    if (sol.status != sdp::SolveStatus::Optimal)
        throw std::invalid_argument("extract_certificate: solve status is not Optimal");

    Certificate cert;
    cert.eps = relax.eps;
    cert.r = relax.r;
    cert.nvars = relax.nvars;
    cert.basis = relax.moment_index->basis_r->monomials;
    cert.gamma = sol.gamma;
    cert.gram = linalg::sym_part(sol.gram);

    cert.lambda = sol.lambda;
    if (relax.options.single_lambda && cert.lambda.size() == 1 &&
        relax.instance.equalities.size() > 1) {
        // the shared multiplier applies to every constraint
        cert.lambda.assign(relax.instance.equalities.size(), cert.lambda[0]);
    }
    cert.lambda_min = 0.0;
    const double clamp = std::max(1e-8, sol.options_used.dual_tol());
    for (double& l : cert.lambda) {
        cert.lambda_min = std::min(cert.lambda_min, l);
        if (l < 0.0 && l >= -clamp) l = 0.0;
    }

    // Gram repair: absorb the coefficient mismatch into Q by a minimum
    // norm spread over the positions of each monomial. The identity then
    // holds to machine precision and the certificate's validity rests on
    // the Gram eigenvalues measured afterwards. The dual iterate sits
    // strictly inside the cone, which leaves room for the tiny shift.
    {
        const Polynomial residual = identity_residual_poly(relax.instance, cert);
        const auto form = relax::dual_sos_form(relax);
        for (const auto& [mu, value] : residual.terms()) {
            const long pos = form.basis_2r->index_of(mu);
            if (pos < 0) continue;
            const auto& places = form.gram_positions[pos];
            if (places.empty()) continue;
            double norm = 0.0;
            for (const auto& [i, j] : places) norm += (i == j) ? 1.0 : 4.0;
            for (const auto& [i, j] : places) {
                const double a = (i == j) ? 1.0 : 2.0;
                const double delta = value * a / norm;
                cert.gram(i, j) += delta;
                if (i != j) cert.gram(j, i) += delta;
            }
        }
    }

    cert.gram_min_eig =
        cert.gram.rows() > 0 ? linalg::min_eigenvalue(cert.gram) : 0.0;
    cert.residual_linf =
        linf_with_witness(identity_residual_poly(relax.instance, cert)).first;
    return cert;
}

VerifyResult verify_certificate(const ProblemInstance& inst,
                                const Certificate& cert, double tol) {
    inst.validate();
    if (cert.nvars != inst.nvars())
        throw std::invalid_argument("verify_certificate: variable count mismatch");
    const moment::MonomialBasis fresh = moment::build_basis(
        cert.nvars, cert.r, std::max<std::size_t>(5000, cert.basis.size() + 1));
    if (fresh.monomials != cert.basis)
        throw std::invalid_argument("verify_certificate: certificate basis is not the "
                                    "canonical degree-r basis");
    if (cert.gram.rows() != cert.basis.size() ||
        cert.gram.cols() != cert.basis.size())
        throw std::invalid_argument("verify_certificate: gram dimension mismatch");

    VerifyResult res;
    const Polynomial residual = identity_residual_poly(inst, cert);
    std::tie(res.residual_linf, res.witness) = linf_with_witness(residual);
    res.gram_min_eig =
        cert.gram.rows() > 0 ? linalg::min_eigenvalue(cert.gram) : 0.0;
    res.lambda_min = 0.0;
    for (double l : cert.lambda) res.lambda_min = std::min(res.lambda_min, l);
    res.pass = res.residual_linf <= tol && res.gram_min_eig >= -tol &&
               res.lambda_min >= -tol;
    return res;
}

SandwichReport sandwich_report(const Relaxation& relax, const SdpSolution& sol,
                               std::span<const double> probe,
                               bool probe_is_minimizer, double feas_tol) {
    if (sol.status != sdp::SolveStatus::Optimal)
        throw std::invalid_argument("sandwich_report: solve status is not Optimal");
    if (static_cast<int>(probe.size()) != relax.nvars)
        throw std::invalid_argument("sandwich_report: probe has wrong dimension");

    SandwichReport rep;
    rep.eps = relax.eps;
    rep.r = relax.r;
    rep.lower_bound = sol.objective_dual;
    rep.upper_probe = poly::evaluate(relax.objective_perturbed, probe);
    rep.perturbation_at_probe =
        poly::evaluate(poly::perturbation_poly(relax.nvars, relax.r), probe);
    rep.bound_gap = rep.upper_probe - rep.lower_bound;

    rep.probe_violation = 0.0;
    for (const auto& g : relax.instance.equalities)
        rep.probe_violation =
            std::max(rep.probe_violation, std::abs(poly::evaluate(g, probe)));
    rep.probe_feasible = rep.probe_violation <= feas_tol;

    if (probe_is_minimizer)
        rep.predicted_width = relax.eps * rep.perturbation_at_probe;
    return rep;
}

double epsilon_for_error(double eta, double rho, int n) {
    if (eta <= 0.0) throw std::invalid_argument("epsilon_for_error: eta must be positive");
    if (rho < 0.0) throw std::invalid_argument("epsilon_for_error: negative rho");
    if (n < 1) throw std::invalid_argument("epsilon_for_error: n must be at least 1");
    return eta / (static_cast<double>(n) * std::exp(rho * rho));
}

CoincidenceResult lifted_coincidence_check(
    const ProblemInstance& inst, const Certificate& cert,
    const std::vector<std::vector<double>>& samples, double feas_tol) {
    inst.validate();
    const int n = inst.nvars();
    const int m = static_cast<int>(inst.inequalities.size());
    if (cert.nvars != n + m)
        throw std::invalid_argument(
            "lifted_coincidence_check: certificate is not over the lifted variables");

    const Polynomial gram = gram_polynomial(cert);
    const Polynomial theta = poly::perturbation_poly(n, cert.r);

    CoincidenceResult out;
    for (const auto& x : samples) {
        if (static_cast<int>(x.size()) != n)
            throw std::invalid_argument("lifted_coincidence_check: bad sample dimension");
        std::vector<double> lifted(x.begin(), x.end());
        bool inside = true;
        std::vector<double> gvals(m);
        for (int j = 0; j < m; ++j) {
            gvals[j] = poly::evaluate(inst.inequalities[j], x);
            if (gvals[j] < -feas_tol) {
                inside = false;
                break;
            }
            lifted.push_back(std::sqrt(std::max(0.0, gvals[j])));
        }
        if (!inside)
            throw std::invalid_argument(
                "lifted_coincidence_check: sample outside the feasible set");

        // eps * sum_j sum_{k<=r} g_j(x)^k / k!
        double slack_series = 0.0;
        for (int j = 0; j < m; ++j) {
            double kfact = 1.0;
            double power = 1.0;
            for (int kk = 0; kk <= cert.r; ++kk) {
                if (kk > 0) {
                    kfact *= static_cast<double>(kk);
                    power *= gvals[j];
                }
                slack_series += power / kfact;
            }
        }
        const double lhs = poly::evaluate(inst.objective, x) +
                           cert.eps * poly::evaluate(theta, x) +
                           cert.eps * slack_series - cert.gamma;
        const double rhs = poly::evaluate(gram, lifted);
        out.deviations.push_back(std::abs(lhs - rhs));
        out.max_deviation = std::max(out.max_deviation, out.deviations.back());
    }
    out.samples_used = out.deviations.size();
    return out;
}

std::vector<std::vector<double>> sample_points_in_set(const ProblemInstance& inst,
                                                      std::size_t count,
                                                      double span) {
    inst.validate();
    const int n = inst.nvars();
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (n > static_cast<int>(std::size(primes)))
        throw std::invalid_argument("sample_points_in_set: too many variables");

    auto halton = [](std::size_t index, int base) {
        double f = 1.0, r = 0.0;
        std::size_t i = index;
        while (i > 0) {
            f /= base;
            r += f * static_cast<double>(i % base);
            i /= base;
        }
        return r;
    };

    std::vector<std::vector<double>> points;
    const std::size_t max_draws = 256 * std::max<std::size_t>(count, 1);
    for (std::size_t idx = 1; idx <= max_draws && points.size() < count; ++idx) {
        std::vector<double> x(n);
        for (int d = 0; d < n; ++d)
            x[d] = span * (2.0 * halton(idx, primes[d]) - 1.0);
        bool inside = true;
        for (const auto& g : inst.inequalities) {
            if (poly::evaluate(g, x) < 0.0) {
                inside = false;
                break;
            }
        }
        if (inside) points.push_back(std::move(x));
    }
    if (points.size() < count)
        throw std::runtime_error("sample_points_in_set: rejection sampling found only " +
                                 std::to_string(points.size()) + " points");
    return points;
}

PutinarSplitResult check_putinar_split(const ProblemInstance& inst,
                                       const Certificate& cert,
                                       const PutinarForm& putinar) {
    inst.validate();
    const int n = inst.nvars();
    const int m = static_cast<int>(inst.inequalities.size());
    if (static_cast<int>(putinar.multipliers.size()) != m)
        throw std::invalid_argument("check_putinar_split: multiplier count mismatch");
    if (cert.nvars != n + m)
        throw std::invalid_argument(
            "check_putinar_split: certificate is not over the lifted variables");
    if (static_cast<int>(cert.lambda.size()) != m)
        throw std::invalid_argument("check_putinar_split: lambda count mismatch");

    // premise: q0 + sum q_j g_j = f + eps*theta_r (over the x variables)
    Polynomial premise = putinar.q0;
    for (int j = 0; j < m; ++j)
        premise = premise + putinar.multipliers[j] * inst.inequalities[j];
    premise = premise - poly::perturb(inst.objective, cert.eps, cert.r);
    PutinarSplitResult res;
    res.premise_residual = linf_with_witness(premise).first;

    auto extend = [&](const Polynomial& p) {
        Polynomial out(n + m);
        for (const auto& [e, c] : p.terms()) {
            std::vector<std::uint32_t> exps(n + m, 0);
            std::copy(e.exps.begin(), e.exps.end(), exps.begin());
            out.add_term(poly::ExponentVector(std::move(exps)), c);
        }
        return out;
    };

    // q1(x) = q0 + sum_j (q_j g_j + lambda_j g_j^2)
    Polynomial q1 = putinar.q0;
    for (int j = 0; j < m; ++j) {
        const Polynomial& g = inst.inequalities[j];
        q1 = q1 + putinar.multipliers[j] * g + cert.lambda[j] * (g * g);
    }
    // q2(x, z) = eps*phi_r(z) + sum_j lambda_j (z_j^4 - 2 g_j z_j^2)
    Polynomial q2 = cert.eps * poly::perturbation_poly(n + m, cert.r, n, m);
    for (int j = 0; j < m; ++j) {
        Polynomial zj = Polynomial::variable(n + m, n + j);
        const Polynomial zj2 = zj * zj;
        q2 = q2 + cert.lambda[j] * (zj2 * zj2 - 2.0 * extend(inst.inequalities[j]) * zj2);
    }

    // target: f + eps*(theta_r + phi_r) + sum_j lambda_j (g_j - z_j^2)^2
    Polynomial target = extend(inst.objective) +
                        cert.eps * poly::perturbation_poly(n + m, cert.r);
    for (int j = 0; j < m; ++j) {
        Polynomial zj = Polynomial::variable(n + m, n + j);
        const Polynomial gj = extend(inst.inequalities[j]) - zj * zj;
        target = target + cert.lambda[j] * (gj * gj);
    }
    res.split_residual = linf_with_witness(extend(q1) + q2 - target).first;
    return res;
}

std::optional<std::vector<double>> find_probe_point(const ProblemInstance& inst,
                                                    int restarts, unsigned seed,
                                                    double feas_tol) {
    inst.validate();
    const int n = inst.nvars();

    auto penalized = [&](std::span<const double> x) {
        double v = poly::evaluate(inst.objective, x);
        for (const auto& g : inst.equalities) {
            const double gv = poly::evaluate(g, x);
            v += 1e6 * gv * gv;
        }
        for (const auto& g : inst.inequalities) {
            const double gv = poly::evaluate(g, x);
            if (gv < 0.0) v += 1e6 * gv * gv;
        }
        return v;
    };

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> box(-5.0, 5.0);

    std::optional<std::vector<double>> best;
    double best_val = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < restarts; ++restart) {
        // Nelder-Mead simplex
        std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(n));
        for (auto& v : simplex)
            for (double& c : v) c = box(rng);
        std::vector<double> fv(n + 1);
        for (int i = 0; i <= n; ++i) fv[i] = penalized(simplex[i]);

        for (int it = 0; it < 400 * n; ++it) {
            std::vector<int> order(n + 1);
            for (int i = 0; i <= n; ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](int a, int b) { return fv[a] < fv[b]; });
            std::vector<std::vector<double>> sx(n + 1);
            std::vector<double> sf(n + 1);
            for (int i = 0; i <= n; ++i) {
                sx[i] = simplex[order[i]];
                sf[i] = fv[order[i]];
            }
            simplex = sx;
            fv = sf;
            if (std::abs(fv[n] - fv[0]) <= 1e-12 * (1.0 + std::abs(fv[0]))) break;

            std::vector<double> centroid(n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int d = 0; d < n; ++d) centroid[d] += simplex[i][d] / n;

            auto affine = [&](double t) {
                std::vector<double> p(n);
                for (int d = 0; d < n; ++d)
                    p[d] = centroid[d] + t * (simplex[n][d] - centroid[d]);
                return p;
            };
            const std::vector<double> xr = affine(-1.0);
            const double fr = penalized(xr);
            if (fr < fv[0]) {
                const std::vector<double> xe = affine(-2.0);
                const double fe = penalized(xe);
                if (fe < fr) {
                    simplex[n] = xe;
                    fv[n] = fe;
                } else {
                    simplex[n] = xr;
                    fv[n] = fr;
                }
            } else if (fr < fv[n - 1]) {
                simplex[n] = xr;
                fv[n] = fr;
            } else {
                const std::vector<double> xc = affine(0.5);
                const double fc = penalized(xc);
                if (fc < fv[n]) {
                    simplex[n] = xc;
                    fv[n] = fc;
                } else {
                    for (int i = 1; i <= n; ++i) {
                        for (int d = 0; d < n; ++d)
                            simplex[i][d] = 0.5 * (simplex[i][d] + simplex[0][d]);
                        fv[i] = penalized(simplex[i]);
                    }
                }
            }
        }
        int lowest = 0;
        for (int i = 1; i <= n; ++i)
            if (fv[i] < fv[lowest]) lowest = i;
        double violation = 0.0;
        for (const auto& g : inst.equalities)
            violation = std::max(violation,
                                 std::abs(poly::evaluate(g, simplex[lowest])));
        for (const auto& g : inst.inequalities)
            violation = std::max(violation,
                                 -std::min(0.0, poly::evaluate(g, simplex[lowest])));
        if (violation <= feas_tol) {
            const double val = poly::evaluate(inst.objective, simplex[lowest]);
            if (val < best_val) {
                best_val = val;
                best = simplex[lowest];
            }
        }
    }
    return best;
}

std::string certificate_to_json(const Certificate& cert) {
    json j;
    j["gamma"] = cert.gamma;
    j["lambda"] = cert.lambda;
    json gram;
    gram["dim"] = cert.gram.rows();
    std::vector<double> lower;
    for (std::size_t i = 0; i < cert.gram.rows(); ++i)
        for (std::size_t jj = 0; jj <= i; ++jj) lower.push_back(cert.gram(i, jj));
    gram["lower"] = lower;
    j["gram"] = gram;
    j["eps"] = cert.eps;
    j["r"] = cert.r;
    json basis = json::array();
    for (const auto& e : cert.basis) basis.push_back(e.exps);
    j["basis"] = basis;
    j["residual_linf"] = cert.residual_linf;
    j["gram_min_eig"] = cert.gram_min_eig;
    return j.dump(2);
}

Certificate certificate_from_json(const std::string& text) {
    const json j = json::parse(text);
    Certificate cert;
    cert.gamma = j.at("gamma").get<double>();
    cert.lambda = j.at("lambda").get<std::vector<double>>();
    const auto& gram = j.at("gram");
    const std::size_t dim = gram.at("dim").get<std::size_t>();
    const auto lower = gram.at("lower").get<std::vector<double>>();
    if (lower.size() != dim * (dim + 1) / 2)
        throw std::invalid_argument("certificate JSON: gram triangle size mismatch");
    cert.gram = Matrix(dim);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t jj = 0; jj <= i; ++jj) {
            cert.gram(i, jj) = lower[pos];
            cert.gram(jj, i) = lower[pos];
            ++pos;
        }
    cert.eps = j.at("eps").get<double>();
    cert.r = j.at("r").get<int>();
    for (const auto& e : j.at("basis"))
        cert.basis.emplace_back(e.get<std::vector<std::uint32_t>>());
    if (cert.basis.size() != dim)
        throw std::invalid_argument("certificate JSON: basis/gram size mismatch");
    cert.nvars = cert.basis.empty() ? 0 : cert.basis.front().nvars();
    cert.residual_linf = j.at("residual_linf").get<double>();
    cert.gram_min_eig = j.at("gram_min_eig").get<double>();
    return cert;
}

void write_certificate(const Certificate& cert, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << certificate_to_json(cert) << "\n";
}

Certificate read_certificate(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return certificate_from_json(ss.str());
}

}  // namespace polycert::cert
