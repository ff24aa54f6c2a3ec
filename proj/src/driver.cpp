#include "polycert/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace polycert::driver {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct AttemptOutcome {
    Attempt info;
    std::optional<cert::Certificate> certificate;
    std::optional<relax::Relaxation> relaxation;
    std::optional<sdp::SdpSolution> solution;
};

AttemptOutcome try_order(const poly::ProblemInstance& eq_inst, double eps, int r,
                         const RunConfig& cfg) {
    AttemptOutcome out;
    out.info.r = r;
    const auto start = Clock::now();
    try {
        relax::RelaxOptions ropts;
        ropts.single_lambda = cfg.single_lambda;
        ropts.basis_cap = cfg.basis_cap;
        relax::Relaxation rel = relax::build_relaxation(eq_inst, eps, r, ropts);
        sdp::SdpProblem prob = sdp::to_standard_form(rel);

        sdp::SdpSolution sol = solve_with_tolerance_ladder(
            prob, cfg.gap_tol, cfg.feas_tol, cfg.max_iter,
            cfg.verbosity > 1 ? 1 : 0);

        out.info.status = sol.status;
        out.info.iterations = sol.iterations;
        out.info.gap = sol.gap;
        out.info.primal_objective = sol.objective_primal;
        out.info.dual_objective = sol.objective_dual;

        if (sol.status == sdp::SolveStatus::Optimal) {
            cert::Certificate c = cert::extract_certificate(rel, sol);
            out.info.residual_linf = c.residual_linf;
            const double tol = verification_tolerance(rel, cfg.gap_tol);
            const cert::VerifyResult vr =
                cert::verify_certificate(rel.instance, c, tol);
            out.info.verified = vr.pass;
            if (!vr.pass) {
                std::ostringstream msg;
                msg << "certificate rejected: residual " << vr.residual_linf
                    << " vs tol " << tol << ", min eig " << vr.gram_min_eig
                    << ", lambda min " << vr.lambda_min;
                out.info.message = msg.str();
            }
            out.certificate = std::move(c);
            out.solution = std::move(sol);
            out.relaxation = std::move(rel);
        } else {
            out.info.message = sdp::to_string(sol.status);
        }
    } catch (const std::exception& ex) {
        out.info.message = ex.what();
    }
    out.info.time_ms = ms_since(start);
    return out;
}

}  // namespace

double verification_tolerance(const relax::Relaxation& rel, double gap_tol) {
    return std::max(1e-5, 100.0 * gap_tol) *
           (1.0 + poly::l1_norm(rel.objective_perturbed));
}

sdp::SdpSolution solve_with_tolerance_ladder(const sdp::SdpProblem& prob,
                                             double gap_tol, double feas_tol,
                                             int max_iter, int verbosity) {
    // Equality-constrained relaxations have duals whose optimum is
    // approached but not attained, so the requested gap can be out of
    // numerical reach. The second level trades gap for a very clean dual
    // (the certificate identity quality tracks the dual residual alone,
    // and the dual passes through very clean iterates while the primal
    // endgame is still far away); the last two levels are loose rescues.
    struct Level {
        double gap, pres, dres;
    };
    std::vector<Level> ladder{{gap_tol, feas_tol, feas_tol}};
    if (gap_tol < 1e-4) ladder.push_back({1e-4, 1e-4, 3e-9});
    for (const auto& [g, f] : {std::pair{1e-6, 1e-7}, std::pair{1e-5, 5e-6}}) {
        if (g > gap_tol)
            ladder.push_back({g, std::max(f, feas_tol), std::max(f, feas_tol)});
    }
    auto level_options = [&](const Level& level, double reg) {
        sdp::SolveOptions sopts;
        sopts.gap_tol = level.gap;
        sopts.feas_tol = std::max(level.pres, level.dres);
        sopts.feas_tol_primal = level.pres;
        sopts.feas_tol_dual = level.dres;
        sopts.max_iter = max_iter;
        sopts.verbosity = verbosity;
        if (reg > 0.0) sopts.cholesky_reg = reg;
        return sopts;
    };

    // Solve at the requested tolerances once. Trajectories depend only on
    // the regularization, not on the stopping gates, so the recorded
    // traces tell exactly which looser gates would fire; only those
    // levels are re-run (they stop at or before the witnessed iterate).
    sdp::SdpSolution sol =
        sdp::solve_with_restarts(prob, level_options(ladder[0], -1.0));
    if (sol.status == sdp::SolveStatus::Optimal ||
        sol.status == sdp::SolveStatus::Unbounded ||
        sol.status == sdp::SolveStatus::Infeasible)
        return sol;

    for (std::size_t li = 1; li < ladder.size(); ++li) {
        const Level& level = ladder[li];
        for (const auto& [reg, trace] : sol.attempt_traces) {
            bool fires = false;
            for (const auto& it : trace) {
                const double rel_gap =
                    std::abs(it.primal_obj - it.dual_obj) /
                    (1.0 + std::abs(it.primal_obj) + std::abs(it.dual_obj));
                if (rel_gap <= level.gap && it.primal_res <= level.pres &&
                    it.dual_res <= level.dres) {
                    fires = true;
                    break;
                }
            }
            if (!fires) continue;
            sdp::SdpSolution refired =
                sdp::solve_with_restarts(prob, level_options(level, reg));
            if (refired.status == sdp::SolveStatus::Optimal) return refired;
        }
    }
    return sol;
}

MinimizeReport run_minimize(const poly::ProblemInstance& inst, const RunConfig& cfg) {
    MinimizeReport rep;
    const auto start = Clock::now();
    try {
        inst.validate();
        rep.nvars = inst.nvars();

        // lift inequalities to an algebraic set
        poly::ProblemInstance eq_inst = inst;
        relax::LiftedInstance lifted;
        if (!inst.inequalities.empty()) {
            lifted = relax::lift_semialgebraic(inst);
            eq_inst = lifted.instance;
            rep.lifted = true;
        }
        rep.lifted_vars = eq_inst.nvars();

        rep.eps_auto = cfg.eps_auto;
        rep.eps = cfg.eps_auto
                      ? cert::epsilon_for_error(cfg.eta, cfg.rho, eq_inst.nvars())
                      : cfg.eps;
        if (rep.eps < 0.0) throw std::invalid_argument("negative eps");

        const int r_min = relax::min_relaxation_order(eq_inst);
        rep.r_min = cfg.r >= 0 ? std::max(cfg.r, r_min) : r_min;
        rep.r_max = cfg.r >= 0 ? rep.r_min : std::max(cfg.r_max, rep.r_min);
        if (cfg.r >= 0 && cfg.r < r_min) {
            throw std::invalid_argument("requested order " + std::to_string(cfg.r) +
                                        " is below the minimum " +
                                        std::to_string(r_min));
        }

        std::optional<std::vector<double>> probe_lifted;
        if (cfg.probe) {
            probe_lifted = rep.lifted ? lifted.lift_point(*cfg.probe) : *cfg.probe;
        } else if (cfg.auto_probe) {
            const auto found = cert::find_probe_point(inst);
            if (found)
                probe_lifted = rep.lifted ? lifted.lift_point(*found) : *found;
        }

        std::vector<int> orders;
        for (int r = rep.r_min; r <= rep.r_max; ++r) orders.push_back(r);

        std::vector<AttemptOutcome> outcomes(orders.size());
        if (cfg.jobs > 1 && orders.size() > 1) {
            std::mutex mtx;
            std::size_t next = 0;
            auto worker = [&]() {
                for (;;) {
                    std::size_t idx;
                    {
                        std::lock_guard<std::mutex> lock(mtx);
                        if (next >= orders.size()) return;
                        idx = next++;
                    }
                    outcomes[idx] = try_order(eq_inst, rep.eps, orders[idx], cfg);
                }
            };
            std::vector<std::thread> pool;
            const int nthreads =
                std::min<int>(cfg.jobs, static_cast<int>(orders.size()));
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        } else {
            for (std::size_t i = 0; i < orders.size(); ++i) {
                outcomes[i] = try_order(eq_inst, rep.eps, orders[i], cfg);
                if (outcomes[i].info.verified) {
                    outcomes.resize(i + 1);
                    break;
                }
            }
        }

        // first (smallest-r) verified attempt wins; attempts past it are
        // dropped so parallel runs report exactly what sequential runs do
        std::size_t chosen = outcomes.size();
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].info.verified) {
                chosen = i;
                outcomes.resize(i + 1);
                break;
            }
        }
        for (const auto& o : outcomes) rep.attempts.push_back(o.info);

        if (chosen < outcomes.size()) {
            AttemptOutcome& best = outcomes[chosen];
            rep.status = "certified";
            rep.exit_code = 0;
            rep.r_used = best.info.r;
            rep.lower_bound = best.certificate->gamma;
            if (probe_lifted) {
                rep.sandwich = cert::sandwich_report(*best.relaxation, *best.solution,
                                                     *probe_lifted,
                                                     cfg.probe_is_minimizer);
            }
            if (cfg.sdpa_out) {
                sdp::write_sdpa(sdp::to_standard_form(*best.relaxation),
                                *cfg.sdpa_out);
            }
            rep.certificate = std::move(best.certificate);
        } else {
            rep.status = "exhausted";
            rep.exit_code = 2;
            // report the best dual bound seen among optimal-but-unverified runs
            rep.r_used = -1;
            for (const auto& a : rep.attempts) {
                if (a.status == sdp::SolveStatus::Optimal) {
                    rep.lower_bound = a.dual_objective;
                    rep.r_used = a.r;
                }
            }
            if (cfg.sdpa_out && !outcomes.empty()) {
                try {
                    relax::RelaxOptions ropts;
                    ropts.single_lambda = cfg.single_lambda;
                    ropts.basis_cap = cfg.basis_cap;
                    sdp::write_sdpa(
                        sdp::to_standard_form(relax::build_relaxation(
                            eq_inst, rep.eps, rep.attempts.back().r, ropts)),
                        *cfg.sdpa_out);
                } catch (const std::exception&) {
                }
            }
        }
    } catch (const std::exception& ex) {
        rep.status = "error";
        rep.exit_code = 1;
        rep.error = ex.what();
    }
    rep.total_time_ms = ms_since(start);
    return rep;
}

CertifyReport run_certify(const poly::ProblemInstance& inst,
                          const cert::Certificate& certificate, double tol) {
    CertifyReport rep;
    try {
        poly::ProblemInstance eq_inst = inst;
        relax::LiftedInstance lifted;
        const bool has_ineq = !inst.inequalities.empty();
        if (has_ineq) {
            lifted = relax::lift_semialgebraic(inst);
            eq_inst = lifted.instance;
        }
        if (certificate.nvars != eq_inst.nvars())
            throw std::invalid_argument(
                "certificate variable count " + std::to_string(certificate.nvars) +
                " does not match the (lifted) problem over " +
                std::to_string(eq_inst.nvars()) + " variables");

        rep.verify = cert::verify_certificate(eq_inst, certificate, tol);
        rep.pass = rep.verify.pass;
        rep.witness_text = poly::to_string(
            poly::Polynomial::monomial(eq_inst.nvars(), rep.verify.witness, 1.0),
            eq_inst.variables);
        if (has_ineq) {
            const auto samples = cert::sample_points_in_set(inst, 16);
            rep.coincidence =
                cert::lifted_coincidence_check(inst, certificate, samples);
        }
    } catch (const std::exception& ex) {
        rep.pass = false;
        rep.error = ex.what();
    }
    return rep;
}

namespace {

json attempt_to_json(const Attempt& a, bool include_timing) {
    json j;
    j["r"] = a.r;
    j["solver_status"] = sdp::to_string(a.status);
    j["iterations"] = a.iterations;
    j["gap"] = a.gap;
    j["primal_objective"] = a.primal_objective;
    j["dual_objective"] = a.dual_objective;
    j["residual_linf"] = a.residual_linf;
    j["verified"] = a.verified;
    if (include_timing) j["time_ms"] = a.time_ms;
    if (!a.message.empty()) j["message"] = a.message;
    return j;
}

}  // namespace

std::string report_to_json(const MinimizeReport& rep, bool include_timing) {
    json j;
    j["status"] = rep.status;
    j["exit_code"] = rep.exit_code;
    if (!rep.error.empty()) j["error"] = rep.error;
    json prob;
    prob["nvars"] = rep.nvars;
    prob["lifted"] = rep.lifted;
    prob["lifted_vars"] = rep.lifted_vars;
    j["problem"] = prob;
    json cfg;
    cfg["eps"] = rep.eps;
    cfg["eps_auto"] = rep.eps_auto;
    cfg["r_min"] = rep.r_min;
    cfg["r_max"] = rep.r_max;
    j["config"] = cfg;
    if (rep.status == "certified" || rep.r_used >= 0) {
        json res;
        res["lower_bound"] = rep.lower_bound;
        res["r"] = rep.r_used;
        j["result"] = res;
    }
    if (rep.certificate) {
        j["certificate"] = json::parse(cert::certificate_to_json(*rep.certificate));
    }
    if (rep.sandwich) {
        const auto& s = *rep.sandwich;
        json sj;
        sj["lower_bound"] = s.lower_bound;
        sj["upper_probe"] = s.upper_probe;
        sj["eps"] = s.eps;
        sj["r"] = s.r;
        sj["perturbation_at_probe"] = s.perturbation_at_probe;
        sj["bound_gap"] = s.bound_gap;
        sj["probe_feasible"] = s.probe_feasible;
        sj["probe_violation"] = s.probe_violation;
        if (s.predicted_width) sj["predicted_width"] = *s.predicted_width;
        j["sandwich"] = sj;
    }
    json attempts = json::array();
    for (const auto& a : rep.attempts) attempts.push_back(attempt_to_json(a, include_timing));
    j["attempts"] = attempts;
    if (include_timing) j["total_time_ms"] = rep.total_time_ms;
    return j.dump(2);
}

namespace {

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string report_to_text(const MinimizeReport& rep) {
    std::ostringstream out;
    out << "status: " << rep.status << "\n";
    if (!rep.error.empty()) out << "error: " << rep.error << "\n";
    out << "problem: nvars " << rep.nvars;
    if (rep.lifted) out << " (lifted to " << rep.lifted_vars << ")";
    out << "\n";
    out << "eps: " << fmt_full(rep.eps) << (rep.eps_auto ? " (auto)" : "") << "\n";
    out << "orders: " << rep.r_min << ".." << rep.r_max << "\n";
    if (rep.status == "certified" || rep.r_used >= 0) {
        out << "lower_bound: " << fmt_full(rep.lower_bound) << "\n";
        out << "r: " << rep.r_used << "\n";
    }
    if (rep.certificate) {
        const auto& c = *rep.certificate;
        out << "certificate: gamma " << fmt_full(c.gamma) << ", residual_linf "
            << fmt_full(c.residual_linf) << ", gram_min_eig "
            << fmt_full(c.gram_min_eig) << ", lambda [";
        for (std::size_t i = 0; i < c.lambda.size(); ++i) {
            if (i) out << ", ";
            out << fmt_full(c.lambda[i]);
        }
        out << "]\n";
    }
    if (rep.sandwich) {
        const auto& s = *rep.sandwich;
        out << "sandwich: lower " << fmt_full(s.lower_bound) << ", probe value "
            << fmt_full(s.upper_probe) << ", gap " << fmt_full(s.bound_gap);
        if (s.predicted_width)
            out << ", predicted width " << fmt_full(*s.predicted_width);
        if (!s.probe_feasible)
            out << ", PROBE INFEASIBLE (violation " << fmt_full(s.probe_violation)
                << ")";
        out << "\n";
    }
    for (const auto& a : rep.attempts) {
        out << "attempt r=" << a.r << ": " << sdp::to_string(a.status) << ", "
            << a.iterations << " iters, primal " << fmt_full(a.primal_objective)
            << ", dual " << fmt_full(a.dual_objective) << ", gap "
            << fmt_full(a.gap) << ", residual " << fmt_full(a.residual_linf)
            << (a.verified ? ", verified" : "");
        if (!a.message.empty()) out << " [" << a.message << "]";
        out << "\n";
    }
    out << "total_time_ms: " << rep.total_time_ms << "\n";
    return out.str();
}

}  // namespace polycert::driver
