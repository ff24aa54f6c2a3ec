#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polycert/cert.hpp"
#include "polycert/driver.hpp"
#include "polycert/probfile.hpp"
#include "polycert/relax.hpp"
#include "polycert/sdp.hpp"

namespace {

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--probe", "not a number: " + item);
        }
    }
    if (out.empty()) throw CLI::ValidationError("--probe", "empty point");
    return out;
}

void emit(const std::string& text, const std::optional<std::string>& out_path) {
    if (out_path) {
        std::ofstream f(*out_path);
        if (!f) throw std::runtime_error("cannot open " + *out_path + " for writing");
        f << text;
    } else {
        std::cout << text;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"certified lower bounds for polynomial minimization over "
                 "algebraic and semi-algebraic sets"};
    app.require_subcommand(1);

    // ---- minimize ----------------------------------------------------
    auto* cmd_min = app.add_subcommand(
        "minimize", "compute a certified lower bound for a problem file");
    std::string min_problem;
    cmd_min->add_option("problem", min_problem, "problem file")->required();
    std::string eps_text = "0.01";
    cmd_min->add_option("--eps", eps_text,
                        "perturbation size, or 'auto' to derive from eta/rho");
    polycert::driver::RunConfig cfg;
    cmd_min->add_option("--eta", cfg.eta, "target error bound for --eps auto");
    cmd_min->add_option("--rho", cfg.rho,
                        "sup-norm bound on a global minimizer for --eps auto");
    std::string r_text = "auto";
    cmd_min->add_option("--r", r_text, "relaxation order, or 'auto' to escalate");
    cmd_min->add_option("--r-max", cfg.r_max, "largest order to try");
    double tol = 1e-8;
    cmd_min->add_option("--tol", tol, "solver gap and feasibility tolerance");
    cmd_min->add_flag("--single-lambda", cfg.single_lambda,
                      "use one shared constraint multiplier");
    std::string probe_text;
    cmd_min->add_option("--probe", probe_text,
                        "comma-separated feasible point for the sandwich report");
    cmd_min->add_flag("--probe-is-minimizer", cfg.probe_is_minimizer,
                      "treat the probe as a certified global minimizer");
    cmd_min->add_flag("--auto-probe", cfg.auto_probe,
                      "search for a probe point with multistart Nelder-Mead "
                      "(heuristic)");
    std::string format = "text";
    cmd_min->add_option("--format", format, "report format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    std::optional<std::string> out_path;
    cmd_min->add_option("--out", out_path, "write the report to a file");
    std::optional<std::string> sdpa_out;
    cmd_min->add_option("--sdpa-out", sdpa_out,
                        "also export the solved relaxation in SDPA format");
    cmd_min->add_option("--jobs", cfg.jobs, "solve candidate orders concurrently");
    cmd_min->add_option("--max-iter", cfg.max_iter, "interior-point iteration cap");
    int verbosity = 0;
    cmd_min->add_flag("-v,--verbose", verbosity, "print solver progress");

    // ---- certify ------------------------------------------------------
    auto* cmd_cert = app.add_subcommand(
        "certify", "verify a certificate file against a problem file");
    std::string cert_problem, cert_file;
    cmd_cert->add_option("problem", cert_problem, "problem file")->required();
    cmd_cert->add_option("certificate", cert_file, "certificate JSON")->required();
    double cert_tol = 1e-5;
    cmd_cert->add_option("--tol", cert_tol, "verification tolerance");

    // ---- lift ---------------------------------------------------------
    auto* cmd_lift = app.add_subcommand(
        "lift", "rewrite inequalities as equalities with slack variables");
    std::string lift_problem;
    cmd_lift->add_option("problem", lift_problem, "problem file")->required();
    std::optional<std::string> lift_out;
    cmd_lift->add_option("--out", lift_out, "output problem file");

    // ---- export-sdpa ----------------------------------------------------
    auto* cmd_sdpa = app.add_subcommand(
        "export-sdpa", "write the moment relaxation in SDPA sparse format");
    std::string sdpa_problem;
    cmd_sdpa->add_option("problem", sdpa_problem, "problem file")->required();
    double sdpa_eps = 0.01;
    cmd_sdpa->add_option("--eps", sdpa_eps, "perturbation size");
    int sdpa_r = -1;
    cmd_sdpa->add_option("--r", sdpa_r, "relaxation order (default: minimum)");
    std::optional<std::string> sdpa_path;
    cmd_sdpa->add_option("--out", sdpa_path, "output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_min) {
            cfg.verbosity = verbosity;
            cfg.gap_tol = tol;
            cfg.feas_tol = tol;
            cfg.sdpa_out = sdpa_out;
            if (eps_text == "auto") {
                cfg.eps_auto = true;
            } else {
                cfg.eps = std::stod(eps_text);
            }
            if (r_text != "auto") cfg.r = std::stoi(r_text);
            if (!probe_text.empty()) cfg.probe = parse_point(probe_text);

            const auto inst = polycert::probfile::read_problem(min_problem);
            const auto rep = polycert::driver::run_minimize(inst, cfg);
            emit(format == "json" ? polycert::driver::report_to_json(rep)
                                  : polycert::driver::report_to_text(rep),
                 out_path);
            return rep.exit_code;
        }

        if (*cmd_cert) {
            const auto inst = polycert::probfile::read_problem(cert_problem);
            const auto certificate = polycert::cert::read_certificate(cert_file);
            const auto rep = polycert::driver::run_certify(inst, certificate, cert_tol);
            if (!rep.error.empty()) {
                std::cerr << "error: " << rep.error << "\n";
                return 1;
            }
            std::printf("residual_linf: %.17g\n", rep.verify.residual_linf);
            std::printf("witness: %s\n", rep.witness_text.c_str());
            std::printf("gram_min_eig: %.17g\n", rep.verify.gram_min_eig);
            std::printf("lambda_min: %.17g\n", rep.verify.lambda_min);
            if (rep.coincidence) {
                std::printf("coincidence_max_deviation: %.17g (%zu samples)\n",
                            rep.coincidence->max_deviation,
                            rep.coincidence->samples_used);
            }
            std::printf("verdict: %s\n", rep.pass ? "PASS" : "FAIL");
            return rep.pass ? 0 : 1;
        }

        if (*cmd_lift) {
            const auto inst = polycert::probfile::read_problem(lift_problem);
            if (inst.inequalities.empty()) {
                std::cerr << "warning: no inequalities to lift; copying the "
                             "problem unchanged\n";
                emit(polycert::probfile::problem_to_string(inst), lift_out);
                return 0;
            }
            const auto lifted = polycert::relax::lift_semialgebraic(inst);
            emit(polycert::probfile::problem_to_string(lifted.instance), lift_out);
            return 0;
        }

        if (*cmd_sdpa) {
            const auto inst = polycert::probfile::read_problem(sdpa_problem);
            polycert::poly::ProblemInstance eq_inst = inst;
            if (!inst.inequalities.empty())
                eq_inst = polycert::relax::lift_semialgebraic(inst).instance;
            const int r = sdpa_r >= 0 ? sdpa_r
                                      : polycert::relax::min_relaxation_order(eq_inst);
            const auto rel = polycert::relax::build_relaxation(eq_inst, sdpa_eps, r);
            const auto prob = polycert::sdp::to_standard_form(rel);
            emit(polycert::sdp::to_sdpa(prob), sdpa_path);
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
