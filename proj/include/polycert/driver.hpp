#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polycert/cert.hpp"
#include "polycert/relax.hpp"
#include "polycert/sdp.hpp"

// End-to-end pipeline: lift if needed, pick eps, then escalate the
// relaxation order until a certificate extracts and verifies.

namespace polycert::driver {

struct RunConfig {
    double eps = 0.01;
    bool eps_auto = false;     // derive eps from (eta, rho)
    double eta = 0.1;
    double rho = 1.0;
    int r = -1;                // fixed order; -1 escalates from the minimum
    int r_max = 8;
    double gap_tol = 1e-8;
    double feas_tol = 1e-8;
    int max_iter = 200;
    bool single_lambda = false;
    std::optional<std::vector<double>> probe;  // in original coordinates
    bool auto_probe = false;
    bool probe_is_minimizer = false;
    int jobs = 1;
    std::size_t basis_cap = 5000;
    int verbosity = 0;
    std::optional<std::string> sdpa_out;
};

struct Attempt {
    int r = 0;
    sdp::SolveStatus status = sdp::SolveStatus::NumericalFailure;
    int iterations = 0;
    double gap = 0.0;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double residual_linf = 0.0;   // certificate residual when extracted
    bool verified = false;
    double time_ms = 0.0;
    std::string message;
};

struct MinimizeReport {
    // "certified" (exit 0), "exhausted" (exit 2) or "error" (exit 1)
    std::string status;
    int exit_code = 1;
    std::string error;

    int nvars = 0;
    int lifted_vars = 0;
    bool lifted = false;
    double eps = 0.0;
    bool eps_auto = false;
    int r_min = 0;
    int r_max = 0;

    double lower_bound = 0.0;
    int r_used = -1;
    std::optional<cert::Certificate> certificate;
    std::optional<cert::SandwichReport> sandwich;
    std::vector<Attempt> attempts;
    double total_time_ms = 0.0;
};

MinimizeReport run_minimize(const poly::ProblemInstance& inst, const RunConfig& cfg);

struct CertifyReport {
    bool pass = false;
    cert::VerifyResult verify;
    std::string witness_text;
    std::optional<cert::CoincidenceResult> coincidence;
    std::string error;
};

CertifyReport run_certify(const poly::ProblemInstance& inst,
                          const cert::Certificate& certificate,
                          double tol = 1e-5);

// Verification threshold used by the pipeline for a relaxation:
// max(1e-5, 100*gap_tol) * (1 + |f_eps|_1).
double verification_tolerance(const relax::Relaxation& rel, double gap_tol);

// The per-order solve strategy of run_minimize: the requested tolerances
// first, then a clean-dual level (modest gap, tight dual residual), then
// two looser fallbacks. Certificate verification remains the caller's
// gate for whatever this returns.
sdp::SdpSolution solve_with_tolerance_ladder(const sdp::SdpProblem& prob,
                                             double gap_tol, double feas_tol,
                                             int max_iter = 200,
                                             int verbosity = 0);

std::string report_to_json(const MinimizeReport& rep, bool include_timing = true);
std::string report_to_text(const MinimizeReport& rep);

}  // namespace polycert::driver
