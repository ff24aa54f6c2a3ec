#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polycert/relax.hpp"
#include "polycert/sdp.hpp"

// Extraction and independent verification of positivity certificates
//
//   f + eps*theta_r - gamma + sum_j lambda_j g_j^2 = v_r^T Q v_r,
//
// with lambda >= 0 and Q PSD, which witnesses f + eps*theta_r >= gamma
// everywhere on {g_j = 0}. All residuals are recomputed with sparse
// polynomial arithmetic, never read back from solver internals.

namespace polycert::cert {

using linalg::Matrix;
using moment::MonomialBasis;
using poly::Polynomial;
using poly::ProblemInstance;
using relax::Relaxation;
using sdp::SdpSolution;

struct Certificate {
    double gamma = 0.0;
    std::vector<double> lambda;      // one per constraint, >= 0 after clamping
    Matrix gram;                     // over the degree-r basis
    double eps = 0.0;
    int r = 0;
    int nvars = 0;
    std::vector<poly::ExponentVector> basis;  // monomials indexing gram

    double residual_linf = 0.0;      // max |coefficient mismatch|
    double gram_min_eig = 0.0;
    double lambda_min = 0.0;         // smallest multiplier before clamping
};

// Requires sol.status == Optimal. Multipliers in [-clamp, 0) are set to 0
// with clamp = max(1e-8, feas_tol); the pre-clamp minimum is recorded.
Certificate extract_certificate(const Relaxation& relax, const SdpSolution& sol);

// v_r^T Q v_r expanded with exact sparse arithmetic.
Polynomial gram_polynomial(const Certificate& cert);

struct VerifyResult {
    bool pass = false;
    double residual_linf = 0.0;
    poly::ExponentVector witness;    // monomial of largest mismatch
    double gram_min_eig = 0.0;
    double lambda_min = 0.0;
};

// Recomputes everything from scratch: rebuilds the perturbation, squares
// the constraints, re-expands the Gram quadratic form, and compares
// coefficients. inst must be the (already lifted) equality instance the
// certificate was produced for.
VerifyResult verify_certificate(const ProblemInstance& inst,
                                const Certificate& cert, double tol);

struct SandwichReport {
    double lower_bound = 0.0;        // dual objective gamma
    double upper_probe = 0.0;        // f_eps at the probe point
    double eps = 0.0;
    int r = 0;
    double perturbation_at_probe = 0.0;  // theta_r(probe)
    double bound_gap = 0.0;          // upper_probe - lower_bound
    double probe_violation = 0.0;    // max |g_j(probe)|
    bool probe_feasible = false;
    // eps * theta_r(probe); the guaranteed bound width when the probe is
    // a certified global minimizer
    std::optional<double> predicted_width;
};

SandwichReport sandwich_report(const Relaxation& relax, const SdpSolution& sol,
                               std::span<const double> probe,
                               bool probe_is_minimizer = false,
                               double feas_tol = 1e-6);

// Largest eps such that the relaxation value is within eta of the true
// minimum once r is large enough, given |x*|_inf <= rho:
// eps = eta / (n * exp(rho^2)).
double epsilon_for_error(double eta, double rho, int n);

struct CoincidenceResult {
    double max_deviation = 0.0;
    std::vector<double> deviations;  // one per sample
    std::size_t samples_used = 0;
};

// For each sample x in K evaluates
//   f(x) + eps*theta_r(x) + eps*sum_j sum_k g_j(x)^k / k!  -  gamma
// against the Gram polynomial at (x, sqrt(g_1(x)), ...). inst is the
// original inequality-constrained instance; cert lives over the lifted
// variables.
CoincidenceResult lifted_coincidence_check(
    const ProblemInstance& inst, const Certificate& cert,
    const std::vector<std::vector<double>>& samples, double feas_tol = 1e-9);

// Quasi-random (Halton) points in the box [-span, span]^n rejected
// against membership in K = {g_j >= 0}.
std::vector<std::vector<double>> sample_points_in_set(const ProblemInstance& inst,
                                                      std::size_t count = 16,
                                                      double span = 2.0);

// Comparison with a Putinar-style decomposition f + eps*theta_r =
// q0 + sum_j q_j g_j (all q_j SOS): given that premise, the lifted Gram
// polynomial splits into an x-part and a slack part. Both identities are
// checked coefficient-exactly and the worst mismatch of each reported.
struct PutinarForm {
    Polynomial q0;
    std::vector<Polynomial> multipliers;  // q_j, one per inequality
};

struct PutinarSplitResult {
    double premise_residual = 0.0;   // q0 + sum q_j g_j - (f + eps*theta)
    double split_residual = 0.0;     // q1 + q2 - (f_eps_lifted + sum lambda G_j^2)
};

PutinarSplitResult check_putinar_split(const ProblemInstance& inst,
                                       const Certificate& cert,
                                       const PutinarForm& putinar);

// Multistart Nelder-Mead probe search (heuristic, no guarantee): minimizes
// f plus a quadratic penalty on constraint violation, restarting from
// quasi-random points in [-5, 5]^n.
std::optional<std::vector<double>> find_probe_point(const ProblemInstance& inst,
                                                    int restarts = 20,
                                                    unsigned seed = 0,
                                                    double feas_tol = 1e-6);

// Lossless JSON round-trip (stable key order, full double precision).
std::string certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);
void write_certificate(const Certificate& cert, const std::string& path);
Certificate read_certificate(const std::string& path);

}  // namespace polycert::cert
