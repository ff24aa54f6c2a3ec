#pragma once

#include <memory>
#include <string>
#include <vector>

#include "polycert/linalg.hpp"
#include "polycert/moment.hpp"
#include "polycert/relax.hpp"

// Self-contained dense primal-dual interior-point solver for the block
// SDPs produced by the relaxation builder:
//
//   minimize   c . y
//   subject to F_off + sum_k y_k F_k  PSD  (block diagonal)
//
// The first block carries the moment matrix with y0 = 1 substituted; the
// optional second block is diagonal and carries one slack per constraint
// row -L_y(g_j^2) >= 0.

namespace polycert::sdp {

using linalg::Matrix;
using moment::MomentVector;
using relax::Relaxation;

struct SdpProblem {
    struct BlockSpec {
        int size = 0;
        bool diagonal = false;
    };
    struct Entry {
        int block = 0;
        int row = 0;  // row <= col; the symmetric entry is implied
        int col = 0;
        double value = 0.0;
    };

    int num_vars = 0;
    std::vector<double> objective;       // c, size num_vars
    std::vector<BlockSpec> blocks;
    std::vector<std::vector<Entry>> mats;  // size num_vars+1; mats[0] = F_off
    double objective_offset = 0.0;       // added to reported objectives

    // back-map metadata (moment problems only; -1 when absent)
    int moment_block = -1;
    int slack_block = -1;
    std::vector<double> slack_row_scale;  // per constraint row
    std::shared_ptr<const moment::MonomialBasis> basis_2r;

    std::size_t total_dim() const;
    void validate() const;
};

SdpProblem to_standard_form(const Relaxation& relax);

enum class SolveStatus { Optimal, MaxIterations, NumericalFailure, Unbounded, Infeasible };

const char* to_string(SolveStatus s);

struct SolveOptions {
    double gap_tol = 1e-8;
    double feas_tol = 1e-8;
    // split overrides; negative means "use feas_tol". A tight dual
    // tolerance with a loose gap stops at very clean dual iterates, which
    // is what certificate extraction cares about.
    double feas_tol_primal = -1.0;
    double feas_tol_dual = -1.0;
    int max_iter = 200;
    int verbosity = 0;
    double cholesky_reg = 1e-12;  // static diagonal regularization
    double step_fraction = 0.98;  // fraction-to-boundary

    double primal_tol() const { return feas_tol_primal >= 0 ? feas_tol_primal : feas_tol; }
    double dual_tol() const { return feas_tol_dual >= 0 ? feas_tol_dual : feas_tol; }
};

struct IterationStat {
    int iter;
    double mu;
    double primal_obj, dual_obj;
    double primal_res, dual_res;
    double step_primal, step_dual;
};

struct SdpSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    int iterations = 0;
    double objective_primal = 0.0;  // includes objective_offset
    double objective_dual = 0.0;    // includes objective_offset
    double gap = 0.0;               // objective_primal - objective_dual
    double primal_residual = 0.0;
    double dual_residual = 0.0;

    std::vector<double> y_free;     // solver variables (y0 removed)
    MomentVector y;                 // full moment vector with y0 = 1

    // dual data in the relaxation's terms
    double gamma = 0.0;             // dual objective = lower bound on L_y(f_eps)
    std::vector<double> lambda;     // multipliers, one per constraint row
    Matrix gram;                    // moment-block dual matrix

    SolveOptions options_used;
    std::vector<IterationStat> trace;
    std::vector<std::string> attempt_log;  // filled by solve_with_restarts
    // per restart attempt: regularization used and the iteration trace,
    // kept so callers can decide whether other stopping gates would have
    // fired along these deterministic trajectories
    std::vector<std::pair<double, std::vector<IterationStat>>> attempt_traces;
};

SdpSolution solve(const SdpProblem& prob, const SolveOptions& opts = {});

// Retries after numerical failures with the Cholesky regularization
// increased tenfold, up to three times; large objectives are normalized
// before solving and the solution is rescaled back.
SdpSolution solve_with_restarts(const SdpProblem& prob,
                                const SolveOptions& opts = {});

// Writes the problem in the SDPA sparse format (.dat-s).
std::string to_sdpa(const SdpProblem& prob);
void write_sdpa(const SdpProblem& prob, const std::string& path);

}  // namespace polycert::sdp
