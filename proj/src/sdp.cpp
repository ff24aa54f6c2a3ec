#include "polycert/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "polycert/kernels.hpp"

namespace polycert::sdp {

namespace k = polycert::kernels;
using linalg::EigResult;

std::size_t SdpProblem::total_dim() const {
    std::size_t d = 0;
    for (const auto& b : blocks) d += static_cast<std::size_t>(b.size);
    return d;
}

void SdpProblem::validate() const {
    if (static_cast<int>(objective.size()) != num_vars)
        throw std::invalid_argument("sdp: objective size mismatch");
    if (static_cast<int>(mats.size()) != num_vars + 1)
        throw std::invalid_argument("sdp: matrix list size mismatch");
    for (const auto& list : mats) {
        for (const auto& e : list) {
            if (e.block < 0 || e.block >= static_cast<int>(blocks.size()))
                throw std::invalid_argument("sdp: entry block out of range");
            const auto& b = blocks[e.block];
            if (e.row > e.col || e.row < 0 || e.col >= b.size)
                throw std::invalid_argument("sdp: entry position out of range");
            if (b.diagonal && e.row != e.col)
                throw std::invalid_argument("sdp: off-diagonal entry in diagonal block");
            if (!std::isfinite(e.value))
                throw std::invalid_argument("sdp: non-finite entry");
        }
    }
}

SdpProblem to_standard_form(const Relaxation& relax) {
    const auto& idx = *relax.moment_index;
    SdpProblem prob;
    prob.basis_2r = relax.basis_2r;
    prob.num_vars = static_cast<int>(relax.basis_2r->size()) - 1;
    prob.objective_offset = relax.objective_vector[0];
    prob.objective.assign(relax.objective_vector.begin() + 1,
                          relax.objective_vector.end());
    prob.mats.resize(prob.num_vars + 1);

    prob.moment_block = 0;
    prob.blocks.push_back({static_cast<int>(idx.rows), false});
    for (std::size_t i = 0; i < idx.rows; ++i) {
        for (std::size_t j = i; j < idx.rows; ++j) {
            const std::size_t pos = idx.entry_index(i, j);
            auto& list = prob.mats[pos];  // pos 0 is y0, which lands in F_off
            list.push_back({0, static_cast<int>(i), static_cast<int>(j), 1.0});
        }
    }

    const int m = static_cast<int>(relax.constraint_rows.size());
    if (m > 0) {
        prob.slack_block = 1;
        prob.blocks.push_back({m, true});
        prob.slack_row_scale.resize(m);
        for (int j = 0; j < m; ++j) {
            const auto& row = relax.constraint_rows[j];
            double scale = 1.0;
            for (double v : row) scale = std::max(scale, std::abs(v));
            prob.slack_row_scale[j] = scale;
            for (std::size_t b = 0; b < row.size(); ++b) {
                if (row[b] == 0.0) continue;
                prob.mats[b].push_back({1, j, j, -row[b] / scale});
            }
        }
    }
    prob.validate();
    return prob;
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::MaxIterations: return "MaxIterations";
        case SolveStatus::NumericalFailure: return "NumericalFailure";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

namespace {

// one PSD block of the iterate, dense or diagonal
struct Blk {
    bool diagonal = false;
    Matrix m;
    std::vector<double> d;

    static Blk make(const SdpProblem::BlockSpec& spec) {
        Blk b;
        b.diagonal = spec.diagonal;
        if (spec.diagonal)
            b.d.assign(spec.size, 0.0);
        else
            b.m = Matrix(spec.size);
        return b;
    }
    void set_identity(double tau) {
        if (diagonal) {
            std::fill(d.begin(), d.end(), tau);
        } else {
            m = Matrix(m.rows());
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) = tau;
        }
    }
    void zero() {
        if (diagonal)
            std::fill(d.begin(), d.end(), 0.0);
        else
            m = Matrix(m.rows());
    }
};

using Blocks = std::vector<Blk>;

Blocks make_blocks(const SdpProblem& prob) {
    Blocks bs;
    bs.reserve(prob.blocks.size());
    for (const auto& spec : prob.blocks) bs.push_back(Blk::make(spec));
    return bs;
}

void add_entries(Blocks& dst, const std::vector<SdpProblem::Entry>& entries,
                 double scale) {
    for (const auto& e : entries) {
        Blk& b = dst[e.block];
        if (b.diagonal) {
            b.d[e.row] += scale * e.value;
        } else {
            b.m(e.row, e.col) += scale * e.value;
            if (e.row != e.col) b.m(e.col, e.row) += scale * e.value;
        }
    }
}

double inner_entries(const std::vector<SdpProblem::Entry>& entries,
                     const Blocks& blocks) {
    double s = 0.0;
    for (const auto& e : entries) {
        const Blk& b = blocks[e.block];
        if (b.diagonal)
            s += e.value * b.d[e.row];
        else
            s += e.value * (e.row == e.col ? b.m(e.row, e.col)
                                           : 2.0 * b.m(e.row, e.col));
    }
    return s;
}

double inner_entries_dense(const std::vector<SdpProblem::Entry>& entries,
                           const Blocks& blocks) {
    double s = 0.0;
    for (const auto& e : entries) {
        const Blk& b = blocks[e.block];
        if (b.diagonal) continue;
        s += e.value * (e.row == e.col ? b.m(e.row, e.col)
                                       : 2.0 * b.m(e.row, e.col));
    }
    return s;
}

double inner_blocks(const Blocks& a, const Blocks& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].diagonal)
            s += k::dot(a[i].d.data(), b[i].d.data(), a[i].d.size());
        else
            s += linalg::frob_inner(a[i].m, b[i].m);
    }
    return s;
}

void blocks_axpy(Blocks& y, double alpha, const Blocks& x) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i].diagonal)
            k::axpy(alpha, x[i].d.data(), y[i].d.data(), y[i].d.size());
        else
            linalg::add_scaled(y[i].m, alpha, x[i].m);
    }
}

double blocks_norm(const Blocks& a) {
    return std::sqrt(std::max(0.0, inner_blocks(a, a)));
}

bool blocks_finite(const Blocks& a) {
    for (const auto& b : a) {
        if (b.diagonal) {
            for (double v : b.d)
                if (!std::isfinite(v)) return false;
        } else {
            for (std::size_t i = 0; i < b.m.rows() * b.m.cols(); ++i)
                if (!std::isfinite(b.m.data()[i])) return false;
        }
    }
    return true;
}

void symmetrize(Blocks& a) {
    for (auto& b : a) {
        if (b.diagonal) continue;
        for (std::size_t i = 0; i < b.m.rows(); ++i)
            for (std::size_t j = i + 1; j < b.m.cols(); ++j) {
                const double v = 0.5 * (b.m(i, j) + b.m(j, i));
                b.m(i, j) = v;
                b.m(j, i) = v;
            }
    }
}

// largest step alpha with X + alpha*dX staying PSD (INF when unconstrained)
double max_step(const Blk& x, const Blk& dx, double reg) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    if (x.diagonal) {
        double alpha = kInf;
        for (std::size_t i = 0; i < x.d.size(); ++i) {
            if (dx.d[i] < 0.0) alpha = std::min(alpha, -x.d[i] / dx.d[i]);
        }
        return alpha;
    }
    Matrix l = x.m;
    if (!linalg::cholesky_inplace(l, reg)) return 0.0;
    Matrix y = linalg::forward_solve_matrix(l, dx.m);
    Matrix b = linalg::forward_solve_matrix(l, linalg::transpose(y));
    const double lam = linalg::min_eigenvalue(linalg::sym_part(b));
    if (lam >= -1e-14) return kInf;
    return -1.0 / lam;
}

struct Scaling {
    // dense: G = W^{-1}; diagonal stored as vectors
    std::vector<Matrix> g;
    std::vector<std::vector<double>> g_diag;
    // Z^{-1}
    std::vector<Matrix> zinv;
    std::vector<std::vector<double>> zinv_diag;
    bool ok = false;
};

Scaling compute_scaling(const Blocks& s, const Blocks& z, double reg) {
    Scaling sc;
    sc.g.resize(s.size());
    sc.g_diag.resize(s.size());
    sc.zinv.resize(s.size());
    sc.zinv_diag.resize(s.size());
    for (std::size_t bi = 0; bi < s.size(); ++bi) {
        if (s[bi].diagonal) {
            const auto& sd = s[bi].d;
            const auto& zd = z[bi].d;
            auto& g = sc.g_diag[bi];
            auto& zi = sc.zinv_diag[bi];
            g.resize(sd.size());
            zi.resize(sd.size());
            for (std::size_t i = 0; i < sd.size(); ++i) {
                if (!(sd[i] > 0.0) || !(zd[i] > 0.0)) return sc;
                g[i] = std::sqrt(zd[i] / sd[i]);  // W^{-1} = sqrt(z/s)
                zi[i] = 1.0 / zd[i];
            }
            continue;
        }
        Matrix l = s[bi].m;
        if (!linalg::cholesky_inplace(l, reg)) return sc;
        // T = L^T Z L, symmetric positive definite up to roundoff; clamp
        // eigenvalues at a floor instead of failing at the cone boundary
        Matrix t = linalg::mul(linalg::transpose(l), linalg::mul(z[bi].m, l));
        t = linalg::sym_part(t);
        const EigResult eig = linalg::jacobi_eigh(t);
        const double emax = std::max(1e-300, eig.values.back());
        const double floor = 1e-14 * std::max(1.0, emax);
        std::vector<double> sqrt_d(eig.values.size());
        for (std::size_t i = 0; i < eig.values.size(); ++i) {
            if (!std::isfinite(eig.values[i])) return sc;
            sqrt_d[i] = std::sqrt(std::max(eig.values[i], floor));
        }
        const Matrix ehalf = linalg::eig_reconstruct(eig, sqrt_d);
        const Matrix linv = linalg::lower_inverse(l);
        // G = W^{-1} = L^{-T} * T^{1/2} * L^{-1}
        sc.g[bi] = linalg::sym_part(
            linalg::mul(linalg::transpose(linv), linalg::mul(ehalf, linv)));

        Matrix lz = z[bi].m;
        if (!linalg::cholesky_inplace(lz, reg)) return sc;
        const Matrix lzinv = linalg::lower_inverse(lz);
        sc.zinv[bi] = linalg::sym_part(
            linalg::mul(linalg::transpose(lzinv), lzinv));
    }
    sc.ok = true;
    return sc;
}

// Newton normal equations in augmented form. Condensing the diagonal
// slack rows into the Schur complement multiplies them by z_j/s_j, which
// blows up whenever a multiplier diverges; keeping them as a bordered
// quasidefinite block stays well-conditioned:
//
//   [ M   B  ] [ dy ]   [ rhs_top    ]     M: dense-block Schur part
//   [ B^T -D ] [ dnu] = [ rhs_bottom ]     D: diag(s_j / z_j)
//
struct KktSystem {
    int n = 0;  // free variables
    int m = 0;  // slack rows
    Matrix mat;  // full (n+m) KKT matrix, kept for residual refinement
    Matrix fac;  // unit lower-triangular LDL^T factor
    std::vector<double> dvec;

    bool factor(double reg_abs, double reg_rel) {
        const int t = n + m;
        fac = mat;
        dvec.assign(t, 0.0);
        // quasidefinite regularization: +shift on the PD part, -shift on -D
        double dmax = 1.0;
        for (int i = 0; i < t; ++i) dmax = std::max(dmax, std::abs(mat(i, i)));
        const double shift = reg_abs + reg_rel * dmax;
        for (int i = 0; i < t; ++i) fac(i, i) += (i < n) ? shift : -shift;
        std::vector<double> scaled(t);  // L(i,k) * d_k for the current row
        for (int i = 0; i < t; ++i) {
            for (int j = 0; j < i; ++j) {
                const double v =
                    (fac(i, j) - k::dot(scaled.data(), fac.row(j), j)) / dvec[j];
                fac(i, j) = v;
                scaled[j] = v * dvec[j];
            }
            const double d = fac(i, i) - k::dot(scaled.data(), fac.row(i), i);
            if (!std::isfinite(d) || d == 0.0) return false;
            if (i < n && d < 0.0) return false;
            if (i >= n && d > 0.0) return false;
            dvec[i] = d;
            fac(i, i) = 1.0;
        }
        return true;
    }

    void solve_inplace(double* x) const {
        const int t = n + m;
        for (int i = 0; i < t; ++i) x[i] -= k::dot(fac.row(i), x, i);
        for (int i = 0; i < t; ++i) x[i] /= dvec[i];
        for (int i = t; i-- > 0;) k::axpy(-x[i], fac.row(i), x, i);
    }

    // solve with two rounds of iterative refinement
    void solve(std::vector<double>& x) const {
        const int t = n + m;
        const std::vector<double> rhs = x;
        solve_inplace(x.data());
        std::vector<double> resid(t);
        for (int round = 0; round < 2; ++round) {
            for (int i = 0; i < t; ++i)
                resid[i] = rhs[i] - k::dot(mat.row(i), x.data(), t);
            solve_inplace(resid.data());
            k::axpy(1.0, resid.data(), x.data(), t);
        }
    }
};

// H = G * V * G per block
Blocks sandwich(const Scaling& sc, const Blocks& v) {
    Blocks out = v;
    for (std::size_t bi = 0; bi < v.size(); ++bi) {
        if (v[bi].diagonal) {
            const auto& g = sc.g_diag[bi];
            for (std::size_t i = 0; i < g.size(); ++i)
                out[bi].d[i] = g[i] * g[i] * v[bi].d[i];
        } else {
            out[bi].m = linalg::sym_part(
                linalg::mul(sc.g[bi], linalg::mul(v[bi].m, sc.g[bi])));
        }
    }
    return out;
}

class Solver {
public:
    Solver(const SdpProblem& prob, const SolveOptions& opts)
        : prob_(prob), opts_(opts) {}

    SdpSolution run() {
        prob_.validate();
        SdpSolution sol;
        sol.options_used = opts_;
        const int n = prob_.num_vars;

        if (n == 0) return solve_trivial(sol);

        y_.assign(n, 0.0);
        build_slack_layout();
        s_ = make_blocks(prob_);
        z_ = make_blocks(prob_);
        double tau = 1.0;
        for (double c : prob_.objective) tau = std::max(tau, 1.0 + std::abs(c));
        for (auto& b : s_) b.set_identity(tau);
        for (auto& b : z_) b.set_identity(tau);

        const double dim = static_cast<double>(prob_.total_dim());
        const double off_norm = blocks_norm(offset_blocks());
        double cnorm = 0.0;
        for (double c : prob_.objective) cnorm += c * c;
        cnorm = std::sqrt(cnorm);

        int stalled = 0;
        int since_best = 0;
        for (int iter = 0; iter < opts_.max_iter; ++iter) {
            sol.iterations = iter;
            // residuals
            Blocks rp = assemble(y_);           // S(y)
            blocks_axpy(rp, -1.0, s_);          // R_p = S(y) - S
            std::vector<double> rd(n);
            for (int kv = 0; kv < n; ++kv)
                rd[kv] = prob_.objective[kv] - inner_entries(prob_.mats[kv + 1], z_);

            const double p_std = k::dot(prob_.objective.data(), y_.data(), n);
            const double d_std = -inner_entries(prob_.mats[0], z_);
            const double p_rep = p_std + prob_.objective_offset;
            const double d_rep = d_std + prob_.objective_offset;
            const double mu = inner_blocks(s_, z_) / dim;
            const double pres = blocks_norm(rp) / (1.0 + off_norm);
            double dres = 0.0;
            for (double v : rd) dres += v * v;
            dres = std::sqrt(dres) / (1.0 + cnorm);
            const double rel_gap =
                (p_rep - d_rep) / (1.0 + std::abs(p_rep) + std::abs(d_rep));

            sol.trace.push_back({iter, mu, p_rep, d_rep, pres, dres, 0.0, 0.0});
            if (iter == 0) {
                p_initial_ = p_rep;
                d_initial_ = d_rep;
            }
            last_p_ = p_rep;
            last_d_ = d_rep;
            last_pres_ = pres;
            last_dres_ = dres;
            if (opts_.verbosity > 0) {
                std::fprintf(stderr,
                             "iter %3d  mu %9.2e  p %+.9e  d %+.9e  pres %8.2e  "
                             "dres %8.2e\n",
                             iter, mu, p_rep, d_rep, pres, dres);
            }

            if (!std::isfinite(mu) || !blocks_finite(s_) || !blocks_finite(z_)) {
                if (opts_.verbosity > 0) std::fprintf(stderr, "breakdown: non-finite iterate\n");
                restore_best();
                return finish(sol, SolveStatus::NumericalFailure);
            }
            // the direction quality eventually degrades on problems whose
            // dual optimum is not attained; keep the best iterate seen
            const double merit =
                std::max({std::abs(rel_gap), pres, dres});
            if (!have_best_ || merit < best_merit_) {
                best_merit_ = merit;
                best_y_ = y_;
                best_s_ = s_;
                best_z_ = z_;
                have_best_ = true;
                since_best = 0;
                p_at_best_ = p_rep;
            } else if (p_rep < p_at_best_ - 0.01 * (1.0 + std::abs(p_at_best_))) {
                // objective still falling: an unbounded run in progress
                since_best = 0;
                p_at_best_ = p_rep;
            } else if (++since_best > 20) {
                if (primal_ray_detected() || diverged_unbounded())
                    return finish(sol, SolveStatus::Unbounded);
                if (diverged_infeasible())
                    return finish(sol, SolveStatus::Infeasible);
                restore_best();
                return finish(sol, SolveStatus::MaxIterations);
            }
            if (std::abs(rel_gap) <= opts_.gap_tol && pres <= opts_.primal_tol() &&
                dres <= opts_.dual_tol()) {
                return finish(sol, SolveStatus::Optimal);
            }
            if (p_rep < -1e12) return finish(sol, SolveStatus::Unbounded);
            if (d_rep > 1e12) return finish(sol, SolveStatus::Infeasible);

            // NT scaling and the augmented Newton system
            const Scaling sc = compute_scaling(s_, z_, opts_.cholesky_reg);
            if (!sc.ok) {
                if (opts_.verbosity > 0) std::fprintf(stderr, "breakdown: cone scaling\n");
                restore_best();
                return finish(sol, SolveStatus::NumericalFailure);
            }
            KktSystem kkt = build_kkt(sc);
            // static regularization first, then relative escalation as a
            // last resort (heavier shifts cost direction accuracy)
            bool factored = kkt.factor(opts_.cholesky_reg, 0.0);
            for (double rel = 1e-14; !factored && rel <= 1e-8; rel *= 1000.0) {
                factored = kkt.factor(opts_.cholesky_reg, rel);
                if (factored && opts_.verbosity > 0)
                    std::fprintf(stderr, "          kkt reg escalated to %g rel\n", rel);
            }
            if (!factored) {
                if (opts_.verbosity > 0) std::fprintf(stderr, "breakdown: kkt factorization\n");
                restore_best();
                return finish(sol, SolveStatus::NumericalFailure);
            }

            // predictor (affine direction, sigma = 0)
            Blocks rc = s_;
            for (auto& b : rc) {
                if (b.diagonal)
                    k::scal(-1.0, b.d.data(), b.d.size());
                else
                    k::scal(-1.0, b.m.data(), b.m.rows() * b.m.cols());
            }
            std::vector<double> dy_a;
            Blocks ds_a, dz_a;
            solve_direction(sc, kkt, rp, rd, rc, dy_a, ds_a, dz_a);

            const double ap_a = std::min(1.0, max_step_all(s_, ds_a));
            const double ad_a = std::min(1.0, max_step_all(z_, dz_a));
            Blocks s_try = s_;
            blocks_axpy(s_try, ap_a, ds_a);
            Blocks z_try = z_;
            blocks_axpy(z_try, ad_a, dz_a);
            const double gap_aff = inner_blocks(s_try, z_try);
            const double gap_now = mu * dim;
            double sigma = std::pow(std::max(gap_aff, 0.0) / gap_now, 3.0);
            sigma = std::clamp(sigma, 1e-10, 1.0);

            // corrector: sigma*mu*Z^{-1} - S - sym(dS_a dZ_a Z^{-1})
            rc = corrector_rhs(sc, sigma * mu, ds_a, dz_a);
            std::vector<double> dy;
            Blocks ds, dz;
            solve_direction(sc, kkt, rp, rd, rc, dy, ds, dz);

            double ap = std::min(1.0, opts_.step_fraction * max_step_all(s_, ds));
            double ad = std::min(1.0, opts_.step_fraction * max_step_all(z_, dz));

            // the second-order term is unreliable when the affine direction
            // is blocked; fall back to a plain centering direction
            if (std::min(ap, ad) < 0.05) {
                sigma = std::max(sigma, 0.8);
                rc = centering_rhs(sc, sigma * mu);
                solve_direction(sc, kkt, rp, rd, rc, dy, ds, dz);
                ap = std::min(1.0, opts_.step_fraction * max_step_all(s_, ds));
                ad = std::min(1.0, opts_.step_fraction * max_step_all(z_, dz));
            }
            sol.trace.back().step_primal = ap;
            sol.trace.back().step_dual = ad;
            if (opts_.verbosity > 0) {
                std::fprintf(stderr, "          sigma %8.2e  ap %8.2e  ad %8.2e\n",
                             sigma, ap, ad);
            }

            k::axpy(ap, dy.data(), y_.data(), n);
            blocks_axpy(s_, ap, ds);
            blocks_axpy(z_, ad, dz);
            symmetrize(s_);
            symmetrize(z_);

            last_affine_dy_ = dy_a;
            if (std::max(ap, ad) < 1e-8) {
                if (++stalled >= 3) {
                    if (primal_ray_detected() || diverged_unbounded())
                        return finish(sol, SolveStatus::Unbounded);
                    if (diverged_infeasible())
                        return finish(sol, SolveStatus::Infeasible);
                    restore_best();
                    return finish(sol, SolveStatus::MaxIterations);
                }
            } else {
                stalled = 0;
            }
        }
        sol.iterations = opts_.max_iter;
        if (primal_ray_detected() || diverged_unbounded())
            return finish(sol, SolveStatus::Unbounded);
        if (diverged_infeasible()) return finish(sol, SolveStatus::Infeasible);
        restore_best();
        return finish(sol, SolveStatus::MaxIterations);
    }

private:
    SdpSolution solve_trivial(SdpSolution& sol) {
        // no free variables: feasibility of the offset decides everything
        Blocks off = offset_blocks();
        double mineig = 0.0;
        for (const auto& b : off) {
            if (b.diagonal) {
                for (double v : b.d) mineig = std::min(mineig, v);
            } else if (b.m.rows() > 0) {
                mineig = std::min(mineig, linalg::min_eigenvalue(b.m));
            }
        }
        s_ = off;
        z_ = make_blocks(prob_);
        for (auto& b : z_) b.zero();
        sol.iterations = 0;
        return finish(sol, mineig >= -1e-12 ? SolveStatus::Optimal
                                            : SolveStatus::Infeasible);
    }

    Blocks offset_blocks() const {
        Blocks off = make_blocks(prob_);
        add_entries(off, prob_.mats[0], 1.0);
        return off;
    }

    Blocks assemble(const std::vector<double>& y) const {
        Blocks out = offset_blocks();
        for (int kv = 0; kv < prob_.num_vars; ++kv)
            add_entries(out, prob_.mats[kv + 1], y[kv]);
        return out;
    }

    double max_step_all(const Blocks& x, const Blocks& dx) const {
        double alpha = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.size(); ++i)
            alpha = std::min(alpha, max_step(x[i], dx[i], opts_.cholesky_reg));
        return alpha;
    }

    // Schur part over the dense blocks only; diagonal slack rows are kept
    // in the augmented KKT border.
    Matrix build_schur(const Scaling& sc) {
        const int n = prob_.num_vars;
        Matrix m(n);
        for (std::size_t bi = 0; bi < prob_.blocks.size(); ++bi) {
            if (prob_.blocks[bi].diagonal) continue;
            const Matrix& g = sc.g[bi];
            const std::size_t bs = g.rows();
            // T_k = G F_k G for every variable with entries in this block
            std::vector<Matrix> t(n);
            for (int kv = 0; kv < n; ++kv) {
                Matrix tk(bs);
                bool any = false;
                for (const auto& e : prob_.mats[kv + 1]) {
                    if (e.block != static_cast<int>(bi)) continue;
                    any = true;
                    if (e.row == e.col) {
                        k::ger(tk.data(), e.value, g.row(e.row), g.row(e.row), bs);
                    } else {
                        k::ger(tk.data(), e.value, g.row(e.row), g.row(e.col), bs);
                        k::ger(tk.data(), e.value, g.row(e.col), g.row(e.row), bs);
                    }
                }
                if (any) t[kv] = std::move(tk);
            }
            for (int j = 0; j < n; ++j) {
                for (int kv = j; kv < n; ++kv) {
                    if (t[kv].rows() == 0) continue;
                    double acc = 0.0;
                    for (const auto& e : prob_.mats[j + 1]) {
                        if (e.block != static_cast<int>(bi)) continue;
                        acc += e.value * (e.row == e.col
                                              ? t[kv](e.row, e.col)
                                              : t[kv](e.row, e.col) + t[kv](e.col, e.row));
                    }
                    m(j, kv) += acc;
                }
            }
        }
        for (int j = 0; j < n; ++j)
            for (int kv = 0; kv < j; ++kv) m(j, kv) = m(kv, j);
        return m;
    }

    // global layout of the diagonal slack rows: (block, row) per index
    void build_slack_layout() {
        for (std::size_t bi = 0; bi < prob_.blocks.size(); ++bi) {
            if (!prob_.blocks[bi].diagonal) continue;
            for (int row = 0; row < prob_.blocks[bi].size; ++row)
                slack_rows_.push_back({static_cast<int>(bi), row});
        }
        slack_cols_.resize(prob_.num_vars);
        for (int kv = 0; kv < prob_.num_vars; ++kv) {
            for (const auto& e : prob_.mats[kv + 1]) {
                if (!prob_.blocks[e.block].diagonal) continue;
                for (std::size_t g = 0; g < slack_rows_.size(); ++g) {
                    if (slack_rows_[g].first == e.block &&
                        slack_rows_[g].second == e.row) {
                        slack_cols_[kv].push_back({g, e.value});
                        break;
                    }
                }
            }
        }
    }

    KktSystem build_kkt(const Scaling& sc) {
        KktSystem kkt;
        kkt.n = prob_.num_vars;
        kkt.m = static_cast<int>(slack_rows_.size());
        const int t = kkt.n + kkt.m;
        kkt.mat = Matrix(t);
        const Matrix schur = build_schur(sc);
        for (int i = 0; i < kkt.n; ++i)
            for (int j = 0; j < kkt.n; ++j) kkt.mat(i, j) = schur(i, j);
        for (int kv = 0; kv < kkt.n; ++kv) {
            for (const auto& [g, v] : slack_cols_[kv]) {
                kkt.mat(kv, kkt.n + g) = v;
                kkt.mat(kkt.n + g, kv) = v;
            }
        }
        for (int g = 0; g < kkt.m; ++g) {
            const auto& [bi, row] = slack_rows_[g];
            // -D = -s_j/z_j; exactly zero slack cannot occur off the boundary
            kkt.mat(kkt.n + g, kkt.n + g) = -s_[bi].d[row] / z_[bi].d[row];
        }
        return kkt;
    }

    Blocks centering_rhs(const Scaling& sc, double sigma_mu) {
        Blocks rc = make_blocks(prob_);
        for (std::size_t bi = 0; bi < rc.size(); ++bi) {
            if (rc[bi].diagonal) {
                const auto& zi = sc.zinv_diag[bi];
                for (std::size_t i = 0; i < zi.size(); ++i)
                    rc[bi].d[i] = sigma_mu * zi[i] - s_[bi].d[i];
            } else {
                Matrix r = sc.zinv[bi];
                k::scal(sigma_mu, r.data(), r.rows() * r.cols());
                linalg::add_scaled(r, -1.0, s_[bi].m);
                rc[bi].m = std::move(r);
            }
        }
        return rc;
    }

    Blocks corrector_rhs(const Scaling& sc, double sigma_mu, const Blocks& ds_a,
                         const Blocks& dz_a) {
        Blocks rc = make_blocks(prob_);
        for (std::size_t bi = 0; bi < rc.size(); ++bi) {
            if (rc[bi].diagonal) {
                const auto& zi = sc.zinv_diag[bi];
                for (std::size_t i = 0; i < zi.size(); ++i) {
                    rc[bi].d[i] = sigma_mu * zi[i] - s_[bi].d[i] -
                                  ds_a[bi].d[i] * dz_a[bi].d[i] * zi[i];
                }
            } else {
                const Matrix corr = linalg::sym_part(linalg::mul(
                    ds_a[bi].m, linalg::mul(dz_a[bi].m, sc.zinv[bi])));
                Matrix r = sc.zinv[bi];
                k::scal(sigma_mu, r.data(), r.rows() * r.cols());
                linalg::add_scaled(r, -1.0, s_[bi].m);
                linalg::add_scaled(r, -1.0, corr);
                rc[bi].m = std::move(r);
            }
        }
        return rc;
    }

    void solve_direction(const Scaling& sc, const KktSystem& kkt, const Blocks& rp,
                         const std::vector<double>& rd, const Blocks& rc,
                         std::vector<double>& dy, Blocks& ds, Blocks& dz) {
        const int n = prob_.num_vars;
        Blocks v = rc;
        blocks_axpy(v, -1.0, rp);
        const Blocks h_mat = sandwich(sc, v);
        // top: <F_k, G (Rc - Rp) G> over dense blocks minus the dual
        // residual; bottom: (Rc - Rp) on the raw slack rows
        std::vector<double> x(n + kkt.m);
        for (int kv = 0; kv < n; ++kv)
            x[kv] = inner_entries_dense(prob_.mats[kv + 1], h_mat) - rd[kv];
        for (int g = 0; g < kkt.m; ++g) {
            const auto& [bi, row] = slack_rows_[g];
            x[n + g] = v[bi].d[row];
        }
        kkt.solve(x);
        dy.assign(x.begin(), x.begin() + n);

        // dS = Rp + sum dy_k F_k
        ds = rp;
        for (int kv = 0; kv < n; ++kv)
            add_entries(ds, prob_.mats[kv + 1], dy[kv]);
        // dZ = G (Rc - dS) G on dense blocks; on the slack rows the border
        // variable of the KKT system is the dual step itself (negated),
        // which avoids multiplying roundoff by z_j/s_j
        Blocks w = rc;
        blocks_axpy(w, -1.0, ds);
        dz = sandwich(sc, w);
        for (int g = 0; g < kkt.m; ++g) {
            const auto& [bi, row] = slack_rows_[g];
            dz[bi].d[row] = -x[n + g];
        }
    }

    SdpSolution finish(SdpSolution& sol, SolveStatus status) {
        sol.status = status;
        const int n = prob_.num_vars;
        sol.y_free = y_;
        const double p_std = n > 0 ? k::dot(prob_.objective.data(), y_.data(), n) : 0.0;
        const double d_std = z_.empty() ? 0.0 : -inner_entries(prob_.mats[0], z_);
        sol.objective_primal = p_std + prob_.objective_offset;
        sol.objective_dual = d_std + prob_.objective_offset;
        sol.gap = sol.objective_primal - sol.objective_dual;

        if (n > 0) {
            Blocks rp = assemble(y_);
            blocks_axpy(rp, -1.0, s_);
            sol.primal_residual = blocks_norm(rp) / (1.0 + blocks_norm(offset_blocks()));
            double dres = 0.0;
            for (int kv = 0; kv < n; ++kv) {
                const double v =
                    prob_.objective[kv] - inner_entries(prob_.mats[kv + 1], z_);
                dres += v * v;
            }
            double cnorm = 0.0;
            for (double c : prob_.objective) cnorm += c * c;
            sol.dual_residual = std::sqrt(dres) / (1.0 + std::sqrt(cnorm));
        }

        // moment-problem back-map
        if (prob_.basis_2r) {
            sol.y.basis = prob_.basis_2r;
            sol.y.values.resize(prob_.basis_2r->size());
            sol.y.values[0] = 1.0;
            for (int kv = 0; kv < n; ++kv) sol.y.values[kv + 1] = y_[kv];
        }
        sol.gamma = sol.objective_dual;
        if (prob_.moment_block >= 0 && !z_.empty()) {
            sol.gram = z_[prob_.moment_block].m;
        }
        if (prob_.slack_block >= 0 && !z_.empty()) {
            const auto& d = z_[prob_.slack_block].d;
            sol.lambda.resize(d.size());
            for (std::size_t j = 0; j < d.size(); ++j)
                sol.lambda[j] = d[j] / prob_.slack_row_scale[j];
        }
        return sol;
    }

    void restore_best() {
        if (!have_best_) return;
        y_ = best_y_;
        s_ = best_s_;
        z_ = best_z_;
    }

    // Divergence classification for runs that stall without converging.
    // The objective can be unbounded along curved paths that admit no
    // improving ray, so the trajectory itself is the evidence: a primal
    // iterate that stayed feasible while the objective fell far below its
    // start, with the dual residual stuck at a floor (no dual feasible
    // point exists), is called Unbounded; the mirror image is Infeasible.
    bool diverged_unbounded() const {
        return last_pres_ <= std::max(1e-6, 10.0 * opts_.feas_tol) &&
               last_dres_ >= 1e3 * std::max(opts_.feas_tol, 1e-9) &&
               last_p_ <= p_initial_ - 10.0 * (1.0 + std::abs(p_initial_));
    }
    bool diverged_infeasible() const {
        return last_dres_ <= std::max(1e-6, 10.0 * opts_.feas_tol) &&
               last_pres_ >= 1e3 * std::max(opts_.feas_tol, 1e-9) &&
               last_d_ >= d_initial_ + 10.0 * (1.0 + std::abs(d_initial_));
    }

    // An improving ray certifies an unbounded objective: a direction dy
    // with sum_k dy_k F_k PSD and c . dy < 0 keeps every iterate feasible
    // while driving the objective to -infinity.
    bool primal_ray_detected() {
        if (last_affine_dy_.empty()) return false;
        double norm = 0.0;
        for (double v : last_affine_dy_) norm += v * v;
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm)) return false;
        const double descent =
            k::dot(prob_.objective.data(), last_affine_dy_.data(), prob_.num_vars);
        if (descent >= -1e-8 * norm) return false;
        Blocks ray = make_blocks(prob_);
        for (int kv = 0; kv < prob_.num_vars; ++kv)
            add_entries(ray, prob_.mats[kv + 1], last_affine_dy_[kv] / norm);
        for (const auto& b : ray) {
            if (b.diagonal) {
                for (double v : b.d)
                    if (v < -1e-7) return false;
            } else if (b.m.rows() > 0) {
                if (linalg::min_eigenvalue(b.m) < -1e-7) return false;
            }
        }
        return true;
    }

    SdpProblem prob_;
    SolveOptions opts_;
    std::vector<double> y_;
    Blocks s_, z_;
    std::vector<std::pair<int, int>> slack_rows_;
    std::vector<std::vector<std::pair<std::size_t, double>>> slack_cols_;
    bool have_best_ = false;
    double best_merit_ = 0.0;
    double p_at_best_ = 0.0;
    double p_initial_ = 0.0, d_initial_ = 0.0;
    double last_p_ = 0.0, last_d_ = 0.0, last_pres_ = 0.0, last_dres_ = 0.0;
    std::vector<double> best_y_;
    Blocks best_s_, best_z_;
    std::vector<double> last_affine_dy_;
};

}  // namespace

SdpSolution solve(const SdpProblem& prob, const SolveOptions& opts) {
    Solver solver(prob, opts);
    return solver.run();
}

SdpSolution solve_with_restarts(const SdpProblem& prob, const SolveOptions& opts) {
    // normalize very large objectives; the dual rescales linearly
    double cmax = 0.0;
    for (double c : prob.objective) cmax = std::max(cmax, std::abs(c));
    double scale = 1.0;
    const SdpProblem* target = &prob;
    SdpProblem scaled;
    if (cmax > 1e6) {
        scale = cmax;
        scaled = prob;
        for (double& c : scaled.objective) c /= scale;
        scaled.objective_offset /= scale;
        target = &scaled;
    }

    // escalate the static regularization tenfold per attempt; keep the
    // best attempt (empty-interior duals often need a heavier shift)
    auto rank = [](const SdpSolution& s) {
        switch (s.status) {
            case SolveStatus::Optimal: return 3;
            case SolveStatus::Unbounded:
            case SolveStatus::Infeasible: return 2;
            case SolveStatus::MaxIterations: return 1;
            case SolveStatus::NumericalFailure: return 0;
        }
        return 0;
    };
    SolveOptions attempt_opts = opts;
    SdpSolution best;
    bool have_best = false;
    std::vector<std::string> log;
    std::vector<std::pair<double, std::vector<IterationStat>>> traces;
    int max_iter_attempts = 0;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        SdpSolution sol = solve(*target, attempt_opts);
        std::ostringstream line;
        line << "attempt " << attempt << ": reg " << attempt_opts.cholesky_reg
             << " -> " << to_string(sol.status) << " in " << sol.iterations
             << " iterations";
        log.push_back(line.str());
        traces.push_back({attempt_opts.cholesky_reg, sol.trace});
        if (sol.status == SolveStatus::MaxIterations) ++max_iter_attempts;
        const bool better =
            !have_best || rank(sol) > rank(best) ||
            (rank(sol) == rank(best) && std::abs(sol.gap) < std::abs(best.gap));
        if (better) {
            best = std::move(sol);
            have_best = true;
        }
        if (best.status == SolveStatus::Optimal ||
            best.status == SolveStatus::Unbounded ||
            best.status == SolveStatus::Infeasible)
            break;
        // a heavier shift reliably rescues failed factorizations; for
        // mere stalls one retry is enough to be useful
        if (best.status == SolveStatus::MaxIterations && max_iter_attempts >= 2)
            break;
        attempt_opts.cholesky_reg *= 10.0;
    }
    best.attempt_log = std::move(log);
    best.attempt_traces = std::move(traces);

    if (scale != 1.0) {
        best.objective_primal *= scale;
        best.objective_dual *= scale;
        best.gap *= scale;
        best.gamma *= scale;
        for (double& l : best.lambda) l *= scale;
        for (std::size_t i = 0; i < best.gram.rows() * best.gram.cols(); ++i)
            best.gram.data()[i] *= scale;
    }
    return best;
}

std::string to_sdpa(const SdpProblem& prob) {
    prob.validate();
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << prob.num_vars << "\n";
    out << prob.blocks.size() << "\n";
    for (std::size_t b = 0; b < prob.blocks.size(); ++b) {
        if (b > 0) out << " ";
        out << (prob.blocks[b].diagonal ? -prob.blocks[b].size : prob.blocks[b].size);
    }
    out << "\n";
    for (int kv = 0; kv < prob.num_vars; ++kv) {
        if (kv > 0) out << " ";
        out << fmt(prob.objective[kv]);
    }
    out << "\n";
    // SDPA solves X = sum_i x_i F_i - F0, so F0 = -(our offset)
    for (int kv = 0; kv <= prob.num_vars; ++kv) {
        const double sign = (kv == 0) ? -1.0 : 1.0;
        for (const auto& e : prob.mats[kv]) {
            out << kv << " " << (e.block + 1) << " " << (e.row + 1) << " "
                << (e.col + 1) << " " << fmt(sign * e.value) << "\n";
        }
    }
    return out.str();
}

void write_sdpa(const SdpProblem& prob, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << to_sdpa(prob);
}

}  // namespace polycert::sdp
