#pragma once

// Primal-dual interior point method for convex quadratic programs
//
//     minimize    1/2 x'Qx + c'x + constant
//     subject to  A x  = b
//                 G x <= h
//                 lower <= x <= upper
//
// Mehrotra predictor-corrector on the reduced KKT system
//     [ Q + G'WG + dI   A' ] [dx]   [r1]
//     [ A              -dI ] [dy] = [r2]
// factored with a sparse LDL' (the matrix is quasi-definite for d > 0) and
// polished with a few steps of iterative refinement. A run that fails to
// converge is followed by a phase-1 LP that separates infeasible programs
// from unbounded or numerically troubled ones.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dlr/errors.hpp"

namespace dlr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

struct ConvexProgram {
    SparseMatrix quadratic;  // n x n, symmetric PSD; objective uses 1/2 x'Qx
    Vector linear;           // n
    double constant = 0.0;
    SparseMatrix eq_matrix;  // p x n
    Vector eq_rhs;           // p
    SparseMatrix ineq_matrix;  // m x n
    Vector ineq_rhs;           // m
    Vector lower;            // n, may hold -inf
    Vector upper;            // n, may hold +inf

    Eigen::Index num_variables() const { return linear.size(); }

    double objective(const Vector& x) const {
        return 0.5 * x.dot(quadratic * x) + linear.dot(x) + constant;
    }

    void validate() const {
        using detail::require;
        const auto n = num_variables();
        require(quadratic.rows() == n && quadratic.cols() == n, "quadratic matrix must be n x n");
        require(eq_matrix.cols() == n && eq_matrix.rows() == eq_rhs.size(), "equality block has inconsistent shape");
        require(ineq_matrix.cols() == n && ineq_matrix.rows() == ineq_rhs.size(),
                "inequality block has inconsistent shape");
        require(lower.size() == n && upper.size() == n, "bounds must have one entry per variable");
        require(linear.allFinite() && eq_rhs.allFinite() && ineq_rhs.allFinite(),
                "program data must be finite");
        for (Eigen::Index i = 0; i < n; ++i)
            require(!(lower[i] > upper[i]) && !std::isnan(lower[i]) && !std::isnan(upper[i]),
                    "variable bounds must satisfy lower <= upper");
        const SparseMatrix diff = SparseMatrix(quadratic.transpose()) - quadratic;
        double asym = 0.0, scale = 0.0;
        for (int k = 0; k < diff.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(diff, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
        for (int k = 0; k < quadratic.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(quadratic, k); it; ++it) {
                require(std::isfinite(it.value()), "quadratic matrix must be finite");
                scale = std::max(scale, std::abs(it.value()));
            }
        require(asym <= 1e-12 * std::max(1.0, scale), "quadratic matrix must be symmetric");
        if (scale > 0.0) {
            SparseMatrix shifted = quadratic;
            for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += 1e-10 * scale;
            Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
            require(ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > -1e-8 * scale,
                    "quadratic matrix must be positive semidefinite");
        }
    }
};

struct Solution {
    SolveStatus status = SolveStatus::numerical_failure;
    Vector x;
    double objective = std::numeric_limits<double>::quiet_NaN();
    Vector eq_duals;    // y, one per equality row
    Vector ineq_duals;  // z >= 0, one per row of ineq_matrix
    int iterations = 0;
    double primal_residual = kInf;  // scaled infinity norms
    double dual_residual = kInf;

    bool optimal() const { return status == SolveStatus::optimal; }
};

struct SolverOptions {
    double tolerance = 1e-9;
    /// Phase-1 threshold: a program whose minimal total constraint violation
    /// exceeds this (relative to 1 + max |rhs|) is reported infeasible.
    double feasibility_tolerance = 1e-7;
    int max_iterations = 100;
};

/// Sparse row/column accumulator for assembling programs by hand.
class ProgramBuilder {
public:
    using Term = std::pair<int, double>;

    int add_variables(int count, double lower = -kInf, double upper = kInf) {
        const int first = static_cast<int>(lower_.size());
        for (int i = 0; i < count; ++i) {
            lower_.push_back(lower);
            upper_.push_back(upper);
            linear_.push_back(0.0);
        }
        return first;
    }
    int num_variables() const { return static_cast<int>(lower_.size()); }

    void set_bounds(int var, double lower, double upper) {
        lower_[var] = lower;
        upper_[var] = upper;
    }
    void add_linear(int var, double coeff) { linear_[var] += coeff; }
    void add_constant(double v) { constant_ += v; }
    /// objective += coeff * x_i * x_j (both orders are folded into Q).
    void add_quadratic(int i, int j, double coeff) {
        if (i == j) {
            quad_.emplace_back(i, i, 2.0 * coeff);
        } else {
            quad_.emplace_back(i, j, coeff);
            quad_.emplace_back(j, i, coeff);
        }
    }
    int add_le(const std::vector<Term>& terms, double rhs) { return add_row(ineq_, ineq_rhs_, terms, rhs); }
    int add_ge(const std::vector<Term>& terms, double rhs) {
        std::vector<Term> neg(terms);
        for (auto& t : neg) t.second = -t.second;
        return add_row(ineq_, ineq_rhs_, neg, -rhs);
    }
    int add_eq(const std::vector<Term>& terms, double rhs) { return add_row(eq_, eq_rhs_, terms, rhs); }
    int num_ineq() const { return static_cast<int>(ineq_rhs_.size()); }
    int num_eq() const { return static_cast<int>(eq_rhs_.size()); }

    ConvexProgram build() const {
        const int n = num_variables();
        ConvexProgram p;
        p.quadratic.resize(n, n);
        p.quadratic.setFromTriplets(quad_.begin(), quad_.end());
        p.linear = Eigen::Map<const Vector>(linear_.data(), n);
        p.constant = constant_;
        p.eq_matrix.resize(static_cast<Eigen::Index>(eq_rhs_.size()), n);
        p.eq_matrix.setFromTriplets(eq_.begin(), eq_.end());
        p.eq_rhs = Eigen::Map<const Vector>(eq_rhs_.data(), static_cast<Eigen::Index>(eq_rhs_.size()));
        p.ineq_matrix.resize(static_cast<Eigen::Index>(ineq_rhs_.size()), n);
        p.ineq_matrix.setFromTriplets(ineq_.begin(), ineq_.end());
        p.ineq_rhs = Eigen::Map<const Vector>(ineq_rhs_.data(), static_cast<Eigen::Index>(ineq_rhs_.size()));
        p.lower = Eigen::Map<const Vector>(lower_.data(), n);
        p.upper = Eigen::Map<const Vector>(upper_.data(), n);
        return p;
    }

private:
    using Triplet = Eigen::Triplet<double>;

    static int add_row(std::vector<Triplet>& entries, std::vector<double>& rhs_list,
                       const std::vector<Term>& terms, double rhs) {
        const int row = static_cast<int>(rhs_list.size());
        for (const auto& [var, coeff] : terms)
            if (coeff != 0.0) entries.emplace_back(row, var, coeff);
        rhs_list.push_back(rhs);
        return row;
    }

    std::vector<double> lower_, upper_, linear_;
    double constant_ = 0.0;
    std::vector<Triplet> quad_, eq_, ineq_;
    std::vector<double> eq_rhs_, ineq_rhs_;
};

namespace detail {

/// Program in the solver's internal form: bounds folded into G, fixed
/// variables folded into A, every row of A and G scaled to unit max-norm and
/// the objective scaled to unit max-norm.
struct StandardForm {
    SparseMatrix q, a, g;
    Vector c, b, h;
    Vector a_row_scale, g_row_scale;
    double obj_scale = 1.0;
    Eigen::Index user_ineq = 0;  // leading rows of g that come from the user's G
};

inline double max_abs(const SparseMatrix& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
    return v;
}

inline double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline Vector row_max_abs(const SparseMatrix& m) {
    Vector r = Vector::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            r[it.row()] = std::max(r[it.row()], std::abs(it.value()));
    return r;
}

inline StandardForm to_standard_form(const ConvexProgram& p) {
    using Triplet = Eigen::Triplet<double>;
    const auto n = p.num_variables();
    StandardForm f;
    f.user_ineq = p.ineq_matrix.rows();

    std::vector<Triplet> g_entries, a_entries;
    std::vector<double> h, b;
    for (int k = 0; k < p.ineq_matrix.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(p.ineq_matrix, k); it; ++it)
            g_entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (Eigen::Index i = 0; i < p.ineq_rhs.size(); ++i) h.push_back(p.ineq_rhs[i]);
    for (int k = 0; k < p.eq_matrix.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(p.eq_matrix, k); it; ++it)
            a_entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (Eigen::Index i = 0; i < p.eq_rhs.size(); ++i) b.push_back(p.eq_rhs[i]);

    for (Eigen::Index j = 0; j < n; ++j) {
        const double lo = p.lower[j], hi = p.upper[j];
        if (std::isfinite(lo) && std::isfinite(hi) && lo == hi) {
            a_entries.emplace_back(static_cast<int>(b.size()), static_cast<int>(j), 1.0);
            b.push_back(lo);
            continue;
        }
        if (std::isfinite(lo)) {
            g_entries.emplace_back(static_cast<int>(h.size()), static_cast<int>(j), -1.0);
            h.push_back(-lo);
        }
        if (std::isfinite(hi)) {
            g_entries.emplace_back(static_cast<int>(h.size()), static_cast<int>(j), 1.0);
            h.push_back(hi);
        }
    }

    f.g.resize(static_cast<Eigen::Index>(h.size()), n);
    f.g.setFromTriplets(g_entries.begin(), g_entries.end());
    f.h = Eigen::Map<Vector>(h.data(), static_cast<Eigen::Index>(h.size()));
    f.a.resize(static_cast<Eigen::Index>(b.size()), n);
    f.a.setFromTriplets(a_entries.begin(), a_entries.end());
    f.b = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));

    f.g_row_scale = row_max_abs(f.g);
    f.a_row_scale = row_max_abs(f.a);
    for (auto* s : {&f.g_row_scale, &f.a_row_scale})
        for (Eigen::Index i = 0; i < s->size(); ++i) (*s)[i] = (*s)[i] > 0.0 ? 1.0 / (*s)[i] : 1.0;
    f.g = f.g_row_scale.asDiagonal() * f.g;
    f.h = f.g_row_scale.cwiseProduct(f.h);
    f.a = f.a_row_scale.asDiagonal() * f.a;
    f.b = f.a_row_scale.cwiseProduct(f.b);

    f.obj_scale = 1.0 / std::max({1.0, inf_norm(p.linear), max_abs(p.quadratic)});
    f.q = p.quadratic * f.obj_scale;
    f.c = p.linear * f.obj_scale;
    return f;
}

struct IpmResult {
    bool converged = false;
    bool diverging = false;
    int iterations = 0;
    Vector x, y, z, s;
    double primal_residual = kInf, dual_residual = kInf;
};

/// Core Mehrotra iteration on a standard form program.
class InteriorPoint {
public:
    InteriorPoint(const StandardForm& f, const SolverOptions& opt) : f_(f), opt_(opt) {
        n_ = f.c.size();
        p_ = f.b.size();
        m_ = f.h.size();
        gt_ = f.g.transpose();
        at_ = f.a.transpose();
    }

    IpmResult run() {
        IpmResult r;
        Vector x, y, z, s;
        initial_point(x, y, z, s);

        // Residuals are relative per row, so a large right-hand side in one
        // row cannot excuse an absolute error in a homogeneous row.
        const Vector b_scale = (1.0 + f_.b.array().abs()).inverse().matrix();
        const Vector h_scale = (1.0 + f_.h.array().abs()).inverse().matrix();
        const double c_norm = 1.0 + inf_norm(f_.c);
        double best_merit = kInf;
        int stalled = 0;
        struct Iterate {
            Vector x, y, z, s;
            double pres = kInf, dres = kInf;
        } best;

        for (int it = 0; it < opt_.max_iterations; ++it) {
            r.iterations = it;
            const Vector qx = f_.q * x;
            const Vector rd = qx + f_.c + at_ * y + gt_ * z;
            const Vector rp = f_.a * x - f_.b;
            const Vector ri = f_.g * x + s - f_.h;
            const double mu = m_ > 0 ? s.dot(z) / static_cast<double>(m_) : 0.0;

            const double pres = std::max(inf_norm(rp.cwiseProduct(b_scale)), inf_norm(ri.cwiseProduct(h_scale)));
            const double dres = inf_norm(rd) / c_norm;
            const double pobj = 0.5 * x.dot(qx) + f_.c.dot(x);
            const double gap = m_ > 0 ? s.dot(z) / (1.0 + std::abs(pobj)) : 0.0;
            if (std::getenv("DLR_IPM_TRACE")) std::fprintf(stderr, "it %d pres %.3e dres %.3e gap %.3e mu %.3e\n", it, pres, dres, gap, mu);
            r.primal_residual = pres;
            r.dual_residual = dres;
            if (pres <= opt_.tolerance && dres <= opt_.tolerance && gap <= opt_.tolerance) {
                r.converged = true;
                break;
            }
            if (inf_norm(x) > 1e12 || (m_ > 0 && inf_norm(z) > 1e14)) {
                r.diverging = true;
                break;
            }
            const double merit = std::max({pres, dres, gap});
            if (merit < best_merit) {
                if (merit < 0.9 * best_merit) stalled = 0;
                best_merit = merit;
                best = {x, y, z, s, pres, dres};
            }
            if (merit >= 0.9 * best_merit && ++stalled >= 15) break;

            const Vector w = m_ > 0 ? Vector(z.cwiseQuotient(s)) : Vector();
            if (!factorize(w)) break;

            // Predictor.
            Vector rc = s.cwiseProduct(z);
            Vector dx, dy, dz, ds;
            if (!newton(w, rd, rp, ri, rc, s, z, dx, dy, dz, ds)) break;
            if (m_ == 0) {
                x += dx;
                y += dy;
                continue;
            }
            const double alpha_aff = std::min(max_step(s, ds), max_step(z, dz));
            const double mu_aff =
                (s + alpha_aff * ds).dot(z + alpha_aff * dz) / static_cast<double>(m_);
            const double sigma = std::pow(mu_aff / mu, 3);

            // Corrector.
            rc += ds.cwiseProduct(dz);
            rc.array() -= sigma * mu;
            if (!newton(w, rd, rp, ri, rc, s, z, dx, dy, dz, ds)) break;
            const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
            x += alpha * dx;
            y += alpha * dy;
            z += alpha * dz;
            s += alpha * ds;
        }
        if (!r.converged && best_merit <= kAcceptable) {
            // Ill-conditioning near the optimum can stall the final digits;
            // the best iterate is still a certified (looser) KKT point.
            r.converged = true;
            x = std::move(best.x);
            y = std::move(best.y);
            z = std::move(best.z);
            s = std::move(best.s);
            r.primal_residual = best.pres;
            r.dual_residual = best.dres;
        }
        if (!r.converged && inf_norm(x) > 1e9) r.diverging = true;
        r.x = std::move(x);
        r.y = std::move(y);
        r.z = std::move(z);
        r.s = std::move(s);
        return r;
    }

private:
    static double max_step(const Vector& v, const Vector& dv) {
        double a = kInf;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
        return a;
    }

    void initial_point(Vector& x, Vector& y, Vector& z, Vector& s) {
        const Vector ones = Vector::Ones(m_);
        Vector dx, dy;
        bool ok = factorize(ones);
        if (ok) ok = solve_reduced(-f_.c + gt_ * f_.h, f_.b, dx, dy);
        x = ok ? dx : Vector::Zero(n_);
        y = ok ? dy : Vector::Zero(p_);
        if (m_ == 0) {
            z = Vector();
            s = Vector();
            return;
        }
        z = f_.g * x - f_.h;
        s = -z;
        const double shift_s = -s.minCoeff();
        if (shift_s >= 0.0) s.array() += 1.0 + shift_s;
        const double shift_z = -z.minCoeff();
        if (shift_z >= 0.0) z.array() += 1.0 + shift_z;
    }

    /// An exact zero pivot under the fill-reducing ordering is retried with
    /// a larger quasi-definite shift; refinement removes the shift's bias.
    /// Without a usable LDLT the pivoting LU carries the iteration.
    bool factorize(const Vector& w) {
        SparseMatrix h = f_.q;
        if (m_ > 0) h += SparseMatrix(gt_ * w.asDiagonal() * f_.g);
        h_ = h;
        w_ = w;
        lu_ready_ = false;
        for (double reg = kRegPrimal; reg <= kRegMax; reg *= 100.0) {
            k_ = assemble(h, reg);
            if (!analyzed_) {
                ldlt_.analyzePattern(k_);
                analyzed_ = true;
            }
            ldlt_.factorize(k_);
            ldlt_ok_ = ldlt_.info() == Eigen::Success;
            if (ldlt_ok_) return true;
        }
        k_ = assemble(h, kRegPrimal);
        return factorize_lu();
    }

    bool factorize_lu() {
        if (lu_ready_) return lu_ok_;
        if (!lu_analyzed_) {
            lu_.analyzePattern(k_);
            lu_analyzed_ = true;
        }
        lu_.factorize(k_);
        lu_ready_ = true;
        lu_ok_ = lu_.info() == Eigen::Success;
        return lu_ok_;
    }

    /// Solve plus refinement toward the unshifted system; a correction that
    /// grows the residual is rejected, leaving the proximally shifted
    /// direction. Returns the final residual norm.
    template <class Factor>
    double refined_solve(const Factor& factor, const Vector& rhs, Vector& sol) const {
        sol = factor.solve(rhs);
        if (!sol.allFinite()) return kInf;
        Vector res = rhs - apply_kkt(sol);
        double res_norm = inf_norm(res);
        for (int pass = 0; pass < 6 && res_norm > 1e-14 * (1.0 + inf_norm(rhs)); ++pass) {
            const Vector next = sol + factor.solve(res);
            Vector next_res = rhs - apply_kkt(next);
            const double next_norm = inf_norm(next_res);
            if (!(next_norm < res_norm)) break;
            sol = next;
            res = std::move(next_res);
            res_norm = next_norm;
        }
        return res_norm;
    }

    SparseMatrix assemble(const SparseMatrix& h, double reg) const {
        using Triplet = Eigen::Triplet<double>;
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(h.nonZeros() + 2 * f_.a.nonZeros() + n_ + p_));
        for (int k = 0; k < h.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(h, k); it; ++it)
                t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int k = 0; k < f_.a.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(f_.a, k); it; ++it) {
                t.emplace_back(static_cast<int>(n_ + it.row()), static_cast<int>(it.col()), it.value());
                t.emplace_back(static_cast<int>(it.col()), static_cast<int>(n_ + it.row()), it.value());
            }
        // Varied shifts keep symmetric structures from cancelling a pivot exactly.
        auto shift = [reg](Eigen::Index i) { return reg * (1.0 + static_cast<double>(i % 7) / 7.0); };
        for (Eigen::Index i = 0; i < n_; ++i) t.emplace_back(static_cast<int>(i), static_cast<int>(i), shift(i));
        for (Eigen::Index i = 0; i < p_; ++i)
            t.emplace_back(static_cast<int>(n_ + i), static_cast<int>(n_ + i), -shift(n_ + i));
        SparseMatrix k(n_ + p_, n_ + p_);
        k.setFromTriplets(t.begin(), t.end());
        return k;
    }

    /// Solves the unregularized reduced system. LDLT without pivoting can
    /// lose accuracy near the optimum where the barrier weights spread over
    /// many magnitudes; a poor residual then switches to the pivoting LU.
    bool solve_reduced(const Vector& r1, const Vector& r2, Vector& dx, Vector& dy) {
        Vector rhs(n_ + p_);
        rhs << r1, r2;
        const double target = 1e-8 * (1.0 + inf_norm(rhs));
        Vector sol;
        double res = kInf;
        if (ldlt_ok_) res = refined_solve(ldlt_, rhs, sol);
        if (!(res <= target) && factorize_lu()) {
            Vector alt;
            const double alt_res = refined_solve(lu_, rhs, alt);
            if (alt_res < res) {
                sol = std::move(alt);
                res = alt_res;
            }
        }
        if (!std::isfinite(res) || !sol.allFinite()) return false;
        dx = sol.head(n_);
        dy = sol.tail(p_);
        return true;
    }

    Vector apply_kkt(const Vector& v) const {
        Vector out(n_ + p_);
        const auto vx = v.head(n_);
        const auto vy = v.tail(p_);
        out.head(n_) = h_ * vx + at_ * vy;
        out.tail(p_) = f_.a * vx;
        return out;
    }

    bool newton(const Vector& w, const Vector& rd, const Vector& rp, const Vector& ri, const Vector& rc,
                const Vector& s, const Vector& z, Vector& dx, Vector& dy, Vector& dz, Vector& ds) {
        Vector r1 = -rd;
        Vector tmp;
        if (m_ > 0) {
            tmp = (z.cwiseProduct(ri) - rc).cwiseQuotient(s);
            r1 -= gt_ * tmp;
        }
        if (!solve_reduced(r1, -rp, dx, dy)) return false;
        if (m_ > 0) {
            const Vector gdx = f_.g * dx;
            dz = tmp + w.cwiseProduct(gdx);
            ds = -ri - gdx;
        }
        return dx.allFinite() && dy.allFinite();
    }

    static constexpr double kAcceptable = 1e-6;
    static constexpr double kRegPrimal = 1e-8;
    static constexpr double kRegMax = 1e-3;

    const StandardForm& f_;
    SolverOptions opt_;
    Eigen::Index n_ = 0, p_ = 0, m_ = 0;
    SparseMatrix gt_, at_, h_;
    Vector w_;
    SparseMatrix k_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    Eigen::SparseLU<SparseMatrix> lu_;
    bool analyzed_ = false, ldlt_ok_ = false;
    bool lu_analyzed_ = false, lu_ready_ = false, lu_ok_ = false;
};

/// Minimal total violation of Ax = b, Gx <= h over x; zero iff feasible.
inline double phase_one_violation(const StandardForm& f, const SolverOptions& opt, bool& solved) {
    const auto n = f.c.size();
    const auto p = f.b.size();
    const auto m = f.h.size();
    ProgramBuilder pb;
    pb.add_variables(static_cast<int>(n));
    const int tp = pb.add_variables(static_cast<int>(p), 0.0, kInf);
    const int tm = pb.add_variables(static_cast<int>(p), 0.0, kInf);
    const int u = pb.add_variables(static_cast<int>(m), 0.0, kInf);
    for (int i = 0; i < static_cast<int>(n); ++i) pb.add_quadratic(i, i, 1e-10);
    for (int i = 0; i < static_cast<int>(p); ++i) {
        pb.add_linear(tp + i, 1.0);
        pb.add_linear(tm + i, 1.0);
    }
    for (int i = 0; i < static_cast<int>(m); ++i) pb.add_linear(u + i, 1.0);

    std::vector<std::vector<ProgramBuilder::Term>> arows(static_cast<std::size_t>(p)), grows(static_cast<std::size_t>(m));
    for (int k = 0; k < f.a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(f.a, k); it; ++it)
            arows[static_cast<std::size_t>(it.row())].emplace_back(static_cast<int>(it.col()), it.value());
    for (int k = 0; k < f.g.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(f.g, k); it; ++it)
            grows[static_cast<std::size_t>(it.row())].emplace_back(static_cast<int>(it.col()), it.value());
    for (int i = 0; i < static_cast<int>(p); ++i) {
        auto row = arows[static_cast<std::size_t>(i)];
        row.emplace_back(tp + i, 1.0);
        row.emplace_back(tm + i, -1.0);
        pb.add_eq(row, f.b[i]);
    }
    for (int i = 0; i < static_cast<int>(m); ++i) {
        auto row = grows[static_cast<std::size_t>(i)];
        row.emplace_back(u + i, -1.0);
        pb.add_le(row, f.h[i]);
    }
    const ConvexProgram lp = pb.build();
    StandardForm sf = to_standard_form(lp);
    SolverOptions o = opt;
    o.max_iterations = std::max(opt.max_iterations, 150);
    InteriorPoint ipm(sf, o);
    IpmResult r = ipm.run();
    solved = r.converged;
    double viol = 0.0;
    for (Eigen::Index i = n; i < r.x.size(); ++i) viol += std::max(0.0, r.x[i]);
    return viol;
}

}  // namespace detail

/// Solves a convex QP/LP. Deterministic for identical input. Failures are
/// reported through `Solution::status`; malformed programs throw InvalidInput.
inline Solution solve(const ConvexProgram& program, const SolverOptions& options = {}) {
    program.validate();
    const detail::StandardForm f = detail::to_standard_form(program);
    detail::InteriorPoint ipm(f, options);
    detail::IpmResult r = ipm.run();

    Solution sol;
    sol.iterations = r.iterations;
    sol.primal_residual = r.primal_residual;
    sol.dual_residual = r.dual_residual;
    if (r.converged) {
        sol.status = SolveStatus::optimal;
        sol.x = r.x;
        sol.objective = program.objective(sol.x);
        sol.eq_duals = Vector::Zero(program.eq_matrix.rows());
        const Vector y = f.a_row_scale.cwiseProduct(r.y) / f.obj_scale;
        sol.eq_duals = y.head(program.eq_matrix.rows());
        const Vector z = f.g_row_scale.cwiseProduct(r.z) / f.obj_scale;
        sol.ineq_duals = z.head(f.user_ineq);
        return sol;
    }

    bool phase_one_solved = false;
    const double violation = detail::phase_one_violation(f, options, phase_one_solved);
    const double scale = 1.0 + std::max(detail::inf_norm(f.b), detail::inf_norm(f.h));
    if (phase_one_solved && violation > options.feasibility_tolerance * scale) {
        sol.status = SolveStatus::infeasible;
    } else if (phase_one_solved && r.diverging) {
        sol.status = SolveStatus::unbounded;
    } else {
        sol.status = SolveStatus::numerical_failure;
    }
    sol.x = r.x;
    return sol;
}

}  // namespace dlr
