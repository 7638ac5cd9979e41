#include <gtest/gtest.h>

#include <random>

#include "dlr/convex_solver.hpp"

using namespace dlr;

namespace {

// Stationarity and feasibility residuals recomputed from the public solution.
struct Kkt {
    double stationarity;
    double primal;
    double complementarity;
};

Kkt kkt_residuals(const ConvexProgram& p, const Solution& s) {
    // Bounds are not part of ineq_duals; recover their multipliers from the
    // sign of the stationarity residual on variables sitting at a bound.
    Vector grad = p.quadratic * s.x + p.linear + p.eq_matrix.transpose() * s.eq_duals +
                  p.ineq_matrix.transpose() * s.ineq_duals;
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
        const bool at_lo = std::isfinite(p.lower[j]) && std::abs(s.x[j] - p.lower[j]) < 1e-6;
        const bool at_hi = std::isfinite(p.upper[j]) && std::abs(s.x[j] - p.upper[j]) < 1e-6;
        if ((at_lo && grad[j] > 0.0) || (at_hi && grad[j] < 0.0)) grad[j] = 0.0;
    }
    const double scale = 1.0 + p.linear.cwiseAbs().maxCoeff();
    double primal = 0.0, comp = 0.0;
    if (p.eq_rhs.size()) primal = (p.eq_matrix * s.x - p.eq_rhs).cwiseAbs().maxCoeff();
    if (p.ineq_rhs.size()) {
        const Vector slack = p.ineq_rhs - p.ineq_matrix * s.x;
        primal = std::max(primal, (-slack).cwiseMax(0.0).maxCoeff());
        comp = slack.cwiseProduct(s.ineq_duals).cwiseAbs().maxCoeff();
    }
    return {grad.cwiseAbs().maxCoeff() / scale, primal, comp};
}

// Euclidean projection onto {lo <= x <= hi, sum(x) = total} by bisection on
// the shift of the hyperplane multiplier.
Vector project_box_sum(const Vector& v, const Vector& lo, const Vector& hi, double total) {
    double a = (v - hi).minCoeff() - 1.0, b = (v - lo).maxCoeff() + 1.0;
    auto at = [&](double tau) { return Vector((v.array() - tau).max(lo.array()).min(hi.array())); };
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        (at(mid).sum() > total ? a : b) = mid;
    }
    return at(0.5 * (a + b));
}

// Accelerated projected gradient; the independent reference for random QPs.
Vector projected_gradient(const Matrix& q, const Vector& c, const Vector& lo, const Vector& hi, double total) {
    const double lip = Eigen::SelfAdjointEigenSolver<Matrix>(q).eigenvalues().maxCoeff();
    Vector x = project_box_sum(Vector::Zero(c.size()), lo, hi, total), y = x, prev = x;
    double t = 1.0;
    for (int it = 0; it < 20000; ++it) {
        x = project_box_sum(y - (q * y + c) / lip, lo, hi, total);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x + ((t - 1.0) / tn) * (x - prev);
        prev = x;
        t = tn;
    }
    return x;
}

}  // namespace

TEST(ConvexSolver, LinearLowerBound) {
    ProgramBuilder pb;
    const int x = pb.add_variables(1);
    pb.add_linear(x, 1.0);
    pb.add_ge({{x, 1.0}}, 1.0);
    const Solution s = solve(pb.build());
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.x[0], 1.0, 1e-7);
    EXPECT_NEAR(s.objective, 1.0, 1e-7);
}

TEST(ConvexSolver, ActiveUpperBoundOnShiftedSquare) {
    // (x - 3)^2 = x^2 - 6x + 9 with x <= 2
    ProgramBuilder pb;
    const int x = pb.add_variables(1, -kInf, 2.0);
    pb.add_quadratic(x, x, 1.0);
    pb.add_linear(x, -6.0);
    pb.add_constant(9.0);
    const Solution s = solve(pb.build());
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.x[0], 2.0, 1e-7);
    EXPECT_NEAR(s.objective, 1.0, 1e-7);
}

TEST(ConvexSolver, EqualityConstrainedQuadratic) {
    // KKT by hand: 2x = lambda = 2y, x + y = 1.
    ProgramBuilder pb;
    const int x = pb.add_variables(2);
    pb.add_quadratic(x, x, 1.0);
    pb.add_quadratic(x + 1, x + 1, 1.0);
    pb.add_eq({{x, 1.0}, {x + 1, 1.0}}, 1.0);
    const ConvexProgram prog = pb.build();
    const Solution s = solve(prog);
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.x[0], 0.5, 1e-7);
    EXPECT_NEAR(s.x[1], 0.5, 1e-7);
    EXPECT_NEAR(s.objective, 0.5, 1e-7);
    EXPECT_NEAR(s.eq_duals[0], -1.0, 1e-6);
    const auto k = kkt_residuals(prog, s);
    EXPECT_LE(k.stationarity, 1e-6);
    EXPECT_LE(k.primal, 1e-6);
}

TEST(ConvexSolver, DetectsInfeasibility) {
    ProgramBuilder pb;
    const int x = pb.add_variables(2, 0.0, kInf);
    pb.add_linear(x, 1.0);
    pb.add_le({{x, 1.0}, {x + 1, 1.0}}, 1.0);
    pb.add_ge({{x, 1.0}, {x + 1, 1.0}}, 2.0);
    EXPECT_EQ(solve(pb.build()).status, SolveStatus::infeasible);
}

TEST(ConvexSolver, DetectsInfeasibleEquality) {
    ProgramBuilder pb;
    const int x = pb.add_variables(1, 0.0, 1.0);
    pb.add_eq({{x, 1.0}}, 3.0);
    EXPECT_EQ(solve(pb.build()).status, SolveStatus::infeasible);
}

TEST(ConvexSolver, DetectsUnboundedness) {
    ProgramBuilder pb;
    const int x = pb.add_variables(2, 0.0, kInf);
    pb.add_linear(x, -1.0);
    pb.add_le({{x, 1.0}, {x + 1, -1.0}}, 1.0);
    EXPECT_EQ(solve(pb.build()).status, SolveStatus::unbounded);
}

TEST(ConvexSolver, RejectsMalformedPrograms) {
    ProgramBuilder pb;
    const int x = pb.add_variables(2);
    pb.add_quadratic(x, x, -1.0);
    EXPECT_THROW(solve(pb.build()), InvalidInput);

    ConvexProgram p = ProgramBuilder().build();
    p.linear = Vector::Ones(2);
    EXPECT_THROW(solve(p), InvalidInput);
}

TEST(ConvexSolver, FixedVariablesAndFreeVariables) {
    ProgramBuilder pb;
    const int x = pb.add_variables(3);
    pb.set_bounds(x, 2.0, 2.0);
    pb.add_eq({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}}, 5.0);
    pb.add_quadratic(x + 1, x + 1, 1.0);
    pb.add_quadratic(x + 2, x + 2, 2.0);
    const Solution s = solve(pb.build());
    ASSERT_TRUE(s.optimal());
    // min y^2 + 2 z^2 with y + z = 3 -> y = 2, z = 1
    EXPECT_NEAR(s.x[0], 2.0, 1e-7);
    EXPECT_NEAR(s.x[1], 2.0, 1e-6);
    EXPECT_NEAR(s.x[2], 1.0, 1e-6);
}

TEST(ConvexSolver, RandomQpsMatchProjectedGradient) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + trial % 9;
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
        const Matrix q = m * m.transpose() / n + 0.1 * Matrix::Identity(n, n);
        Vector c(n), lo(n), hi(n);
        for (int i = 0; i < n; ++i) {
            c[i] = 3.0 * nd(rng);
            lo[i] = -ud(rng) - 0.1;
            hi[i] = ud(rng) + 0.1;
        }
        const double total = 0.5 * (lo.sum() + hi.sum()) + 0.2 * (hi.sum() - lo.sum()) * (ud(rng) - 0.5);

        ProgramBuilder pb;
        pb.add_variables(n);
        std::vector<ProgramBuilder::Term> row;
        for (int i = 0; i < n; ++i) {
            pb.set_bounds(i, lo[i], hi[i]);
            pb.add_linear(i, c[i]);
            row.emplace_back(i, 1.0);
            for (int j = i; j < n; ++j) pb.add_quadratic(i, j, i == j ? 0.5 * q(i, i) : q(i, j));
        }
        pb.add_eq(row, total);
        const ConvexProgram prog = pb.build();
        const Solution s = solve(prog);
        ASSERT_TRUE(s.optimal()) << "trial " << trial;

        const Vector ref = projected_gradient(q, c, lo, hi, total);
        const double ref_obj = 0.5 * ref.dot(q * ref) + c.dot(ref);
        EXPECT_NEAR(s.objective, ref_obj, 1e-6 * (1.0 + std::abs(ref_obj))) << "trial " << trial;
        EXPECT_LE((s.x - ref).cwiseAbs().maxCoeff(), 1e-4) << "trial " << trial;
    }
}

TEST(ConvexSolver, RandomLpsSatisfyKkt) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 6, m = 2 * n;
        ProgramBuilder pb;
        pb.add_variables(n, -10.0, 10.0);
        Vector x0(n);
        for (int i = 0; i < n; ++i) {
            x0[i] = nd(rng);
            pb.add_linear(i, nd(rng));
        }
        for (int r = 0; r < m; ++r) {
            std::vector<ProgramBuilder::Term> row;
            double ax = 0.0;
            for (int i = 0; i < n; ++i) {
                const double a = nd(rng);
                row.emplace_back(i, a);
                ax += a * x0[i];
            }
            pb.add_le(row, ax + std::abs(nd(rng)));  // x0 strictly feasible
        }
        const ConvexProgram prog = pb.build();
        const Solution s = solve(prog);
        ASSERT_TRUE(s.optimal()) << "trial " << trial;
        const auto k = kkt_residuals(prog, s);
        EXPECT_LE(k.stationarity, 1e-6) << trial;
        EXPECT_LE(k.primal, 1e-6) << trial;
        EXPECT_LE(k.complementarity, 1e-6) << trial;
        EXPECT_GE(s.ineq_duals.minCoeff(), -1e-9);
    }
}

TEST(ConvexSolver, TighteningNeverLowersTheOptimum) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4;
        double prev = -kInf;
        for (double rhs : {3.0, 2.0, 1.0, 0.5, 0.25}) {
            ProgramBuilder pb;
            pb.add_variables(n, 0.0, 5.0);
            std::mt19937_64 local(static_cast<std::uint64_t>(trial));
            std::vector<ProgramBuilder::Term> row;
            for (int i = 0; i < n; ++i) {
                pb.add_quadratic(i, i, 1.0);
                pb.add_linear(i, -2.0 - std::abs(nd(local)));
                row.emplace_back(i, 1.0);
            }
            pb.add_le(row, rhs);
            const Solution s = solve(pb.build());
            ASSERT_TRUE(s.optimal());
            EXPECT_GE(s.objective, prev - 1e-9);
            prev = s.objective;
        }
        (void)rng;
    }
}

TEST(ConvexSolver, DeterministicOutput) {
    ProgramBuilder pb;
    const int x = pb.add_variables(3, 0.0, 10.0);
    for (int i = 0; i < 3; ++i) pb.add_linear(x + i, 1.0);  // degenerate: many optima
    pb.add_eq({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}}, 4.0);
    const ConvexProgram p = pb.build();
    const Solution a = solve(p), b = solve(p);
    ASSERT_TRUE(a.optimal());
    EXPECT_EQ(a.x, b.x);
}
