#include <gtest/gtest.h>

#include <random>

#include "dlr/uncertainty.hpp"

namespace {

using namespace dlr;

// Closed-form chi-squared CDF for even k.
double chi2_cdf_even(int k, double x) {
    double term = 1.0, sum = 0.0;
    for (int i = 0; i < k / 2; ++i) {
        if (i > 0) term *= (x / 2.0) / i;
        sum += term;
    }
    return 1.0 - std::exp(-x / 2.0) * sum;
}

// Chi-squared with one degree of freedom: P(Z^2 <= x) = erf(sqrt(x / 2)).
double chi2_cdf_1(double x) { return std::erf(std::sqrt(x / 2.0)); }

double bisect(double (*cdf)(double), double target) {
    double lo = 0.0, hi = 100.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

TEST(Uncertainty, Chi2QuantileMatchesClosedForms) {
    EXPECT_NEAR(chi2_quantile(2, 0.95), -2.0 * std::log(0.05), 1e-9);
    EXPECT_NEAR(chi2_quantile(2, 0.95), 5.9915, 1e-3);
    EXPECT_NEAR(chi2_quantile(1, 0.5), bisect(chi2_cdf_1, 0.5), 1e-9);
    EXPECT_NEAR(chi2_quantile(1, 0.5), 0.4549, 1e-4);
    for (int k : {2, 4, 6})
        for (double g : {0.1, 0.5, 0.9, 0.99}) EXPECT_NEAR(chi2_cdf_even(k, chi2_quantile(k, g)), g, 1e-8);
    for (int k = 1; k <= 6; ++k)
        for (double g : {0.01, 0.3, 0.95}) EXPECT_NEAR(chi2_cdf(k, chi2_quantile(k, g)), g, 1e-7);
    EXPECT_LT(chi2_quantile(1, 1e-12), 1e-20);
    EXPECT_THROW(chi2_quantile(2, 1.0), InvalidInput);
    EXPECT_THROW(chi2_quantile(2, 0.0), InvalidInput);
    EXPECT_THROW(chi2_quantile(0, 0.5), InvalidInput);
}

TEST(Uncertainty, FitForecast) {
    Matrix constant = Matrix::Constant(5, 2, 1.3);
    const RatingForecast c = fit_forecast(constant);
    EXPECT_EQ(c.sigma, Matrix::Zero(2, 2));
    EXPECT_THROW(fit_forecast(Matrix::Ones(1, 2)), InvalidInput);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> d(1.5, 0.2);
    Matrix s(100000, 2);
    for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, 0) = d(rng), s(i, 1) = d(rng);
    const RatingForecast f = fit_forecast(s);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(f.mu[i], 1.5, 0.005);
        EXPECT_NEAR(f.sigma(i, i), 0.04, 0.002);
    }
    EXPECT_NEAR(f.sigma(0, 1), 0.0, 0.001);
    EXPECT_EQ(f.sigma(0, 1), f.sigma(1, 0));
}

TEST(Uncertainty, EllipsoidFactorAndBoundary) {
    RatingForecast f = RatingForecast::independent(2, 1.0, 1.0);
    f.mu.setZero();
    f.mu.array() += 1e-9;  // mu > 0 is required; shift the check instead
    const EllipsoidSet unit = build_ellipsoid(f, chi2_cdf_even(2, 4.0));
    EXPECT_NEAR(unit.rho, 4.0, 1e-9);
    Vector on(2);
    on << 2.0 + 1e-9, 1e-9;
    EXPECT_TRUE(unit.contains(on));
    on[0] += 1e-6;
    EXPECT_FALSE(unit.contains(on));

    RatingForecast g = RatingForecast::independent(2, 1.5, 0.2);
    g.sigma(0, 1) = g.sigma(1, 0) = 0.01;
    const EllipsoidSet e = build_ellipsoid(g, 0.95);
    EXPECT_LT((e.b * e.b.transpose() - g.sigma).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(e.rho, 5.9915, 1e-3);

    const EllipsoidSet d = build_ellipsoid(RatingForecast::independent(2, 1.5, 0.2), 0.95);
    for (int axis = 0; axis < 2; ++axis) {
        Vector p = d.mu;
        p[axis] += 0.2 * std::sqrt(5.991464547) * (1.0 - 1e-7);
        EXPECT_TRUE(d.contains(p));
        p[axis] = d.mu[axis] + 0.4896 * 1.001;
        EXPECT_FALSE(d.contains(p));
    }
}

TEST(Uncertainty, EllipsoidCoverageFrequency) {
    RatingForecast f = RatingForecast::independent(2, 1.5, 0.2);
    f.sigma(0, 1) = f.sigma(1, 0) = 0.02;
    const EllipsoidSet e = build_ellipsoid(f, 0.95);
    const Matrix s = sample_normal(e, 100000, 5);
    int inside = 0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) inside += e.contains(s.row(i).transpose());
    EXPECT_NEAR(inside / 1e5, 0.95, 0.01);
}

TEST(Uncertainty, SingularCovarianceMembership) {
    RatingForecast f = RatingForecast::independent(2, 1.5, 0.0);
    f.sigma(0, 0) = 0.04;
    const EllipsoidSet e = build_ellipsoid(f, 0.95);
    Vector p = f.mu;
    p[0] += 0.1;
    EXPECT_TRUE(e.contains(p));
    p[1] += 0.01;
    EXPECT_FALSE(e.contains(p));
}

TEST(Uncertainty, IntervalPolytope) {
    RatingForecast f = RatingForecast::independent(1, 1.5, 0.2);
    EllipsoidSet e = build_ellipsoid(f, chi2_cdf_1(4.0));
    EXPECT_NEAR(e.rho, 4.0, 1e-9);
    const PolytopeSet p = build_polytope(e);
    ASSERT_EQ(p.vertices.size(), 2u);
    std::vector<double> v{p.vertices[0][0], p.vertices[1][0]};
    std::sort(v.begin(), v.end());
    EXPECT_NEAR(v[0], 1.1, 1e-9);
    EXPECT_NEAR(v[1], 1.9, 1e-9);
}

TEST(Uncertainty, BoxAndOctagonVertices) {
    const EllipsoidSet e = build_ellipsoid(RatingForecast::independent(2, 1.5, 0.2), 0.95);
    const double r = std::sqrt(e.rho);
    const PolytopeSet box = build_polytope(e, 4);
    ASSERT_EQ(box.z_vertices.size(), 4u);
    for (const auto& z : box.z_vertices) {
        EXPECT_NEAR(std::abs(z[0]), r, 1e-12);
        EXPECT_NEAR(std::abs(z[1]), r, 1e-12);
    }
    const PolytopeSet oct = build_polytope(e, 8);
    ASSERT_EQ(oct.z_vertices.size(), 8u);
    for (const auto& z : oct.z_vertices) {
        EXPECT_NEAR(z.norm(), r / std::cos(std::numbers::pi / 8), 1e-12);
        EXPECT_TRUE(oct.contains_z(z));
    }
    // Independent H-to-V conversion yields the same vertex set.
    const auto brute = detail::enumerate_vertices(oct.s, oct.h);
    ASSERT_EQ(brute.size(), 8u);
    for (const auto& z : brute) {
        const bool found = std::any_of(oct.z_vertices.begin(), oct.z_vertices.end(),
                                       [&](const Vector& v) { return (v - z).norm() < 1e-9; });
        EXPECT_TRUE(found);
    }
}

TEST(Uncertainty, HigherDimensionalProductAndCap) {
    const EllipsoidSet e3 = build_ellipsoid(RatingForecast::independent(3, 1.5, 0.2), 0.95);
    const PolytopeSet p3 = build_polytope(e3, 8);
    EXPECT_EQ(p3.z_vertices.size(), 16u);
    EXPECT_EQ(detail::enumerate_vertices(p3.s, p3.h).size(), 16u);
    const EllipsoidSet e7 = build_ellipsoid(RatingForecast::independent(7, 1.5, 0.2), 0.95);
    EXPECT_THROW(build_polytope(e7), CapacityError);
    EXPECT_NO_THROW(build_polytope(e7, 4, 8));
    EXPECT_THROW(build_polytope(e3, 3), InvalidInput);
}

TEST(Uncertainty, PolytopeIsConservative) {
    for (int k : {1, 2, 3, 4}) {
        RatingForecast f = RatingForecast::independent(k, 1.5, 0.2);
        if (k >= 2) f.sigma(0, 1) = f.sigma(1, 0) = 0.015;
        const EllipsoidSet e = build_ellipsoid(f, 0.95);
        const PolytopeSet p = build_polytope(e, 8);
        const Matrix z = sample_ellipsoid_boundary(e, 10000, 3);
        int outside = 0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) outside += !p.contains_z(z.row(i).transpose());
        EXPECT_EQ(outside, 0) << "k = " << k;
    }
}

TEST(Uncertainty, DegenerateForecastCollapsesVertices) {
    const EllipsoidSet e = build_ellipsoid(RatingForecast::independent(2, 1.5, 0.0), 0.95);
    const PolytopeSet p = build_polytope(e);
    ASSERT_EQ(p.vertices.size(), 1u);
    EXPECT_NEAR((p.vertices[0] - e.mu).norm(), 0.0, 1e-15);
}

TEST(Uncertainty, UniformPolytopeSamplesStayInside) {
    const EllipsoidSet e = build_ellipsoid(RatingForecast::independent(2, 1.5, 0.2), 0.95);
    const PolytopeSet p = build_polytope(e);
    const Matrix s = sample_polytope_uniform(p, 2000, 9);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Vector z = e.b_pinv * (s.row(i).transpose() - e.mu);
        EXPECT_TRUE(p.contains_z(z, 1e-9));
    }
    EXPECT_EQ(s, sample_polytope_uniform(p, 2000, 9));
}

TEST(Uncertainty, TruncatedDeficitClosedFormCases) {
    RatingForecast f = RatingForecast::independent(1, 1.5, 0.2);
    Vector y(1);
    y << 1.5;
    EXPECT_NEAR(truncated_deficit_expectation(f, y)[0], 0.2 * 0.3989422804, 1e-9);
    y << 1.5 - 10 * 0.2;
    EXPECT_NEAR(truncated_deficit_expectation(f, y)[0], 0.0, 1e-15);
    y << 1.5 + 10 * 0.2;
    EXPECT_NEAR(truncated_deficit_expectation(f, y)[0], 2.0, 1e-12);
    RatingForecast z = RatingForecast::independent(1, 1.5, 0.0);
    y << 1.7;
    EXPECT_DOUBLE_EQ(truncated_deficit_expectation(z, y)[0], 0.2);
    y << 1.2;
    EXPECT_DOUBLE_EQ(truncated_deficit_expectation(z, y)[0], 0.0);
}

TEST(Uncertainty, TruncatedDeficitMatchesMonteCarlo) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> mu_d(1.0, 2.0), sd_d(0.01, 0.3), off(-2.5, 2.5);
    for (int t = 0; t < 5; ++t) {
        const double mu = mu_d(rng), sd = sd_d(rng), y = mu + off(rng) * sd;
        RatingForecast f = RatingForecast::independent(1, mu, sd);
        const double closed = truncated_deficit_expectation(f, Vector::Constant(1, y))[0];
        std::normal_distribution<double> n(mu, sd);
        double sum = 0.0, sq = 0.0;
        const int draws = 1000000;
        for (int i = 0; i < draws; ++i) {
            const double v = std::max(0.0, y - n(rng));
            sum += v;
            sq += v * v;
        }
        const double mean = sum / draws;
        const double se = std::sqrt(std::max(0.0, sq / draws - mean * mean) / draws);
        EXPECT_LE(std::abs(mean - closed), 3.0 * se + 1e-12) << mu << " " << sd << " " << y;
    }
}

TEST(Uncertainty, TruncatedDeficitIsMonotoneAndConvex) {
    RatingForecast f = RatingForecast::independent(1, 1.5, 0.2);
    const double h = 1e-3;
    double prev = -1.0, prev_slope = -1.0;
    for (double y = 0.5; y <= 2.5; y += h) {
        const double v = truncated_deficit_expectation(f, Vector::Constant(1, y))[0];
        EXPECT_GE(v, prev - 1e-15);
        if (prev >= 0.0) {
            const double slope = (v - prev) / h;
            EXPECT_GE(slope, prev_slope - 1e-9);
            prev_slope = slope;
        }
        prev = v;
    }
}

TEST(Uncertainty, ForecastDocument) {
    const Json doc = {{"lines", {"a", "b"}}, {"mu", {1.5, 1.4}}, {"sigma", {{0.04, 0.01}, {0.01, 0.09}}}, {"lead_time", 24}};
    const RatingForecast f = forecast_from_json(doc);
    EXPECT_EQ(f.line_ids.size(), 2u);
    EXPECT_DOUBLE_EQ(f.sigma(1, 1), 0.09);
    EXPECT_DOUBLE_EQ(f.lead_time, 24.0);
    const RatingForecast g = forecast_from_json(to_json(f));
    EXPECT_EQ(g.sigma, f.sigma);
    EXPECT_EQ(g.mu, f.mu);
    const RatingForecast s = forecast_from_json(Json{{"mu", {1.5}}, {"std", {0.1}}});
    EXPECT_NEAR(s.sigma(0, 0), 0.01, 1e-15);
    EXPECT_THROW(forecast_from_json(Json{{"mu", {1.5, 1.5}}, {"sigma", {{0.04, 0.1}, {0.1, 0.04}}}}), InvalidInput);
    EXPECT_THROW(forecast_from_json(Json{{"mu", {-1.0}}, {"std", {0.1}}}), InvalidInput);
    EXPECT_THROW(forecast_from_json(Json{{"mu", {1.0}}}), InvalidInput);
}

}  // namespace
