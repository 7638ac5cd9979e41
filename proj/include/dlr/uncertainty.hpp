#pragma once

// Rating forecasts (multivariate normal over DLR lines), chi-squared sized
// ellipsoidal sets, their polyhedral outer approximation, and the
// truncated-normal deficit expectation used by affine policies.
//
// All rating quantities here are per unit of each line's nominal rating.

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dlr/convex_solver.hpp"
#include "dlr/errors.hpp"
#include "dlr/records.hpp"

namespace dlr {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct RatingForecast {
    Vector mu;
    Matrix sigma;
    double lead_time = 0.0;  // hours
    std::vector<std::string> line_ids;  // optional, one per DLR line

    Eigen::Index dim() const { return mu.size(); }
    Vector std_dev() const { return sigma.diagonal().cwiseMax(0.0).cwiseSqrt(); }

    void validate() const {
        using detail::require;
        require(mu.size() >= 1, "forecast needs at least one line");
        require(sigma.rows() == mu.size() && sigma.cols() == mu.size(), "forecast sigma must be k x k");
        require(mu.allFinite() && sigma.allFinite(), "forecast has non-finite entries");
        require((mu.array() > 0.0).all(), "forecast mu must be > 0");
        require(line_ids.empty() || line_ids.size() == static_cast<std::size_t>(mu.size()),
                "forecast line ids must match mu");
        const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
        require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "forecast sigma must be symmetric");
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
        require(eig.eigenvalues().minCoeff() >= -1e-10 * scale, "forecast sigma must be positive semidefinite");
    }

    /// Independent lines with a common mean and standard deviation.
    static RatingForecast independent(Eigen::Index k, double mean, double sd, double lead_time = 0.0) {
        RatingForecast f;
        f.mu = Vector::Constant(k, mean);
        f.sigma = Matrix::Identity(k, k) * (sd * sd);
        f.lead_time = lead_time;
        return f;
    }
};

/// Sample mean and unbiased sample covariance; rows are realizations.
inline RatingForecast fit_forecast(const Matrix& samples) {
    if (samples.rows() < 2) throw InvalidInput("fit_forecast needs at least 2 samples");
    if (samples.cols() < 1) throw InvalidInput("fit_forecast needs at least 1 line");
    RatingForecast f;
    f.mu = samples.colwise().mean().transpose();
    const Matrix centered = samples.rowwise() - f.mu.transpose();
    f.sigma = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
    f.sigma = 0.5 * (f.sigma + f.sigma.transpose());
    return f;
}

/// Value rho with P(chi2_k <= rho) = gamma.
inline double chi2_quantile(int k, double gamma) {
    detail::require(k >= 1, "chi2_quantile needs k >= 1");
    detail::require(gamma > 0.0 && gamma < 1.0, "chi2_quantile needs 0 < gamma < 1");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(k), gamma);
}

inline double chi2_cdf(int k, double x) {
    return boost::math::cdf(boost::math::chi_squared_distribution<double>(k), std::max(0.0, x));
}

/// {mu + B z : ||z||_2 <= sqrt(rho)}.
struct EllipsoidSet {
    Vector mu;
    Matrix b;
    Matrix b_pinv;
    double rho = 0.0;
    double gamma = 0.0;

    Eigen::Index dim() const { return mu.size(); }
    double radius() const { return std::sqrt(rho); }
    Vector to_delta(const Vector& z) const { return mu + b * z; }

    /// Membership via the pseudo-inverse; points off mu + range(B) are outside.
    bool contains(const Vector& delta, double tol = 1e-9) const {
        const Vector d = delta - mu;
        const Vector z = b_pinv * d;
        if ((b * z - d).norm() > tol * std::max(1.0, d.norm())) return false;
        return z.norm() <= radius() * (1.0 + tol) + tol;
    }
};

inline EllipsoidSet build_ellipsoid(const RatingForecast& f, double gamma) {
    f.validate();
    EllipsoidSet e;
    e.mu = f.mu;
    e.gamma = gamma;
    e.rho = chi2_quantile(static_cast<int>(f.dim()), gamma);
    const Eigen::JacobiSVD<Matrix> svd(f.sigma, Eigen::ComputeFullU);
    const Vector kappa = svd.singularValues();
    e.b = svd.matrixU() * kappa.cwiseSqrt().asDiagonal();
    const double cutoff = 1e-12 * std::max(1.0, kappa.maxCoeff());
    Vector inv = Vector::Zero(kappa.size());
    for (Eigen::Index i = 0; i < kappa.size(); ++i)
        if (kappa[i] > cutoff) inv[i] = 1.0 / std::sqrt(kappa[i]);
    e.b_pinv = inv.asDiagonal() * svd.matrixU().transpose();
    return e;
}

/// {mu + B z : S z <= h}, an outer approximation of an ellipsoid's ball.
struct PolytopeSet {
    Vector mu;
    Matrix b;
    Matrix s;
    Vector h;
    std::vector<Vector> z_vertices;
    std::vector<Vector> vertices;  // delta space, duplicates removed

    Eigen::Index dim() const { return mu.size(); }
    bool contains_z(const Vector& z, double tol = 1e-9) const {
        return ((s * z - h).array() <= tol * (1.0 + h.array().abs())).all();
    }
    Vector to_delta(const Vector& z) const { return mu + b * z; }
};

namespace detail {

inline void push_unique(std::vector<Vector>& out, const Vector& v, double tol) {
    for (const auto& u : out)
        if ((u - v).cwiseAbs().maxCoeff() <= tol) return;
    out.push_back(v);
}

/// Vertices of {x : A x <= c} in small dimension by testing every
/// dim-subset of constraints. Intended for a few dozen halfspaces.
inline std::vector<Vector> enumerate_vertices(const Matrix& a, const Vector& c, double tol = 1e-9) {
    const auto n = a.cols();
    const auto m = a.rows();
    std::vector<Vector> out;
    if (n == 0 || m < n) return out;
    std::vector<Eigen::Index> pick(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
    Matrix sub(n, n);
    Vector rhs(n);
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    while (true) {
        for (Eigen::Index r = 0; r < n; ++r) {
            sub.row(r) = a.row(pick[static_cast<std::size_t>(r)]);
            rhs[r] = c[pick[static_cast<std::size_t>(r)]];
        }
        Eigen::FullPivLU<Matrix> lu(sub);
        lu.setThreshold(1e-10);
        if (lu.isInvertible()) {
            const Vector x = lu.solve(rhs);
            if (((a * x - c).array() <= tol * scale).all()) push_unique(out, x, 1e-7 * scale);
        }
        // Next combination in lexicographic order.
        Eigen::Index i = n - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - n + i) --i;
        if (i < 0) break;
        ++pick[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < n; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

}  // namespace detail

/// Product of regular polygons, one per consecutive coordinate pair of z,
/// each circumscribing the disc of radius sqrt(rho); an odd trailing
/// coordinate gets the interval [-sqrt(rho), sqrt(rho)]. Facet normals of a
/// polygon sit at angles 2 pi j / m, so every axis extreme equals sqrt(rho).
inline PolytopeSet build_polytope(const EllipsoidSet& e, int facets_per_2d_cycle = 8, int max_dim = 6) {
    detail::require(facets_per_2d_cycle >= 4, "polytope needs at least 4 facets per 2-D cycle");
    const Eigen::Index k = e.dim();
    if (k > max_dim)
        throw CapacityError("vertex enumeration supports at most " + std::to_string(max_dim) + " DLR lines, got " +
                            std::to_string(k));
    const int m = facets_per_2d_cycle;
    const double r = e.radius();
    const Eigen::Index pairs = k / 2;
    const bool odd = (k % 2) == 1;
    const Eigen::Index rows = pairs * m + (odd ? 2 : 0);

    PolytopeSet p;
    p.mu = e.mu;
    p.b = e.b;
    p.s = Matrix::Zero(rows, k);
    p.h = Vector::Constant(rows, r);
    std::vector<std::vector<Vector>> factors;  // per block, its 2-D or 1-D vertices
    Eigen::Index row = 0;
    for (Eigen::Index q = 0; q < pairs; ++q) {
        std::vector<Vector> poly;
        for (int j = 0; j < m; ++j) {
            const double a = 2.0 * std::numbers::pi * j / m;
            p.s(row, 2 * q) = std::cos(a);
            p.s(row, 2 * q + 1) = std::sin(a);
            ++row;
            const double av = (2.0 * j + 1.0) * std::numbers::pi / m;
            const double rv = r / std::cos(std::numbers::pi / m);
            Vector v(2);
            v << rv * std::cos(av), rv * std::sin(av);
            poly.push_back(v);
        }
        factors.push_back(std::move(poly));
    }
    if (odd) {
        p.s(row, k - 1) = 1.0;
        p.s(row + 1, k - 1) = -1.0;
        factors.push_back({Vector::Constant(1, -r), Vector::Constant(1, r)});
    }

    // Cartesian product of the factor vertex lists.
    std::vector<std::size_t> idx(factors.size(), 0);
    while (true) {
        Vector z(k);
        Eigen::Index at = 0;
        for (std::size_t f = 0; f < factors.size(); ++f) {
            const Vector& v = factors[f][idx[f]];
            z.segment(at, v.size()) = v;
            at += v.size();
        }
        p.z_vertices.push_back(z);
        detail::push_unique(p.vertices, p.to_delta(z), 1e-12 * std::max(1.0, p.mu.cwiseAbs().maxCoeff()));
        std::size_t f = 0;
        while (f < factors.size() && ++idx[f] == factors[f].size()) idx[f++] = 0;
        if (f == factors.size()) break;
    }
    return p;
}

/// Per line: E[max(0, y - delta)] for delta ~ N(mu, sigma^2), that is
/// (y - mu) Phi(beta) + sigma phi(beta) with beta = (y - mu) / sigma.
inline Vector truncated_deficit_expectation(const RatingForecast& f, const Vector& y) {
    detail::require(y.size() == f.dim(), "y must have one entry per DLR line");
    const Vector sd = f.std_dev();
    Vector e(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double gap = y[i] - f.mu[i];
        if (sd[i] <= 0.0) {
            e[i] = std::max(0.0, gap);
            continue;
        }
        const double beta = gap / sd[i];
        e[i] = std::max(0.0, gap * normal_cdf(beta) + sd[i] * normal_pdf(beta));
    }
    return e;
}

/// Draws delta = mu + B z with z standard normal; rows are samples.
inline Matrix sample_normal(const EllipsoidSet& e, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Matrix out(static_cast<Eigen::Index>(count), e.dim());
    Vector z(e.dim());
    for (Eigen::Index s = 0; s < out.rows(); ++s) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n01(rng);
        out.row(s) = e.to_delta(z).transpose();
    }
    return out;
}

/// Points uniformly distributed on the ellipsoid boundary in z-space.
inline Matrix sample_ellipsoid_boundary(const EllipsoidSet& e, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    Matrix out(static_cast<Eigen::Index>(count), e.dim());
    Vector z(e.dim());
    for (Eigen::Index s = 0; s < out.rows(); ++s) {
        do {
            for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n01(rng);
        } while (z.norm() == 0.0);
        out.row(s) = (z * (e.radius() / z.norm())).transpose();
    }
    return out;
}

/// Uniform samples from the polytope (rejection from its z-space bounding
/// box), returned in delta space.
inline Matrix sample_polytope_uniform(const PolytopeSet& p, std::size_t count, std::uint64_t seed) {
    const Eigen::Index k = p.dim();
    Vector lo = Vector::Constant(k, kInf), hi = Vector::Constant(k, -kInf);
    for (const auto& z : p.z_vertices) {
        lo = lo.cwiseMin(z);
        hi = hi.cwiseMax(z);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Matrix out(static_cast<Eigen::Index>(count), k);
    Vector z(k);
    for (Eigen::Index s = 0; s < out.rows();) {
        for (Eigen::Index i = 0; i < k; ++i) z[i] = lo[i] + (hi[i] - lo[i]) * u01(rng);
        if (!p.contains_z(z, 0.0)) continue;
        out.row(s++) = p.to_delta(z).transpose();
    }
    return out;
}

/// Forecast document: {"lines": [ids], "mu": [...], "sigma": [[...]] or
/// "std": [...], "lead_time": hours}. "std" gives a diagonal covariance.
inline RatingForecast forecast_from_json(const Json& j, const std::string& where = "forecast") {
    if (!j.is_object()) throw InvalidInput(where + ": must be a JSON object");
    auto vec = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_array()) throw InvalidInput(where + ": '" + key + "' must be an array");
        const Json& a = j.at(key);
        Vector v(static_cast<Eigen::Index>(a.size()));
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number()) throw InvalidInput(where + ": '" + key + "' entries must be numbers");
            v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
        }
        return v;
    };
    RatingForecast f;
    f.mu = vec("mu");
    const auto k = f.mu.size();
    if (j.contains("sigma")) {
        const Json& s = j.at("sigma");
        if (!s.is_array() || s.size() != static_cast<std::size_t>(k))
            throw InvalidInput(where + ": 'sigma' must be a k x k array");
        f.sigma.resize(k, k);
        for (Eigen::Index r = 0; r < k; ++r) {
            const Json& row = s[static_cast<std::size_t>(r)];
            if (!row.is_array() || row.size() != static_cast<std::size_t>(k))
                throw InvalidInput(where + ": 'sigma' must be a k x k array");
            for (Eigen::Index c = 0; c < k; ++c) {
                if (!row[static_cast<std::size_t>(c)].is_number()) throw InvalidInput(where + ": 'sigma' entries must be numbers");
                f.sigma(r, c) = row[static_cast<std::size_t>(c)].get<double>();
            }
        }
    } else if (j.contains("std")) {
        const Vector sd = vec("std");
        if (sd.size() != k) throw InvalidInput(where + ": 'std' must match 'mu'");
        f.sigma = sd.cwiseProduct(sd).asDiagonal();
    } else {
        throw InvalidInput(where + ": needs 'sigma' or 'std'");
    }
    f.lead_time = detail::number_field_or(j, "lead_time", 0.0, where);
    if (j.contains("lines")) {
        for (const auto& id : j.at("lines")) {
            if (!id.is_string()) throw InvalidInput(where + ": 'lines' entries must be strings");
            f.line_ids.push_back(id.get<std::string>());
        }
    }
    try {
        f.validate();
    } catch (const InvalidInput& e) {
        throw InvalidInput(where + ": " + e.what());
    }
    return f;
}

inline Json to_json(const RatingForecast& f) {
    Json sigma = Json::array();
    for (Eigen::Index r = 0; r < f.sigma.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < f.sigma.cols(); ++c) row.push_back(f.sigma(r, c));
        sigma.push_back(row);
    }
    return Json{{"lines", f.line_ids},
                {"mu", std::vector<double>(f.mu.data(), f.mu.data() + f.mu.size())},
                {"sigma", sigma},
                {"lead_time", f.lead_time}};
}

inline RatingForecast load_forecast(const std::string& path) { return forecast_from_json(load_json_file(path), path); }

}  // namespace dlr
