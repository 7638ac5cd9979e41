#pragma once

// Approach II: reserve providers follow a piecewise-affine policy of the
// realized DLR ratings. A unit's set-point change is D * max(0, y - delta),
// clamped per line, so a provider needs only the ratings to act.
//
// Units: y, deficits and actions in MW; D in MW per MW of rating deficit;
// realized ratings in p.u. of each DLR line's nominal rating.

#include <algorithm>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dlr/robust_dispatch.hpp"

namespace dlr {

struct AffinePolicy {
    Matrix d;     // generators x DLR lines, d = d_up - d_dn
    Matrix d_up;  // >= 0
    Matrix d_dn;  // >= 0
    Vector y;            // guaranteed capacity per DLR line, MW
    Vector nominal_mw;   // per DLR line, converts p.u. ratings to MW
    Vector delta_up;     // procured, >= 0
    Vector delta_dn;     // procured, <= 0
    std::vector<std::string> line_ids;
    std::vector<std::string> generator_ids;

    Eigen::Index num_lines() const { return y.size(); }

    /// Per-line rating shortfall below the guarantee, MW.
    Vector deficit(const Vector& delta_pu) const {
        detail::require(delta_pu.size() == y.size(), "rating vector must have one entry per DLR line");
        return (y - delta_pu.cwiseProduct(nominal_mw)).cwiseMax(0.0);
    }

    void validate() const {
        using detail::require;
        const auto k = y.size();
        require(k >= 1, "policy needs at least one DLR line");
        require(nominal_mw.size() == k && (nominal_mw.array() > 0.0).all(), "policy nominal ratings must be > 0");
        require(d.cols() == k && d_up.cols() == k && d_dn.cols() == k, "policy slopes need one column per DLR line");
        require(d_up.rows() == d.rows() && d_dn.rows() == d.rows(), "policy slope matrices disagree in size");
        require(delta_up.size() == d.rows() && delta_dn.size() == d.rows(), "policy bounds need one entry per generator");
        require((d_up.array() >= 0.0).all() && (d_dn.array() >= 0.0).all(), "policy slope split must be nonnegative");
        require((d - (d_up - d_dn)).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, d.cwiseAbs().maxCoeff()),
                "policy slope must equal d_up - d_dn");
        require((delta_up.array() >= 0.0).all() && (delta_dn.array() <= 0.0).all(), "policy bounds have the wrong sign");
        require((y.array() >= 0.0).all(), "guaranteed capacity y must be >= 0");
    }
};

/// Set-point change per generator, MW. Sums to zero whenever the columns of
/// D do.
inline Vector policy_action(const AffinePolicy& p, const Vector& delta_pu) { return p.d * p.deficit(delta_pu); }

struct PolicyProcurement {
    Vector p_gen;
    AffinePolicy policy;
    double cost_dispatch = 0.0;
    double cost_procurement = 0.0;
    double cost_expected_operation = 0.0;
    Vector expected_deficit_mw;   // e per DLR line
    std::vector<Vector> vertices;  // p.u. rating vectors the constraints were enforced at

    double procured_mw() const { return policy.delta_up.sum() - policy.delta_dn.sum(); }
    double total_cost() const { return cost_dispatch + cost_procurement + cost_expected_operation; }
};

struct AffineOptions {
    int facets_per_2d_cycle = 8;
    int max_dim = 6;
    /// A guarantee above mu + y_max_sigmas * sigma (p.u.) is rejected.
    double y_max_sigmas = 3.0;
    /// Upper limits (MW) on the scheduled flow of each DLR line, if any.
    std::optional<Vector> schedule_caps_mw;
    SolverOptions solver;
};

namespace detail {

inline Vector dlr_nominal(const GridTerms& t) {
    Vector n(static_cast<Eigen::Index>(t.dlr.size()));
    for (std::size_t r = 0; r < t.dlr.size(); ++r) n[static_cast<Eigen::Index>(r)] = t.nominal[static_cast<Eigen::Index>(t.dlr[r])];
    return n;
}

/// Vertices of the polytope split by the kinks of the policy: for every
/// pattern of lines at or below / above their guarantee, the vertices of
/// that piece. The policy is affine on each piece, so enforcing the robust
/// rows at these points enforces them on the whole polytope.
inline std::vector<Vector> policy_vertices(const PolytopeSet& w, const Vector& y_pu) {
    const Eigen::Index k = w.dim();
    const Eigen::Index m = w.s.rows();
    std::vector<Vector> out;
    for (unsigned pattern = 0; pattern < (1u << k); ++pattern) {
        Matrix a(m + k, w.s.cols());
        Vector c(m + k);
        a.topRows(m) = w.s;
        c.head(m) = w.h;
        for (Eigen::Index l = 0; l < k; ++l) {
            const double sign = (pattern >> l) & 1u ? -1.0 : 1.0;  // set bit: delta_l >= y_l
            a.row(m + l) = sign * w.b.row(l);
            c[m + l] = sign * (y_pu[l] - w.mu[l]);
        }
        for (const Vector& z : enumerate_vertices(a, c)) push_unique(out, w.to_delta(z), 1e-9);
    }
    return out;
}

struct PolicyProgram {
    int p = 0, up = 0, dn = 0, dup = 0, ddn = 0;  // D blocks are provider-major, k per provider
    std::vector<int> slack;  // per line when elastic, else empty
};

/// Builds and solves the vertex-enforced program. With `elastic`, every
/// line limit gets a shared slack priced far above any generation cost.
inline Solution solve_policy_program(const GridModel& g, const GridTerms& t, const std::vector<Vector>& vertices,
                                     const Vector& y_mw, const Vector& e_mw, const AffineOptions& opt, bool elastic,
                                     PolicyProgram& pp) {
    const auto& prov = t.providers;
    const int nr = static_cast<int>(prov.size());
    const int k = static_cast<int>(y_mw.size());
    const Vector nominal = dlr_nominal(t);
    std::vector<Vector> limits, deficits;
    for (const auto& v : vertices) {
        limits.push_back(t.limits(v));
        deficits.push_back((y_mw - v.cwiseProduct(nominal)).cwiseMax(0.0));
    }
    std::vector<std::size_t> slot;
    const std::vector<std::size_t> buses = t.buses_of(prov, slot);
    const int nb = static_cast<int>(buses.size());
    constexpr double kSlackPrice = 1e6;

    // Sparse formulation: F_l is the scheduled flow, U_{b,m} the slope of
    // the injection at bus b per MW of deficit on line m, and S_{l,m} the
    // resulting slope of line l. A flow row then has k + 1 terms.
    auto build = [&](const ActiveRows& active) {
        ProgramBuilder b;
        pp.p = add_dispatch(b, g);
        pp.up = b.add_variables(nr);
        pp.dn = b.add_variables(nr);
        pp.dup = b.add_variables(nr * k, 0.0);
        pp.ddn = b.add_variables(nr * k, 0.0);
        for (int r = 0; r < nr; ++r) {
            const std::size_t j = prov[static_cast<std::size_t>(r)];
            const auto& gen = g.generators[j];
            b.set_bounds(pp.up + r, 0.0, gen.reserve_up_max);
            b.set_bounds(pp.dn + r, gen.reserve_down_max, 0.0);
            b.add_linear(pp.up + r, tie(gen.procurement_price_up, j));
            b.add_linear(pp.dn + r, -tie(gen.procurement_price_down, j));
            for (int m = 0; m < k; ++m) {
                const double em = e_mw[m];
                const double cu = tie(gen.activation_price_up, j), cd = tie(gen.activation_price_down, j);
                b.add_linear(pp.dup + r * k + m, cu * em + kActionWeight * cu);
                b.add_linear(pp.ddn + r * k + m, cd * em + kActionWeight * cd);
            }
        }
        for (int m = 0; m < k; ++m) {
            std::vector<ProgramBuilder::Term> col;
            for (int r = 0; r < nr; ++r) {
                col.emplace_back(pp.dup + r * k + m, 1.0);
                col.emplace_back(pp.ddn + r * k + m, -1.0);
            }
            b.add_eq(col, 0.0);
        }
        // Reserve bounds at every distinct nonzero deficit.
        std::vector<Vector> seen;
        for (const auto& d : deficits) {
            if (d.maxCoeff() <= 0.0) continue;
            const auto before = seen.size();
            push_unique(seen, d, 1e-9);
            if (seen.size() == before) continue;
            for (int r = 0; r < nr; ++r) {
                std::vector<ProgramBuilder::Term> act;
                for (int m = 0; m < k; ++m) {
                    if (d[m] == 0.0) continue;
                    act.emplace_back(pp.dup + r * k + m, d[m]);
                    act.emplace_back(pp.ddn + r * k + m, -d[m]);
                }
                auto hi = act;
                hi.emplace_back(pp.up + r, -1.0);
                b.add_le(hi, 0.0);
                auto lo = act;
                lo.emplace_back(pp.dn + r, -1.0);
                b.add_ge(lo, 0.0);
            }
        }
        int u = -1;
        if (nr > 0 && k > 0) {
            u = b.add_variables(nb * k);
            for (int q = 0; q < nb; ++q)
                for (int m = 0; m < k; ++m) {
                    std::vector<ProgramBuilder::Term> row{{u + q * k + m, -1.0}};
                    for (int r = 0; r < nr; ++r) {
                        if (slot[static_cast<std::size_t>(r)] != static_cast<std::size_t>(q)) continue;
                        row.emplace_back(pp.dup + r * k + m, 1.0);
                        row.emplace_back(pp.ddn + r * k + m, -1.0);
                    }
                    b.add_eq(row, 0.0);
                }
        }
        pp.slack.assign(elastic ? g.lines.size() : 0, -1);
        for (std::size_t l = 0; l < g.lines.size(); ++l) {
            bool used = false;
            for (const auto& row : active) used = used || row[l];
            if (!used) continue;
            const int f = b.add_variables(1);
            auto terms = flow_terms(t, l, pp.p, {});
            for (auto& term : terms) term.second = -term.second;
            terms.emplace_back(f, 1.0);
            b.add_eq(terms, t.load_flow[static_cast<Eigen::Index>(l)]);
            int s = -1;
            if (u >= 0) {
                s = b.add_variables(k);
                for (int m = 0; m < k; ++m) {
                    std::vector<ProgramBuilder::Term> row{{s + m, -1.0}};
                    for (int q = 0; q < nb; ++q) {
                        const double c = t.h(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(buses[static_cast<std::size_t>(q)]));
                        if (c != 0.0) row.emplace_back(u + q * k + m, c);
                    }
                    b.add_eq(row, 0.0);
                }
            }
            int slack = -1;
            if (elastic) {
                slack = b.add_variables(1, 0.0);
                b.add_linear(slack, kSlackPrice);
                pp.slack[l] = slack;
            }
            for (std::size_t v = 0; v < vertices.size(); ++v) {
                if (!active[v][l]) continue;
                std::vector<ProgramBuilder::Term> row{{f, 1.0}};
                if (s >= 0)
                    for (int m = 0; m < k; ++m)
                        if (deficits[v][m] != 0.0) row.emplace_back(s + m, deficits[v][m]);
                const double lim = limits[v][static_cast<Eigen::Index>(l)];
                if (slack >= 0) {
                    auto hi = row;
                    hi.emplace_back(slack, -1.0);
                    b.add_le(hi, lim);
                    auto lo = row;
                    lo.emplace_back(slack, 1.0);
                    b.add_ge(lo, -lim);
                } else {
                    add_two_sided(b, row, 0.0, lim);
                }
            }
            if (opt.schedule_caps_mw) {
                const auto it = std::find(t.dlr.begin(), t.dlr.end(), l);
                if (it != t.dlr.end())
                    add_two_sided(b, {{f, 1.0}}, 0.0, (*opt.schedule_caps_mw)[it - t.dlr.begin()]);
            }
        }
        return solve(b.build(), opt.solver);
    };
    auto flows_at = [&](const Vector& x, std::size_t v) {
        Vector inj = x.segment(pp.p, static_cast<Eigen::Index>(g.generators.size()));
        for (int r = 0; r < nr; ++r)
            for (int m = 0; m < k; ++m)
                inj[static_cast<Eigen::Index>(prov[static_cast<std::size_t>(r)])] +=
                    (x[pp.dup + r * k + m] - x[pp.ddn + r * k + m]) * deficits[v][m];
        Vector f = t.flows(inj);
        if (!pp.slack.empty())
            for (std::size_t l = 0; l < pp.slack.size(); ++l)
                if (pp.slack[l] >= 0) {
                    const auto i = static_cast<Eigen::Index>(l);
                    f[i] = std::max(0.0, std::abs(f[i]) - x[pp.slack[l]]);
                }
        return f;
    };
    ActiveRows active = dlr_rows(vertices.size(), g.lines.size(), t.dlr);
    // Caps act on the scheduled DLR flows, which always have a row.
    return solve_with_row_generation(active, limits, build, flows_at);
}

}  // namespace detail

/// Robust procurement with affine policies for a fixed guarantee `y_mw`.
/// The robust rows are enforced at the policy vertices of the polyhedral
/// outer approximation of `e`, so every rating in that polytope is covered
/// by the policy without overloads or reserve shortfalls.
inline PolicyProcurement procure_affine(const GridModel& g, const PtdfMatrices& ptdf, const EllipsoidSet& e,
                                        const Vector& y_mw, const AffineOptions& opt = {}) {
    detail::require_dlr_dim(ptdf, e.dim());
    detail::require(y_mw.size() == e.dim(), "y needs one entry per DLR line");
    const detail::GridTerms t(g, ptdf);
    const Vector nominal = detail::dlr_nominal(t);
    RatingForecast f;
    f.mu = e.mu;
    f.sigma = e.b * e.b.transpose();
    const Vector sd = f.std_dev();
    for (Eigen::Index m = 0; m < y_mw.size(); ++m) {
        detail::require(std::isfinite(y_mw[m]) && y_mw[m] >= 0.0, "y must be finite and >= 0");
        const double cap = (e.mu[m] + opt.y_max_sigmas * sd[m]) * nominal[m];
        detail::require(y_mw[m] <= cap * (1.0 + 1e-12),
                        "y for line " + g.lines[t.dlr[static_cast<std::size_t>(m)]].id + " exceeds mu + " +
                            std::to_string(opt.y_max_sigmas) + " sigma (" + std::to_string(cap) + " MW)");
    }
    if (opt.schedule_caps_mw)
        detail::require(static_cast<std::size_t>(opt.schedule_caps_mw->size()) == t.dlr.size(),
                        "schedule caps need one entry per DLR line");

    const PolytopeSet w = build_polytope(e, opt.facets_per_2d_cycle, opt.max_dim);
    const Vector y_pu = y_mw.cwiseQuotient(nominal);
    const std::vector<Vector> vertices = detail::policy_vertices(w, y_pu);
    detail::require(!vertices.empty(), "uncertainty set has no vertices");
    for (const auto& v : vertices)
        detail::require((v.array() > 0.0).all(),
                        "uncertainty set has a vertex with a non-positive rating " + detail::format_vector(v));
    const Vector e_mw = truncated_deficit_expectation(f, y_pu).cwiseProduct(nominal);

    detail::PolicyProgram pp;
    const Solution s = detail::solve_policy_program(g, t, vertices, y_mw, e_mw, opt, false, pp);
    if (s.status == SolveStatus::infeasible) {
        std::vector<std::string> lines;
        detail::PolicyProgram ep;
        const Solution el = detail::solve_policy_program(g, t, vertices, y_mw, e_mw, opt, true, ep);
        if (el.optimal())
            for (std::size_t l = 0; l < ep.slack.size(); ++l)
                if (ep.slack[l] >= 0 && el.x[ep.slack[l]] > detail::flow_tolerance(t.nominal[static_cast<Eigen::Index>(l)]))
                    lines.push_back(g.lines[l].id);
        std::string msg = "guarantee y = " + detail::format_vector(y_mw) + " MW cannot be covered by the available reserves";
        if (!lines.empty()) {
            msg += "; binding lines:";
            for (const auto& id : lines) msg += " " + id;
        }
        throw Infeasible(msg, lines);
    }
    if (!s.optimal()) throw NumericalError(std::string("affine procurement solve failed: ") + to_string(s.status));

    const auto ng = static_cast<Eigen::Index>(g.generators.size());
    const auto k = y_mw.size();
    PolicyProcurement r;
    r.vertices = vertices;
    r.expected_deficit_mw = e_mw;
    r.p_gen = s.x.segment(pp.p, ng);
    AffinePolicy& pol = r.policy;
    pol.y = y_mw;
    pol.nominal_mw = nominal;
    pol.d_up = Matrix::Zero(ng, k);
    pol.d_dn = Matrix::Zero(ng, k);
    pol.delta_up = Vector::Zero(ng);
    pol.delta_dn = Vector::Zero(ng);
    for (std::size_t i = 0; i < t.providers.size(); ++i) {
        const auto j = static_cast<Eigen::Index>(t.providers[i]);
        const int ri = static_cast<int>(i);
        for (Eigen::Index m = 0; m < k; ++m) {
            pol.d_up(j, m) = std::max(0.0, s.x[pp.dup + ri * static_cast<int>(k) + static_cast<int>(m)]);
            pol.d_dn(j, m) = std::max(0.0, s.x[pp.ddn + ri * static_cast<int>(k) + static_cast<int>(m)]);
        }
        pol.delta_up[j] = std::max(0.0, s.x[pp.up + ri]);
        pol.delta_dn[j] = std::min(0.0, s.x[pp.dn + ri]);
    }
    pol.d = pol.d_up - pol.d_dn;
    for (auto l : t.dlr) pol.line_ids.push_back(g.lines[l].id);
    for (const auto& gen : g.generators) pol.generator_ids.push_back(gen.id);

    r.cost_dispatch = detail::dispatch_cost(g, r.p_gen);
    r.cost_procurement = detail::procurement_cost(g, pol.delta_up, pol.delta_dn);
    for (Eigen::Index j = 0; j < ng; ++j) {
        const auto& gen = g.generators[static_cast<std::size_t>(j)];
        r.cost_expected_operation +=
            gen.activation_price_up * pol.d_up.row(j).dot(e_mw) + gen.activation_price_down * pol.d_dn.row(j).dot(e_mw);
    }
    return r;
}

/// Candidate guarantees: per line, `points` values evenly spaced in p.u.
/// from the polytope's lowest rating to mu + upper_sigmas * sigma, in MW.
/// The grid is the Cartesian product, in lexicographic order.
inline std::vector<Vector> y_grid(const GridModel& g, const PtdfMatrices& ptdf, const EllipsoidSet& e, int points,
                                  double upper_sigmas = 3.0) {
    detail::require(points >= 1, "y grid needs at least one point per line");
    detail::require_dlr_dim(ptdf, e.dim());
    const detail::GridTerms t(g, ptdf);
    const Vector nominal = detail::dlr_nominal(t);
    const Vector sd = (e.b * e.b.transpose()).diagonal().cwiseMax(0.0).cwiseSqrt();
    const auto k = e.dim();
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(k));
    for (Eigen::Index m = 0; m < k; ++m) {
        const double lo = std::max(0.0, e.mu[m] - e.radius() * sd[m]);
        const double hi = e.mu[m] + upper_sigmas * sd[m];
        auto& axis = axes[static_cast<std::size_t>(m)];
        for (int i = 0; i < points; ++i) {
            const double pu = points == 1 ? hi : lo + (hi - lo) * i / (points - 1);
            if (axis.empty() || pu * nominal[m] > axis.back()) axis.push_back(pu * nominal[m]);
        }
    }
    std::vector<Vector> grid{Vector(k)};
    for (Eigen::Index m = 0; m < k; ++m) {
        std::vector<Vector> next;
        for (const auto& partial : grid)
            for (double v : axes[static_cast<std::size_t>(m)]) {
                Vector y = partial;
                y[m] = v;
                next.push_back(y);
            }
        grid = std::move(next);
    }
    return grid;
}

struct SelectedPolicy {
    Vector y;
    PolicyProcurement procurement;
    std::vector<std::pair<Vector, double>> evaluated;  // feasible candidates and their expected total cost
};

namespace detail {

inline bool lex_less(const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace detail

/// Grid search over guarantees: the candidate with the least expected total
/// cost wins; ties within 1e-9 relative go to the lexicographically
/// smallest y. Candidates are solved on up to `threads` workers; the result
/// does not depend on the worker count.
inline SelectedPolicy select_y(const GridModel& g, const PtdfMatrices& ptdf, const EllipsoidSet& e,
                               std::vector<Vector> grid, const AffineOptions& opt = {}, int threads = 1) {
    detail::require(!grid.empty(), "y grid is empty");
    std::sort(grid.begin(), grid.end(), detail::lex_less);
    std::vector<std::optional<PolicyProcurement>> results(grid.size());
    std::vector<std::string> failures(grid.size());
    auto run = [&](std::size_t i) {
        try {
            results[i] = procure_affine(g, ptdf, e, grid[i], opt);
        } catch (const Infeasible& err) {
            failures[i] = err.what();
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), 1, grid.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) run(i);
    } else {
        std::vector<std::future<void>> jobs;
        for (std::size_t w = 0; w < workers; ++w)
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < grid.size(); i += workers) run(i);
            }));
        for (auto& j : jobs) j.get();
    }

    SelectedPolicy best;
    std::optional<std::size_t> arg;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!results[i]) continue;
        const double cost = results[i]->total_cost();
        best.evaluated.emplace_back(grid[i], cost);
        if (!arg || cost < results[*arg]->total_cost() - 1e-9 * std::abs(results[*arg]->total_cost())) arg = i;
    }
    if (!arg) throw Infeasible("no candidate guarantee y is feasible; first failure: " + failures.front());
    best.y = grid[*arg];
    best.procurement = std::move(*results[*arg]);
    return best;
}

/// Policy export: per generator and DLR line, the slope (MW per MW of
/// deficit) and the threshold y (MW) below which it acts.
inline Json to_json(const PolicyProcurement& r) {
    const AffinePolicy& p = r.policy;
    Json gens = Json::array();
    for (Eigen::Index j = 0; j < p.d.rows(); ++j) {
        Json slopes = Json::array();
        for (Eigen::Index m = 0; m < p.num_lines(); ++m)
            slopes.push_back({{"line", p.line_ids[static_cast<std::size_t>(m)]},
                              {"slope_mw_per_mw", p.d(j, m)},
                              {"slope_up", p.d_up(j, m)},
                              {"slope_dn", p.d_dn(j, m)},
                              {"threshold_mw", p.y[m]}});
        gens.push_back({{"id", p.generator_ids[static_cast<std::size_t>(j)]},
                        {"p_gen_mw", r.p_gen[j]},
                        {"delta_up_mw", p.delta_up[j]},
                        {"delta_dn_mw", p.delta_dn[j]},
                        {"policy", slopes}});
    }
    Json lines = Json::array();
    for (Eigen::Index m = 0; m < p.num_lines(); ++m)
        lines.push_back({{"id", p.line_ids[static_cast<std::size_t>(m)]},
                         {"threshold_mw", p.y[m]},
                         {"nominal_mw", p.nominal_mw[m]},
                         {"expected_deficit_mw", r.expected_deficit_mw[m]}});
    return Json{{"approach", "II"},
                {"cost_dispatch", r.cost_dispatch},
                {"cost_procurement", r.cost_procurement},
                {"cost_expected_operation", r.cost_expected_operation},
                {"procured_mw", r.procured_mw()},
                {"lines", lines},
                {"generators", gens}};
}

/// Reads the export back; the per-generator dispatch and bounds come along.
inline PolicyProcurement policy_from_json(const Json& j) {
    using detail::number_field;
    detail::require(j.is_object() && j.value("approach", "") == "II", "policy file must have approach \"II\"");
    const Json& lines = detail::array_field(j, "lines");
    const Json& gens = detail::array_field(j, "generators");
    const auto k = static_cast<Eigen::Index>(lines.size());
    const auto ng = static_cast<Eigen::Index>(gens.size());
    PolicyProcurement r;
    AffinePolicy& p = r.policy;
    p.y.resize(k);
    p.nominal_mw.resize(k);
    r.expected_deficit_mw.resize(k);
    for (Eigen::Index m = 0; m < k; ++m) {
        const Json& l = lines[static_cast<std::size_t>(m)];
        p.line_ids.push_back(detail::string_field(l, "id", "policy line"));
        p.y[m] = number_field(l, "threshold_mw", "policy line");
        p.nominal_mw[m] = number_field(l, "nominal_mw", "policy line");
        r.expected_deficit_mw[m] = detail::number_field_or(l, "expected_deficit_mw", 0.0, "policy line");
    }
    p.d_up = Matrix::Zero(ng, k);
    p.d_dn = Matrix::Zero(ng, k);
    p.delta_up.resize(ng);
    p.delta_dn.resize(ng);
    r.p_gen.resize(ng);
    for (Eigen::Index jj = 0; jj < ng; ++jj) {
        const Json& gj = gens[static_cast<std::size_t>(jj)];
        p.generator_ids.push_back(detail::string_field(gj, "id", "policy generator"));
        r.p_gen[jj] = number_field(gj, "p_gen_mw", "policy generator");
        p.delta_up[jj] = number_field(gj, "delta_up_mw", "policy generator");
        p.delta_dn[jj] = number_field(gj, "delta_dn_mw", "policy generator");
        const Json& slopes = detail::array_field(gj, "policy");
        detail::require(static_cast<Eigen::Index>(slopes.size()) == k, "each generator needs one slope per DLR line");
        for (Eigen::Index m = 0; m < k; ++m) {
            const Json& s = slopes[static_cast<std::size_t>(m)];
            detail::require(detail::string_field(s, "line", "policy slope") == p.line_ids[static_cast<std::size_t>(m)],
                            "policy slopes must follow the line order");
            p.d_up(jj, m) = number_field(s, "slope_up", "policy slope");
            p.d_dn(jj, m) = number_field(s, "slope_dn", "policy slope");
        }
    }
    p.d = p.d_up - p.d_dn;
    p.validate();
    r.cost_dispatch = detail::number_field_or(j, "cost_dispatch", 0.0, "policy");
    r.cost_procurement = detail::number_field_or(j, "cost_procurement", 0.0, "policy");
    r.cost_expected_operation = detail::number_field_or(j, "cost_expected_operation", 0.0, "policy");
    return r;
}

}  // namespace dlr
