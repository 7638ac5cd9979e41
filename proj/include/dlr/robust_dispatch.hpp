#pragma once

// Approach I: joint robust procurement over the vertices of a polyhedral
// rating set, and the online re-dispatch once a rating is realized.
//
// Units: generator quantities in MW, realized ratings in p.u. of each DLR
// line's nominal rating. Downward quantities are <= 0.

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dlr/convex_solver.hpp"
#include "dlr/errors.hpp"
#include "dlr/network.hpp"
#include "dlr/uncertainty.hpp"

namespace dlr {

namespace detail {

// Relative price perturbation per generator index; makes the cheaper of two
// otherwise identical units the lower-indexed one.
inline constexpr double kTieBreak = 1e-7;
// Weight on per-vertex activation cost that keeps stored actions minimal.
inline constexpr double kActionWeight = 1e-6;

inline double tie(double price, std::size_t j) { return price * (1.0 + kTieBreak * static_cast<double>(j)); }

inline double flow_tolerance(double limit) { return 1e-6 * std::max(1.0, std::abs(limit)); }

/// Sensitivities and base quantities shared by every program over one grid.
struct GridTerms {
    Matrix hg;           // lines x generators: flow per MW injected by each unit
    Vector load_flow;    // lines: flow caused by the loads alone (H * -load)
    Vector nominal;      // lines: limit_mw
    Matrix h;            // lines x buses
    std::vector<std::size_t> dlr;  // line index per DLR row
    std::vector<std::size_t> providers;
    std::vector<std::size_t> gen_bus;  // bus index per generator

    GridTerms(const GridModel& g, const PtdfMatrices& ptdf)
        : hg(ptdf.h_full * g.generator_incidence()),
          h(ptdf.h_full),
          load_flow(-(ptdf.h_full * g.bus_loads())),
          nominal(static_cast<Eigen::Index>(g.lines.size())),
          dlr(ptdf.dlr_line_index),
          providers(g.reserve_providers()) {
        for (std::size_t l = 0; l < g.lines.size(); ++l) nominal[static_cast<Eigen::Index>(l)] = g.lines[l].limit_mw;
        for (const auto& gen : g.generators) gen_bus.push_back(g.bus_index(gen.bus));
    }

    /// Distinct buses hosting the given generators, and per generator its
    /// position in that list.
    std::vector<std::size_t> buses_of(const std::vector<std::size_t>& gens, std::vector<std::size_t>& slot) const {
        std::vector<std::size_t> buses;
        slot.clear();
        for (auto j : gens) {
            auto it = std::find(buses.begin(), buses.end(), gen_bus[j]);
            slot.push_back(static_cast<std::size_t>(it - buses.begin()));
            if (it == buses.end()) buses.push_back(gen_bus[j]);
        }
        return buses;
    }

    /// Per-line limits (MW) with DLR lines set from a p.u. rating vector.
    Vector limits(const Vector& delta_pu) const {
        Vector lim = nominal;
        for (std::size_t r = 0; r < dlr.size(); ++r) {
            const auto l = static_cast<Eigen::Index>(dlr[r]);
            lim[l] = delta_pu[static_cast<Eigen::Index>(r)] * nominal[l];
        }
        return lim;
    }

    Vector flows(const Vector& p_gen) const { return hg * p_gen + load_flow; }
};

/// Adds dispatch variables, their cost and the power balance. Returns the
/// index of the first dispatch variable.
inline int add_dispatch(ProgramBuilder& b, const GridModel& g) {
    const int first = b.add_variables(static_cast<int>(g.generators.size()));
    std::vector<ProgramBuilder::Term> balance;
    for (std::size_t j = 0; j < g.generators.size(); ++j) {
        const auto& gen = g.generators[j];
        const int v = first + static_cast<int>(j);
        b.set_bounds(v, gen.p_min, gen.p_max);
        b.add_linear(v, tie(gen.cost_linear, j));
        if (gen.cost_quadratic > 0.0) b.add_quadratic(v, v, gen.cost_quadratic);
        balance.emplace_back(v, 1.0);
    }
    b.add_eq(balance, g.total_load());
    return first;
}

/// -limit <= base + sum(terms) <= limit, skipping sides that are infinite.
inline void add_two_sided(ProgramBuilder& b, std::vector<ProgramBuilder::Term> terms, double base, double limit) {
    if (!std::isfinite(limit)) return;
    b.add_le(terms, limit - base);
    b.add_ge(terms, -limit - base);
}

inline std::vector<ProgramBuilder::Term> flow_terms(const GridTerms& t, std::size_t line, int p_first,
                                                    const std::vector<std::pair<int, std::size_t>>& extra) {
    std::vector<ProgramBuilder::Term> terms;
    const auto l = static_cast<Eigen::Index>(line);
    for (Eigen::Index j = 0; j < t.hg.cols(); ++j)
        if (t.hg(l, j) != 0.0) terms.emplace_back(p_first + static_cast<int>(j), t.hg(l, j));
    for (const auto& [var, gen] : extra) {
        const double c = t.hg(l, static_cast<Eigen::Index>(gen));
        if (c != 0.0) terms.emplace_back(var, c);
    }
    return terms;
}

inline double dispatch_cost(const GridModel& g, const Vector& p) {
    double c = 0.0;
    for (std::size_t j = 0; j < g.generators.size(); ++j) c += g.generators[j].dispatch_cost(p[static_cast<Eigen::Index>(j)]);
    return c;
}

inline double procurement_cost(const GridModel& g, const Vector& up, const Vector& dn) {
    double c = 0.0;
    for (std::size_t j = 0; j < g.generators.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        c += g.generators[j].procurement_price_up * up[i] - g.generators[j].procurement_price_down * dn[i];
    }
    return c;
}

inline double activation_cost(const GridModel& g, const Vector& plus, const Vector& minus) {
    double c = 0.0;
    for (std::size_t j = 0; j < g.generators.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        c += g.generators[j].activation_price_up * plus[i] - g.generators[j].activation_price_down * minus[i];
    }
    return c;
}

inline std::string format_vector(const Vector& v) {
    std::ostringstream s;
    s << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
    s << ")";
    return s.str();
}

inline void require_dlr_dim(const PtdfMatrices& ptdf, Eigen::Index k) {
    if (static_cast<Eigen::Index>(ptdf.dlr_line_index.size()) != k)
        throw InvalidInput("uncertainty set has " + std::to_string(k) + " lines but the grid has " +
                           std::to_string(ptdf.dlr_line_index.size()) + " DLR lines");
}

}  // namespace detail

struct DispatchResult {
    Vector p_gen;
    double cost = 0.0;
};

/// Deterministic DC-OPF. DLR lines are limited to `dlr_limits_mw` when
/// given, otherwise to their nominal rating.
inline DispatchResult dc_opf(const GridModel& g, const PtdfMatrices& ptdf,
                             const std::optional<Vector>& dlr_limits_mw = std::nullopt,
                             const SolverOptions& options = {}) {
    const detail::GridTerms t(g, ptdf);
    Vector lim = t.nominal;
    if (dlr_limits_mw) {
        detail::require_dlr_dim(ptdf, dlr_limits_mw->size());
        for (std::size_t r = 0; r < t.dlr.size(); ++r) lim[static_cast<Eigen::Index>(t.dlr[r])] = (*dlr_limits_mw)[static_cast<Eigen::Index>(r)];
    }
    ProgramBuilder b;
    const int p = detail::add_dispatch(b, g);
    for (std::size_t l = 0; l < g.lines.size(); ++l)
        detail::add_two_sided(b, detail::flow_terms(t, l, p, {}), t.load_flow[static_cast<Eigen::Index>(l)], lim[static_cast<Eigen::Index>(l)]);
    const Solution s = solve(b.build(), options);
    if (s.status == SolveStatus::infeasible) throw Infeasible("DC-OPF is infeasible at the given line limits");
    if (!s.optimal()) throw NumericalError(std::string("DC-OPF solve failed: ") + to_string(s.status));
    DispatchResult r;
    r.p_gen = s.x.segment(p, static_cast<Eigen::Index>(g.generators.size()));
    r.cost = detail::dispatch_cost(g, r.p_gen);
    return r;
}

struct ProcurementResult {
    Vector p_gen;
    Vector delta_up;  // >= 0
    Vector delta_dn;  // <= 0
    double cost_dispatch = 0.0;
    double cost_procurement = 0.0;
    double cost_worst_case = 0.0;
    double alpha = 0.0;
    std::vector<Vector> vertices;     // p.u.
    std::vector<Vector> vertex_up;    // per vertex, per generator
    std::vector<Vector> vertex_dn;

    double procured_mw() const { return delta_up.sum() - delta_dn.sum(); }
    double objective() const { return cost_dispatch + cost_procurement + alpha * cost_worst_case; }
};

struct RobustOptions {
    /// Upper limits (MW) on the scheduled flow of each DLR line, if any.
    std::optional<Vector> schedule_caps_mw;
    SolverOptions solver;
};

namespace detail {

/// Per scenario (vertex or region vertex), which line-limit rows are present.
using ActiveRows = std::vector<std::vector<char>>;

inline ActiveRows dlr_rows(std::size_t scenarios, std::size_t lines, const std::vector<std::size_t>& dlr) {
    ActiveRows a(scenarios, std::vector<char>(lines, 0));
    for (auto& row : a)
        for (auto l : dlr) row[l] = 1;
    return a;
}

/// Row generation over line limits: solves with the rows in `active`, adds
/// every line whose limit the optimum violates in any scenario (for all
/// scenarios at once) and repeats. The final optimum satisfies every row,
/// so it is optimal for the full program.
template <class SolveFn, class FlowFn>
Solution solve_with_row_generation(ActiveRows& active, const std::vector<Vector>& limits, SolveFn solve_fn,
                                   FlowFn flow_fn) {
    for (int round = 0; round < 100; ++round) {
        Solution s = solve_fn(active);
        if (!s.optimal()) return s;
        std::vector<char> add(active.empty() ? 0 : active[0].size(), 0);
        bool any = false;
        for (std::size_t v = 0; v < active.size(); ++v) {
            const Vector f = flow_fn(s.x, v);
            for (std::size_t l = 0; l < add.size(); ++l) {
                const double lim = limits[v][static_cast<Eigen::Index>(l)];
                if (!active[v][l] && std::abs(f[static_cast<Eigen::Index>(l)]) - lim > 0.1 * flow_tolerance(lim)) {
                    add[l] = 1;
                    any = true;
                }
            }
        }
        if (!any) return s;
        for (auto& row : active)
            for (std::size_t l = 0; l < add.size(); ++l) row[l] |= add[l];
    }
    throw NumericalError("line-limit row generation did not settle");
}

struct VertexProgram {
    int p = 0, up = 0, dn = 0;
    std::vector<int> ap, am;
};

inline Solution solve_vertex_program(const GridModel& g, const GridTerms& t, const std::vector<Vector>& vertices,
                                     double alpha, const RobustOptions& opt, VertexProgram& vp) {
    const auto& prov = t.providers;
    const int nr = static_cast<int>(prov.size());
    std::vector<Vector> limits;
    for (const auto& v : vertices) limits.push_back(t.limits(v));

    std::vector<std::size_t> slot;
    const std::vector<std::size_t> buses = t.buses_of(prov, slot);
    const int nb = static_cast<int>(buses.size());

    // Sparse formulation: F_l carries the scheduled flow of each monitored
    // line and u_{v,b} the re-dispatch injected at bus b under vertex v, so
    // a flow row touches F_l and the provider buses only.
    auto build = [&](const ActiveRows& active) {
        ProgramBuilder b;
        vp.p = add_dispatch(b, g);
        vp.up = b.add_variables(nr);
        vp.dn = b.add_variables(nr);
        for (int r = 0; r < nr; ++r) {
            const auto& gen = g.generators[prov[static_cast<std::size_t>(r)]];
            b.set_bounds(vp.up + r, 0.0, gen.reserve_up_max);
            b.set_bounds(vp.dn + r, gen.reserve_down_max, 0.0);
            b.add_linear(vp.up + r, tie(gen.procurement_price_up, prov[static_cast<std::size_t>(r)]));
            b.add_linear(vp.dn + r, -tie(gen.procurement_price_down, prov[static_cast<std::size_t>(r)]));
        }
        std::vector<int> flow_var(g.lines.size(), -1);
        for (std::size_t l = 0; l < g.lines.size(); ++l) {
            bool used = false;
            for (const auto& row : active) used = used || row[l];
            if (!used) continue;
            flow_var[l] = b.add_variables(1);
            auto terms = flow_terms(t, l, vp.p, {});
            for (auto& term : terms) term.second = -term.second;
            terms.emplace_back(flow_var[l], 1.0);
            b.add_eq(terms, t.load_flow[static_cast<Eigen::Index>(l)]);
        }
        if (opt.schedule_caps_mw) {
            for (std::size_t r = 0; r < t.dlr.size(); ++r) {
                const double cap = (*opt.schedule_caps_mw)[static_cast<Eigen::Index>(r)];
                add_two_sided(b, {{flow_var[t.dlr[r]], 1.0}}, 0.0, cap);
            }
        }
        const int wc = alpha > 0.0 ? b.add_variables(1) : -1;
        if (wc >= 0) b.add_linear(wc, alpha);

        vp.ap.assign(vertices.size(), 0);
        vp.am.assign(vertices.size(), 0);
        for (std::size_t v = 0; v < vertices.size(); ++v) {
            vp.ap[v] = b.add_variables(nr);
            vp.am[v] = b.add_variables(nr);
            const int u = b.add_variables(nb);
            std::vector<std::vector<ProgramBuilder::Term>> bus_rows(static_cast<std::size_t>(nb));
            std::vector<ProgramBuilder::Term> balance, cost;
            for (int r = 0; r < nr; ++r) {
                const std::size_t j = prov[static_cast<std::size_t>(r)];
                const auto& gen = g.generators[j];
                const int a_up = vp.ap[v] + r, a_dn = vp.am[v] + r;
                b.set_bounds(a_up, 0.0, gen.reserve_up_max);
                b.set_bounds(a_dn, gen.reserve_down_max, 0.0);
                b.add_le({{a_up, 1.0}, {vp.up + r, -1.0}}, 0.0);
                b.add_le({{vp.dn + r, 1.0}, {a_dn, -1.0}}, 0.0);
                auto& row = bus_rows[slot[static_cast<std::size_t>(r)]];
                row.emplace_back(a_up, 1.0);
                row.emplace_back(a_dn, 1.0);
                const double cu = tie(gen.activation_price_up, j), cd = tie(gen.activation_price_down, j);
                b.add_linear(a_up, kActionWeight * cu);
                b.add_linear(a_dn, -kActionWeight * cd);
                cost.emplace_back(a_up, cu);
                cost.emplace_back(a_dn, -cd);
            }
            for (int q = 0; q < nb; ++q) {
                auto& row = bus_rows[static_cast<std::size_t>(q)];
                row.emplace_back(u + q, -1.0);
                b.add_eq(row, 0.0);
                balance.emplace_back(u + q, 1.0);
            }
            b.add_eq(balance, 0.0);
            if (wc >= 0) {
                // The vertex cost lives in an equality row so the epigraph
                // inequality stays two-sparse in the barrier Hessian.
                const int cv = b.add_variables(1);
                cost.emplace_back(cv, -1.0);
                b.add_eq(cost, 0.0);
                b.add_le({{cv, 1.0}, {wc, -1.0}}, 0.0);
            }
            for (std::size_t l = 0; l < g.lines.size(); ++l) {
                if (!active[v][l]) continue;
                std::vector<ProgramBuilder::Term> terms{{flow_var[l], 1.0}};
                for (int q = 0; q < nb; ++q) {
                    const double c = t.h(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(buses[static_cast<std::size_t>(q)]));
                    if (c != 0.0) terms.emplace_back(u + q, c);
                }
                add_two_sided(b, terms, 0.0, limits[v][static_cast<Eigen::Index>(l)]);
            }
        }
        return solve(b.build(), opt.solver);
    };
    auto flows_at = [&](const Vector& x, std::size_t v) {
        Vector inj = x.segment(vp.p, static_cast<Eigen::Index>(g.generators.size()));
        for (int r = 0; r < nr; ++r) {
            const auto j = static_cast<Eigen::Index>(prov[static_cast<std::size_t>(r)]);
            inj[j] += x[vp.ap[v] + r] + x[vp.am[v] + r];
        }
        return Vector(t.flows(inj));
    };
    ActiveRows active = dlr_rows(vertices.size(), g.lines.size(), t.dlr);
    return solve_with_row_generation(active, limits, build, flows_at);
}

}  // namespace detail

/// Minimizes dispatch + procurement + alpha * worst-case activation cost
/// such that every vertex of `w` admits a balanced re-dispatch within the
/// procured range that respects all line limits. By convexity the plan
/// covers every rating vector in `w`.
inline ProcurementResult procure_vertex_robust(const GridModel& g, const PtdfMatrices& ptdf, const PolytopeSet& w,
                                               double alpha, const RobustOptions& opt = {}) {
    detail::require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
    detail::require_dlr_dim(ptdf, w.dim());
    detail::require(!w.vertices.empty(), "uncertainty set has no vertices");
    for (const auto& v : w.vertices)
        detail::require((v.array() > 0.0).all(), "uncertainty set has a vertex with a non-positive rating " +
                                                     detail::format_vector(v));
    const detail::GridTerms t(g, ptdf);
    if (opt.schedule_caps_mw)
        detail::require(static_cast<std::size_t>(opt.schedule_caps_mw->size()) == t.dlr.size(),
                        "schedule caps need one entry per DLR line");
    detail::VertexProgram vp;
    const Solution s = detail::solve_vertex_program(g, t, w.vertices, alpha, opt, vp);
    const int p = vp.p, up = vp.up, dn = vp.dn;
    const auto& ap = vp.ap;
    const auto& am = vp.am;

    if (s.status == SolveStatus::infeasible) {
        std::vector<std::string> bad;
        for (std::size_t v = 0; v < w.vertices.size(); ++v) {
            detail::VertexProgram single;
            if (detail::solve_vertex_program(g, t, {w.vertices[v]}, 0.0, opt, single).status ==
                SolveStatus::infeasible)
                bad.push_back("vertex " + std::to_string(v) + " " + detail::format_vector(w.vertices[v]));
        }
        std::string msg = "robust procurement is infeasible";
        msg += bad.empty() ? " (no single vertex is infeasible on its own; the vertices conflict jointly)"
                           : ": reserves cannot cover " + bad.front();
        throw Infeasible(msg, bad);
    }
    if (!s.optimal()) throw NumericalError(std::string("robust procurement solve failed: ") + to_string(s.status));

    const std::size_t ng = g.generators.size();
    ProcurementResult r;
    r.alpha = alpha;
    r.vertices = w.vertices;
    r.p_gen = s.x.segment(p, static_cast<Eigen::Index>(ng));
    r.delta_up = Vector::Zero(static_cast<Eigen::Index>(ng));
    r.delta_dn = Vector::Zero(static_cast<Eigen::Index>(ng));
    for (std::size_t i = 0; i < t.providers.size(); ++i) {
        const auto j = static_cast<Eigen::Index>(t.providers[i]);
        r.delta_up[j] = std::max(0.0, s.x[up + static_cast<int>(i)]);
        r.delta_dn[j] = std::min(0.0, s.x[dn + static_cast<int>(i)]);
    }
    for (std::size_t v = 0; v < w.vertices.size(); ++v) {
        Vector plus = Vector::Zero(static_cast<Eigen::Index>(ng)), minus = Vector::Zero(static_cast<Eigen::Index>(ng));
        for (std::size_t i = 0; i < t.providers.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(t.providers[i]);
            plus[j] = std::clamp(s.x[ap[v] + static_cast<int>(i)], 0.0, r.delta_up[j]);
            minus[j] = std::clamp(s.x[am[v] + static_cast<int>(i)], r.delta_dn[j], 0.0);
        }
        r.cost_worst_case = std::max(r.cost_worst_case, detail::activation_cost(g, plus, minus));
        r.vertex_up.push_back(std::move(plus));
        r.vertex_dn.push_back(std::move(minus));
    }
    r.cost_dispatch = detail::dispatch_cost(g, r.p_gen);
    r.cost_procurement = detail::procurement_cost(g, r.delta_up, r.delta_dn);
    return r;
}

struct RedispatchAction {
    Vector delta_plus;   // >= 0, per generator
    Vector delta_minus;  // <= 0, per generator
    double cost = 0.0;
};

/// Outcome of a re-dispatch that may leave lines overloaded: overloads are
/// priced at `penalty_price` per MW and reported separately from activation.
struct ElasticRedispatch {
    RedispatchAction action;
    double overload_mw = 0.0;
    std::vector<std::string> overloaded_lines;
    bool covered() const { return overloaded_lines.empty(); }
};

namespace detail {

inline std::vector<std::string> overloaded(const GridModel& g, const Vector& flow, const Vector& lim, double& total) {
    std::vector<std::string> out;
    total = 0.0;
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        const auto i = static_cast<Eigen::Index>(l);
        const double excess = std::abs(flow[i]) - lim[i];
        if (excess > flow_tolerance(lim[i])) {
            out.push_back(g.lines[l].id);
            total += excess;
        }
    }
    return out;
}

/// Re-dispatch LP over the generators holding a nonzero procured range.
/// With `penalty` > 0 every line limit gets an elastic slack priced at it.
inline Solution redispatch_program(const GridModel& g, const GridTerms& t, const ProcurementResult& proc,
                                   const Vector& lim, double penalty, std::vector<std::size_t>& active,
                                   const SolverOptions& options) {
    active.clear();
    for (std::size_t j = 0; j < g.generators.size(); ++j)
        if (proc.delta_up[static_cast<Eigen::Index>(j)] > 0.0 || proc.delta_dn[static_cast<Eigen::Index>(j)] < 0.0) active.push_back(j);
    const int na = static_cast<int>(active.size());
    ProgramBuilder b;
    const int plus = b.add_variables(na);
    const int minus = b.add_variables(na);
    std::vector<ProgramBuilder::Term> balance;
    for (int a = 0; a < na; ++a) {
        const std::size_t j = active[static_cast<std::size_t>(a)];
        const auto& gen = g.generators[j];
        b.set_bounds(plus + a, 0.0, proc.delta_up[static_cast<Eigen::Index>(j)]);
        b.set_bounds(minus + a, proc.delta_dn[static_cast<Eigen::Index>(j)], 0.0);
        b.add_linear(plus + a, tie(gen.activation_price_up, j));
        b.add_linear(minus + a, -tie(gen.activation_price_down, j));
        balance.emplace_back(plus + a, 1.0);
        balance.emplace_back(minus + a, 1.0);
    }
    if (na > 0) b.add_eq(balance, 0.0);
    const Vector base = t.flows(proc.p_gen);
    for (std::size_t l = 0; l < g.lines.size(); ++l) {
        const auto li = static_cast<Eigen::Index>(l);
        std::vector<ProgramBuilder::Term> terms;
        for (int a = 0; a < na; ++a) {
            const double c = t.hg(li, static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]));
            if (c != 0.0) {
                terms.emplace_back(plus + a, c);
                terms.emplace_back(minus + a, c);
            }
        }
        // A line no action within the procured range can overload needs no row.
        double reach = std::abs(base[li]);
        for (int a = 0; a < na; ++a) {
            const auto j = static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]);
            reach += std::abs(t.hg(li, j)) * std::max(proc.delta_up[j], -proc.delta_dn[j]);
        }
        if (reach <= lim[li]) continue;
        if (penalty > 0.0) {
            const int s = b.add_variables(1, 0.0, kInf);
            b.add_linear(s, penalty);
            auto hi = terms, lo = terms;
            hi.emplace_back(s, -1.0);
            lo.emplace_back(s, 1.0);
            b.add_le(hi, lim[li] - base[li]);
            b.add_ge(lo, -lim[li] - base[li]);
        } else if (!terms.empty()) {
            add_two_sided(b, terms, base[li], lim[li]);
        } else if (std::abs(base[li]) - lim[li] > flow_tolerance(lim[li])) {
            Solution none;
            none.status = SolveStatus::infeasible;
            return none;
        }
    }
    if (b.num_variables() == 0) {
        Solution empty;
        empty.status = SolveStatus::optimal;
        return empty;
    }
    return solve(b.build(), options);
}

inline RedispatchAction unpack_action(const GridModel& g, const std::vector<std::size_t>& active, const Vector& x,
                                      const ProcurementResult& proc) {
    const auto ng = static_cast<Eigen::Index>(g.generators.size());
    RedispatchAction act{Vector::Zero(ng), Vector::Zero(ng), 0.0};
    const int na = static_cast<int>(active.size());
    for (int a = 0; a < na; ++a) {
        const auto j = static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]);
        act.delta_plus[j] = std::clamp(x[a], 0.0, proc.delta_up[j]);
        act.delta_minus[j] = std::clamp(x[na + a], proc.delta_dn[j], 0.0);
    }
    act.cost = activation_cost(g, act.delta_plus, act.delta_minus);
    return act;
}

}  // namespace detail

/// Least-cost re-dispatch within the procured range for realized DLR
/// ratings `delta_pu`. Returns a zero action when the schedule already
/// respects every limit.
inline RedispatchAction operate_online(const GridModel& g, const PtdfMatrices& ptdf, const ProcurementResult& proc,
                                       const Vector& delta_pu, const SolverOptions& options = {}) {
    detail::require_dlr_dim(ptdf, delta_pu.size());
    detail::require((delta_pu.array() > 0.0).all(), "realized ratings must be > 0");
    const detail::GridTerms t(g, ptdf);
    const auto ng = static_cast<Eigen::Index>(g.generators.size());
    const Vector lim = t.limits(delta_pu);
    double excess = 0.0;
    if (detail::overloaded(g, t.flows(proc.p_gen), lim, excess).empty()) return {Vector::Zero(ng), Vector::Zero(ng), 0.0};

    std::vector<std::size_t> active;
    const Solution s = detail::redispatch_program(g, t, proc, lim, 0.0, active, options);
    if (s.optimal()) return detail::unpack_action(g, active, s.x, proc);
    if (s.status != SolveStatus::infeasible)
        throw NumericalError(std::string("re-dispatch solve failed: ") + to_string(s.status));

    // Name the lines that stay overloaded under the least-overload action.
    const Solution e = detail::redispatch_program(g, t, proc, lim, 1e4, active, options);
    std::vector<std::string> lines;
    if (e.optimal()) {
        const RedispatchAction best = detail::unpack_action(g, active, e.x, proc);
        lines = detail::overloaded(g, t.flows(proc.p_gen + best.delta_plus + best.delta_minus), lim, excess);
    }
    if (lines.empty()) lines = detail::overloaded(g, t.flows(proc.p_gen), lim, excess);
    std::string msg = "realization " + detail::format_vector(delta_pu) + " is not covered by the procured reserves; overloaded:";
    for (const auto& l : lines) msg += " " + l;
    throw UncoveredRealization(msg, lines);
}

/// Like operate_online but never fails on coverage: overloads that the
/// procured range cannot remove are priced at `penalty_price` $/MW.
inline ElasticRedispatch operate_online_elastic(const GridModel& g, const PtdfMatrices& ptdf,
                                                const ProcurementResult& proc, const Vector& delta_pu,
                                                double penalty_price, const SolverOptions& options = {}) {
    detail::require(penalty_price > 0.0, "penalty price must be > 0");
    ElasticRedispatch out;
    try {
        out.action = operate_online(g, ptdf, proc, delta_pu, options);
        return out;
    } catch (const UncoveredRealization&) {
    }
    const detail::GridTerms t(g, ptdf);
    const Vector lim = t.limits(delta_pu);
    std::vector<std::size_t> active;
    const Solution e = detail::redispatch_program(g, t, proc, lim, penalty_price, active, options);
    if (!e.optimal()) throw NumericalError(std::string("elastic re-dispatch solve failed: ") + to_string(e.status));
    out.action = detail::unpack_action(g, active, e.x, proc);
    out.overloaded_lines = detail::overloaded(
        g, t.flows(proc.p_gen + out.action.delta_plus + out.action.delta_minus), lim, out.overload_mw);
    if (out.overloaded_lines.empty()) out.overloaded_lines.push_back("(uncovered)");
    return out;
}

inline Json to_json(const GridModel& g, const ProcurementResult& r) {
    Json gens = Json::array();
    for (std::size_t j = 0; j < g.generators.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        gens.push_back({{"id", g.generators[j].id},
                        {"p_gen_mw", r.p_gen[i]},
                        {"delta_up_mw", r.delta_up[i]},
                        {"delta_dn_mw", r.delta_dn[i]}});
    }
    Json verts = Json::array();
    for (std::size_t v = 0; v < r.vertices.size(); ++v) {
        Json acts = Json::array();
        for (std::size_t j = 0; j < g.generators.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            if (r.vertex_up[v][i] != 0.0 || r.vertex_dn[v][i] != 0.0)
                acts.push_back({{"id", g.generators[j].id}, {"up_mw", r.vertex_up[v][i]}, {"down_mw", r.vertex_dn[v][i]}});
        }
        verts.push_back({{"rating_pu", std::vector<double>(r.vertices[v].data(), r.vertices[v].data() + r.vertices[v].size())},
                         {"actions", acts}});
    }
    return Json{{"approach", "I"},
                {"alpha", r.alpha},
                {"cost_dispatch", r.cost_dispatch},
                {"cost_procurement", r.cost_procurement},
                {"cost_worst_case", r.cost_worst_case},
                {"procured_mw", r.procured_mw()},
                {"generators", gens},
                {"vertices", verts}};
}

/// Reads the schedule and reserve bounds of an exported plan. Generators
/// are matched by id; every grid generator must appear exactly once.
inline ProcurementResult procurement_from_json(const GridModel& g, const Json& j) {
    using detail::number_field;
    detail::require(j.is_object() && j.value("approach", "") == "I", "procurement file must have approach \"I\"");
    const Json& gens = detail::array_field(j, "generators");
    const auto ng = static_cast<Eigen::Index>(g.generators.size());
    detail::require(static_cast<Eigen::Index>(gens.size()) == ng,
                    "procurement lists " + std::to_string(gens.size()) + " generators but the grid has " + std::to_string(ng));
    ProcurementResult r;
    r.p_gen = Vector::Zero(ng);
    r.delta_up = Vector::Zero(ng);
    r.delta_dn = Vector::Zero(ng);
    std::vector<char> seen(g.generators.size(), 0);
    for (const Json& gj : gens) {
        const std::string id = detail::string_field(gj, "id", "procurement generator");
        const auto it = std::find_if(g.generators.begin(), g.generators.end(), [&](const Generator& x) { return x.id == id; });
        detail::require(it != g.generators.end(), "procurement generator '" + id + "' is not in the grid");
        const auto jj = it - g.generators.begin();
        detail::require(!seen[static_cast<std::size_t>(jj)], "procurement generator '" + id + "' appears twice");
        seen[static_cast<std::size_t>(jj)] = 1;
        const std::string where = "procurement generator " + id;
        r.p_gen[jj] = number_field(gj, "p_gen_mw", where);
        r.delta_up[jj] = number_field(gj, "delta_up_mw", where);
        r.delta_dn[jj] = number_field(gj, "delta_dn_mw", where);
        detail::require(r.delta_up[jj] >= 0.0 && r.delta_dn[jj] <= 0.0, where + " has reserve bounds of the wrong sign");
    }
    r.alpha = detail::number_field_or(j, "alpha", 0.0, "procurement");
    r.cost_dispatch = detail::number_field_or(j, "cost_dispatch", detail::dispatch_cost(g, r.p_gen), "procurement");
    r.cost_procurement =
        detail::number_field_or(j, "cost_procurement", detail::procurement_cost(g, r.delta_up, r.delta_dn), "procurement");
    r.cost_worst_case = detail::number_field_or(j, "cost_worst_case", 0.0, "procurement");
    return r;
}

}  // namespace dlr
