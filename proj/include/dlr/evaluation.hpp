#pragma once

#include <cstdio>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dlr/affine_policy.hpp"
#include "dlr/robust_dispatch.hpp"
#include "dlr/uncertainty.hpp"

namespace dlr {

enum class Approach { I, II, both };

inline std::string to_string(Approach a) {
    switch (a) {
        case Approach::I: return "I";
        case Approach::II: return "II";
        case Approach::both: return "both";
    }
    return "?";
}

inline Approach approach_from_string(const std::string& s) {
    if (s == "I" || s == "i" || s == "1") return Approach::I;
    if (s == "II" || s == "ii" || s == "2") return Approach::II;
    if (s == "both") return Approach::both;
    throw InvalidInput("unknown approach '" + s + "' (expected I, II or both)");
}

struct ScenarioConfig {
    RatingForecast forecast;
    double gamma = 0.95;
    double alpha = 0.0;
    Approach approach = Approach::both;
    std::optional<Vector> schedule_caps_mw;  // per DLR line
    std::size_t sample_count = 1000;
    std::uint64_t seed = 1;
    /// Candidate guarantees per DLR line for approach II.
    int y_points = 17;
    /// Price of each MW left uncovered by the corrective action: residual line
    /// overload, plus activation beyond the procured range for approach II.
    double penalty_price = 1e4;
    int facets_per_2d_cycle = 8;
    int threads = 1;
    SolverOptions solver;

    void validate() const {
        using detail::require;
        forecast.validate();
        require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
        require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
        require(sample_count >= 1, "sample_count must be >= 1");
        require(y_points >= 1, "y_points must be >= 1");
        require(std::isfinite(penalty_price) && penalty_price > 0.0, "penalty_price must be > 0");
        require(threads >= 1, "threads must be >= 1");
        if (schedule_caps_mw) {
            require(schedule_caps_mw->size() == forecast.dim(), "flow-limit caps need one entry per DLR line");
            require((schedule_caps_mw->array() > 0.0).all() && schedule_caps_mw->allFinite(), "flow-limit caps must be > 0");
        }
    }
};

/// Costs of one approach. total = dispatch + procurement + mean operational;
/// penalties for uncovered MW are kept apart.
struct ApproachReport {
    std::string name;
    double cost_dispatch = 0.0;
    double procured_mw = 0.0;
    double cost_procurement = 0.0;
    double mean_operational = 0.0;
    double mean_penalty = 0.0;
    double mean_uncovered_mw = 0.0;
    double savings_pct = 0.0;
    std::vector<char> feasible;           // per sample
    std::vector<double> operational_cost;  // per sample, $

    double total() const { return cost_dispatch + cost_procurement + mean_operational; }
    double operational_std_error() const {
        const double n = static_cast<double>(operational_cost.size());
        if (n < 2) return 0.0;
        double ss = 0.0;
        for (double c : operational_cost) ss += (c - mean_operational) * (c - mean_operational);
        return std::sqrt(ss / (n - 1.0) / n);
    }
    double feasibility_rate() const {
        std::size_t n = 0;
        for (char f : feasible) n += f ? 1 : 0;
        return feasible.empty() ? 1.0 : static_cast<double>(n) / static_cast<double>(feasible.size());
    }
};

struct EvaluationReport {
    double status_quo = 0.0;
    std::optional<ApproachReport> approach_i;
    std::optional<ApproachReport> approach_ii;
};

/// DC-OPF with every line at its nominal rating.
inline double status_quo_cost(const GridModel& g, const PtdfMatrices& ptdf) {
    const DispatchResult r = dc_opf(g, ptdf);
    return r.cost;
}

inline double savings_pct(double status_quo, double total) { return 100.0 * (status_quo - total) / status_quo; }

namespace detail {

struct SampleOutcome {
    double operational = 0.0;
    double uncovered_mw = 0.0;  // line overload plus activation beyond the procured range
    bool feasible = true;
};

/// Evaluates `fn(i)` for every sample, on up to `threads` workers. Outcomes
/// are stored by index, so any later reduction runs in a fixed order.
template <class Fn>
std::vector<SampleOutcome> map_samples(std::size_t n, int threads, Fn fn) {
    std::vector<SampleOutcome> out(n);
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += workers) out[i] = fn(i);
        }));
    for (auto& j : jobs) j.get();
    return out;
}

inline void summarize(const std::vector<SampleOutcome>& outcomes, double penalty_price, ApproachReport& r) {
    double op = 0.0, over = 0.0;
    r.feasible.clear();
    r.feasible.reserve(outcomes.size());
    r.operational_cost.clear();
    r.operational_cost.reserve(outcomes.size());
    for (const SampleOutcome& o : outcomes) {
        op += o.operational;
        r.operational_cost.push_back(o.operational);
        over += o.uncovered_mw;
        r.feasible.push_back(o.feasible ? 1 : 0);
    }
    const double n = static_cast<double>(outcomes.size());
    r.mean_operational = op / n;
    r.mean_uncovered_mw = over / n;
    r.mean_penalty = penalty_price * r.mean_uncovered_mw;
}

/// Normal draws can fall at or below zero; a rating cannot.
inline constexpr double kMinRatingPu = 1e-6;

inline Matrix rating_samples(const ScenarioConfig& cfg) {
    const EllipsoidSet e = build_ellipsoid(cfg.forecast, cfg.gamma);
    return sample_normal(e, cfg.sample_count, cfg.seed).cwiseMax(kMinRatingPu);
}

}  // namespace detail

/// Monte Carlo cost of approach I: every sampled rating vector is handled
/// by the least-cost re-dispatch inside the procured range.
inline ApproachReport monte_carlo_eval(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& cfg,
                                       const ProcurementResult& proc) {
    cfg.validate();
    const Matrix s = detail::rating_samples(cfg);
    const auto outcomes = detail::map_samples(static_cast<std::size_t>(s.rows()), cfg.threads, [&](std::size_t i) {
        const ElasticRedispatch e =
            operate_online_elastic(g, ptdf, proc, s.row(static_cast<Eigen::Index>(i)).transpose(), cfg.penalty_price, cfg.solver);
        return detail::SampleOutcome{e.action.cost, e.overload_mw, e.covered()};
    });
    ApproachReport r;
    r.name = "I";
    r.cost_dispatch = proc.cost_dispatch;
    r.cost_procurement = proc.cost_procurement;
    r.procured_mw = proc.procured_mw();
    detail::summarize(outcomes, cfg.penalty_price, r);
    return r;
}

/// Monte Carlo cost of approach II: each agent applies its policy; the
/// activation cost is c_up * D_up d + c_dn * D_dn d. Samples whose action
/// leaves a line overloaded or exceeds the procured range are infeasible.
inline ApproachReport monte_carlo_eval(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& cfg,
                                       const PolicyProcurement& proc) {
    cfg.validate();
    const AffinePolicy& p = proc.policy;
    p.validate();
    detail::require_dlr_dim(ptdf, p.num_lines());
    const detail::GridTerms t(g, ptdf);
    Vector c_up(static_cast<Eigen::Index>(g.generators.size())), c_dn(c_up.size());
    for (std::size_t j = 0; j < g.generators.size(); ++j) {
        c_up[static_cast<Eigen::Index>(j)] = g.generators[j].activation_price_up;
        c_dn[static_cast<Eigen::Index>(j)] = g.generators[j].activation_price_down;
    }
    const Vector unit_cost = p.d_up.transpose() * c_up + p.d_dn.transpose() * c_dn;  // $ per MW of deficit
    const Matrix s = detail::rating_samples(cfg);
    const auto outcomes = detail::map_samples(static_cast<std::size_t>(s.rows()), cfg.threads, [&](std::size_t i) {
        const Vector delta = s.row(static_cast<Eigen::Index>(i)).transpose();
        const Vector d = p.deficit(delta);
        const Vector action = p.d * d;
        double over = 0.0;
        const bool lines_ok = detail::overloaded(g, t.flows(proc.p_gen + action), t.limits(delta), over).empty();
        double range_excess = 0.0;
        for (Eigen::Index j = 0; j < action.size(); ++j)
            range_excess += std::max(0.0, action[j] - p.delta_up[j]) + std::max(0.0, p.delta_dn[j] - action[j]);
        const bool in_range = range_excess <= 1e-6 * std::max(1.0, action.cwiseAbs().sum());
        return detail::SampleOutcome{unit_cost.dot(d), over + range_excess, lines_ok && in_range};
    });
    ApproachReport r;
    r.name = "II";
    r.cost_dispatch = proc.cost_dispatch;
    r.cost_procurement = proc.cost_procurement;
    r.procured_mw = proc.procured_mw();
    detail::summarize(outcomes, cfg.penalty_price, r);
    return r;
}

inline ProcurementResult procure_approach_i(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& cfg) {
    cfg.validate();
    const EllipsoidSet e = build_ellipsoid(cfg.forecast, cfg.gamma);
    const PolytopeSet w = build_polytope(e, cfg.facets_per_2d_cycle);
    RobustOptions opt;
    opt.schedule_caps_mw = cfg.schedule_caps_mw;
    opt.solver = cfg.solver;
    return procure_vertex_robust(g, ptdf, w, cfg.alpha, opt);
}

inline SelectedPolicy procure_approach_ii(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& cfg) {
    cfg.validate();
    const EllipsoidSet e = build_ellipsoid(cfg.forecast, cfg.gamma);
    AffineOptions opt;
    opt.facets_per_2d_cycle = cfg.facets_per_2d_cycle;
    opt.schedule_caps_mw = cfg.schedule_caps_mw;
    opt.solver = cfg.solver;
    return select_y(g, ptdf, e, y_grid(g, ptdf, e, cfg.y_points), opt, cfg.threads);
}

/// Procures with the configured approaches and evaluates each against the
/// same seeded samples. `status_quo` may be passed in to avoid recomputing it.
inline EvaluationReport evaluate(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& cfg,
                                 std::optional<double> status_quo = std::nullopt) {
    cfg.validate();
    EvaluationReport out;
    out.status_quo = status_quo ? *status_quo : status_quo_cost(g, ptdf);
    if (cfg.approach != Approach::II) {
        out.approach_i = monte_carlo_eval(g, ptdf, cfg, procure_approach_i(g, ptdf, cfg));
        out.approach_i->savings_pct = savings_pct(out.status_quo, out.approach_i->total());
    }
    if (cfg.approach != Approach::I) {
        out.approach_ii = monte_carlo_eval(g, ptdf, cfg, procure_approach_ii(g, ptdf, cfg).procurement);
        out.approach_ii->savings_pct = savings_pct(out.status_quo, out.approach_ii->total());
    }
    return out;
}

/// A rectangular result table rendered as CSV with a fixed number format,
/// so equal inputs give equal bytes.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static std::string num(double v) {
        if (std::isnan(v)) return "nan";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
        return buf;
    }

    void add(std::vector<std::string> row) {
        detail::require(row.size() == header.size(), "table row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InvalidInput("table has no column '" + name + "'");
    }

    double value(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }

    void write_csv(std::ostream& os) const {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
            os << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
    }
};

namespace detail {

inline std::vector<std::string> cap_header(const GridModel& g, const PtdfMatrices& ptdf) {
    std::vector<std::string> h;
    for (std::size_t l : ptdf.dlr_line_index) h.push_back("cap_mw_" + g.lines[l].id);
    return h;
}

inline void append_report(Table& t, std::vector<std::string> prefix, const ApproachReport& r) {
    prefix.insert(prefix.end(), {r.name, Table::num(r.procured_mw), Table::num(r.cost_dispatch),
                                 Table::num(r.cost_procurement), Table::num(r.mean_operational),
                                 Table::num(r.total()), Table::num(r.savings_pct), Table::num(r.feasibility_rate()),
                                 Table::num(r.mean_penalty)});
    t.add(std::move(prefix));
}

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> c{"approach",       "procured_mw", "cost_dispatch",
                                            "cost_procurement", "mean_operational", "total_cost",
                                            "savings_pct",    "feasibility_rate", "mean_penalty"};
    return c;
}

}  // namespace detail

/// One row per (caps, approach): procured MW and savings at each cap vector.
inline Table sweep_flow_limits(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& cfg,
                               const std::vector<Vector>& caps_grid) {
    detail::require(!caps_grid.empty(), "flow-limit grid is empty");
    Table t;
    t.header = detail::cap_header(g, ptdf);
    const auto& cols = detail::report_columns();
    t.header.insert(t.header.end(), cols.begin(), cols.end());
    const double sq = status_quo_cost(g, ptdf);
    for (const Vector& caps : caps_grid) {
        ScenarioConfig c = cfg;
        c.schedule_caps_mw = caps;
        std::vector<std::string> prefix;
        for (Eigen::Index m = 0; m < caps.size(); ++m) prefix.push_back(Table::num(caps[m]));
        const EvaluationReport r = evaluate(g, ptdf, c, sq);
        if (r.approach_i) detail::append_report(t, prefix, *r.approach_i);
        if (r.approach_ii) detail::append_report(t, prefix, *r.approach_ii);
    }
    return t;
}

/// One row per (mu, sigma, approach) with independent lines of common mean
/// and standard deviation.
inline Table sweep_mu_sigma(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& cfg,
                            const std::vector<double>& mu_grid, const std::vector<double>& sigma_grid) {
    detail::require(!mu_grid.empty() && !sigma_grid.empty(), "mu and sigma grids must be nonempty");
    Table t;
    t.header = {"mu_pu", "sigma_pu"};
    const auto& cols = detail::report_columns();
    t.header.insert(t.header.end(), cols.begin(), cols.end());
    const double sq = status_quo_cost(g, ptdf);
    for (double mu : mu_grid)
        for (double sd : sigma_grid) {
            ScenarioConfig c = cfg;
            c.forecast = RatingForecast::independent(cfg.forecast.dim(), mu, sd, cfg.forecast.lead_time);
            c.forecast.line_ids = cfg.forecast.line_ids;
            const EvaluationReport r = evaluate(g, ptdf, c, sq);
            if (r.approach_i) detail::append_report(t, {Table::num(mu), Table::num(sd)}, *r.approach_i);
            if (r.approach_ii) detail::append_report(t, {Table::num(mu), Table::num(sd)}, *r.approach_ii);
        }
    return t;
}

/// Settings behind the cost-comparison table: a short and a long lead time
/// that differ only in forecast spread.
struct ComparisonSettings {
    double mu = 1.5;
    double sigma_short = 0.1;
    double sigma_long = 0.2;
    double lead_short = 3.0;
    double lead_long = 24.0;
    double alpha_high = 0.1;
};

struct ComparisonColumn {
    std::string label;
    ApproachReport report;
};

struct Comparison {
    double status_quo = 0.0;
    std::vector<ComparisonColumn> columns;  // II-3h, II-24h, I-3h a0, I-3h a0.1, I-24h a0, I-24h a0.1

    const ApproachReport& at(const std::string& label) const {
        for (const auto& c : columns)
            if (c.label == label) return c.report;
        throw InvalidInput("comparison has no column '" + label + "'");
    }

    /// Rows are cost items, columns the status quo and each setting.
    Table table() const {
        Table t;
        t.header = {"item", "status_quo"};
        for (const auto& c : columns) t.header.push_back(c.label);
        auto row = [&](const std::string& item, const std::string& sq, auto get) {
            std::vector<std::string> r{item, sq};
            for (const auto& c : columns) r.push_back(Table::num(get(c.report)));
            t.add(std::move(r));
        };
        row("dispatch_cost", Table::num(status_quo), [](const ApproachReport& r) { return r.cost_dispatch; });
        row("procured_mw", "", [](const ApproachReport& r) { return r.procured_mw; });
        row("procurement_cost", "", [](const ApproachReport& r) { return r.cost_procurement; });
        row("mean_operational_cost", "", [](const ApproachReport& r) { return r.mean_operational; });
        row("total_cost", Table::num(status_quo), [](const ApproachReport& r) { return r.total(); });
        row("savings_pct", Table::num(0.0), [](const ApproachReport& r) { return r.savings_pct; });
        return t;
    }
};

namespace detail {

inline std::string alpha_label(double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", a);
    return buf;
}

inline std::string hours_label(double h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%gh", h);
    return buf;
}

}  // namespace detail

/// Evaluates both approaches at both lead times (and approach I at two
/// alphas), each against the same seeded samples of its own forecast.
inline Comparison compare_approaches(const GridModel& g, const PtdfMatrices& ptdf, const ScenarioConfig& base,
                                     const ComparisonSettings& s = {}) {
    Comparison out;
    out.status_quo = status_quo_cost(g, ptdf);
    const auto k = base.forecast.dim();
    auto config = [&](double sd, double lead, double alpha, Approach a) {
        ScenarioConfig c = base;
        c.forecast = RatingForecast::independent(k, s.mu, sd, lead);
        c.forecast.line_ids = base.forecast.line_ids;
        c.alpha = alpha;
        c.approach = a;
        return c;
    };
    const std::pair<double, double> leads[] = {{s.sigma_short, s.lead_short}, {s.sigma_long, s.lead_long}};
    for (const auto& [sd, lead] : leads) {
        const EvaluationReport r = evaluate(g, ptdf, config(sd, lead, 0.0, Approach::II), out.status_quo);
        out.columns.push_back({"II-" + detail::hours_label(lead), *r.approach_ii});
    }
    for (const auto& [sd, lead] : leads)
        for (double alpha : {0.0, s.alpha_high}) {
            const EvaluationReport r = evaluate(g, ptdf, config(sd, lead, alpha, Approach::I), out.status_quo);
            out.columns.push_back({"I-" + detail::hours_label(lead) + "-a" + detail::alpha_label(alpha), *r.approach_i});
        }
    return out;
}

/// Contour-ready (x, y, z) triples from two numeric columns and a value
/// column, restricted to rows whose `filter_column` equals `filter_value`.
inline Table plot_triples(const Table& t, const std::string& x, const std::string& y, const std::string& z,
                          const std::string& filter_column = "", const std::string& filter_value = "") {
    Table out;
    out.header = {"x", "y", "z"};
    const std::size_t ix = t.column(x), iy = t.column(y), iz = t.column(z);
    const std::optional<std::size_t> f = filter_column.empty() ? std::nullopt : std::optional(t.column(filter_column));
    for (const auto& r : t.rows) {
        if (f && r[*f] != filter_value) continue;
        out.add({r[ix], r[iy], r[iz]});
    }
    return out;
}

inline Json to_json(const ApproachReport& r) {
    return Json{{"approach", r.name},
                {"cost_dispatch", r.cost_dispatch},
                {"procured_mw", r.procured_mw},
                {"cost_procurement", r.cost_procurement},
                {"mean_operational", r.mean_operational},
                {"total_cost", r.total()},
                {"savings_pct", r.savings_pct},
                {"feasibility_rate", r.feasibility_rate()},
                {"mean_uncovered_mw", r.mean_uncovered_mw},
                {"mean_penalty", r.mean_penalty}};
}

}  // namespace dlr
