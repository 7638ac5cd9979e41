#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dlr/affine_policy.hpp"
#include "dlr/evaluation.hpp"
#include "dlr/records.hpp"
#include "dlr/robust_dispatch.hpp"
#include "dlr/thermal.hpp"

namespace dlr::cli {

/// Process exit codes. Stable across platforms.
enum ExitCode : int { kOk = 0, kInfeasible = 2, kInputError = 3, kNumericalFailure = 4 };

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::infeasible:
        case ErrorKind::uncovered_realization: return kInfeasible;
        case ErrorKind::numerical: return kNumericalFailure;
        case ErrorKind::invalid_input:
        case ErrorKind::degenerate_spec:
        case ErrorKind::capacity: return kInputError;
    }
    return kNumericalFailure;
}

/// Comma-separated numbers; an item "a:b:step" expands to a, a+step, ... <= b.
inline std::vector<double> parse_values(const std::string& text, const std::string& what) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v)) throw InvalidInput(what + ": '" + s + "' is not a number");
        return v;
    };
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) throw InvalidInput(what + ": empty entry in '" + text + "'");
        const auto c1 = item.find(':');
        if (c1 == std::string::npos) {
            out.push_back(number(item));
            continue;
        }
        const auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string::npos) throw InvalidInput(what + ": range '" + item + "' must be start:stop:step");
        const double a = number(item.substr(0, c1)), b = number(item.substr(c1 + 1, c2 - c1 - 1)),
                     step = number(item.substr(c2 + 1));
        if (!(step > 0.0) || b < a) throw InvalidInput(what + ": range '" + item + "' needs step > 0 and stop >= start");
        for (long i = 0;; ++i) {
            const double v = a + static_cast<double>(i) * step;
            if (v > b + 1e-9 * step) break;
            out.push_back(v);
        }
    }
    if (out.empty()) throw InvalidInput(what + ": no values given");
    return out;
}

inline Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<Vector> cartesian(const std::vector<std::vector<double>>& axes) {
    std::vector<Vector> grid{Vector(static_cast<Eigen::Index>(axes.size()))};
    for (std::size_t m = 0; m < axes.size(); ++m) {
        std::vector<Vector> next;
        for (const Vector& partial : grid)
            for (double v : axes[m]) {
                Vector x = partial;
                x[static_cast<Eigen::Index>(m)] = v;
                next.push_back(std::move(x));
            }
        grid = std::move(next);
    }
    return grid;
}

inline std::filesystem::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw InvalidInput("cannot create output directory '" + dir + "'");
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidInput("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw InvalidInput("failed writing '" + path.string() + "'");
}

inline std::string csv(const Table& t) {
    std::ostringstream os;
    t.write_csv(os);
    return os.str();
}

inline std::vector<std::string> dlr_ids(const GridModel& g, const PtdfMatrices& ptdf) {
    std::vector<std::string> ids;
    for (std::size_t l : ptdf.dlr_line_index) ids.push_back(g.lines[l].id);
    return ids;
}

/// The forecast must describe exactly the grid's DLR lines, in order.
inline void check_forecast(const GridModel& g, const PtdfMatrices& ptdf, const RatingForecast& f) {
    const auto ids = dlr_ids(g, ptdf);
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
        return s;
    };
    if (static_cast<std::size_t>(f.dim()) != ids.size() || (!f.line_ids.empty() && f.line_ids != ids))
        throw InvalidInput("forecast lines [" + join(f.line_ids) + "] (" + std::to_string(f.dim()) +
                           " entries) do not match the grid's DLR lines [" + join(ids) + "]");
}

struct Loaded {
    GridModel g;
    PtdfMatrices ptdf;
};

inline Loaded load(const std::string& grid_path) {
    Loaded l{load_grid(grid_path), {}};
    l.ptdf = compute_ptdf(l.g);
    return l;
}

// ---------------------------------------------------------------- rate

struct RateArgs {
    std::string weather, conductor, out;
    double voltage_kv = 0.0;
};

inline int cmd_rate(const RateArgs& a, std::ostream& out) {
    const std::vector<WeatherSample> rows = load_weather(a.weather);
    const Json j = load_json_file(a.conductor);
    std::optional<LineRatingSpec> spec;
    ConductorParams c;
    if (j.is_object() && j.contains("conductor")) {
        spec = rating_spec_from_json(j, a.conductor);
        c = spec->conductor;
    } else {
        c = conductor_from_json(j, a.conductor);
        c.validate();
    }
    const double base = ampacity(spec ? spec->nlr_weather : default_nlr_weather(), c);
    if (!(base > 0.0)) throw DegenerateSpec("zero ampacity at NLR weather; per-unit rating undefined");
    const bool has_mw = spec || a.voltage_kv > 0.0;
    std::ostringstream os;
    if (!rows.empty()) {
        os << "row,wind_speed,wind_angle,ambient_temperature,solar_irradiance,ampacity_a,rating_pu"
           << (has_mw ? ",rating_mw" : "") << '\n';
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const WeatherSample& w = rows[i];
            const double amps = ampacity(w, c);
            const double pu = amps / base;
            os << i + 1 << ',' << Table::num(w.wind_speed) << ',' << Table::num(w.wind_angle) << ','
               << Table::num(w.ambient_temperature) << ',' << Table::num(w.solar_irradiance) << ',' << Table::num(amps)
               << ',' << Table::num(pu);
            if (spec) os << ',' << Table::num(pu * spec->nominal_rating_mw);
            else if (has_mw) os << ',' << Table::num(std::sqrt(3.0) * a.voltage_kv * amps * 1e-3);
            os << '\n';
        }
    }
    if (a.out.empty()) out << os.str();
    else write_file(a.out, os.str());
    return kOk;
}

// ---------------------------------------------------------------- procure

struct ProcureArgs {
    std::string grid, forecast, out;
    std::string approach = "I";
    double gamma = 0.95;
    double alpha = 0.0;
    std::string y;       // one candidate guarantee, MW per DLR line
    int y_points = 17;
    std::string caps;    // MW per DLR line
    int facets = 8;
};

inline int cmd_procure(const ProcureArgs& a, int threads, std::ostream& out) {
    const Loaded l = load(a.grid);
    const RatingForecast f = load_forecast(a.forecast);
    check_forecast(l.g, l.ptdf, f);
    const Approach approach = approach_from_string(a.approach);
    detail::require(approach != Approach::both, "procure needs approach I or II");
    std::optional<Vector> caps;
    if (!a.caps.empty()) caps = to_vector(parse_values(a.caps, "--caps"));
    const auto dir = prepare_dir(a.out);
    const EllipsoidSet e = build_ellipsoid(f, a.gamma);
    if (approach == Approach::I) {
        RobustOptions opt;
        opt.schedule_caps_mw = caps;
        const ProcurementResult r = procure_vertex_robust(l.g, l.ptdf, build_polytope(e, a.facets), a.alpha, opt);
        write_file(dir / "procurement.json", to_json(l.g, r).dump(2) + "\n");
        out << "approach I: dispatch " << Table::num(r.cost_dispatch) << " procurement " << Table::num(r.cost_procurement)
            << " procured_mw " << Table::num(r.procured_mw()) << '\n';
        return kOk;
    }
    AffineOptions opt;
    opt.facets_per_2d_cycle = a.facets;
    opt.schedule_caps_mw = caps;
    std::vector<Vector> grid;
    if (!a.y.empty()) {
        const Vector y = to_vector(parse_values(a.y, "--y"));
        detail::require(y.size() == f.dim(), "--y needs one value per DLR line");
        grid.push_back(y);
    } else {
        grid = y_grid(l.g, l.ptdf, e, a.y_points);
    }
    const SelectedPolicy s = select_y(l.g, l.ptdf, e, grid, opt, threads);
    write_file(dir / "procurement.json", to_json(s.procurement).dump(2) + "\n");
    Table cand;
    for (const auto& id : dlr_ids(l.g, l.ptdf)) cand.header.push_back("y_mw_" + id);
    cand.header.push_back("total_cost");
    for (const auto& [y, cost] : s.evaluated) {
        std::vector<std::string> row;
        for (Eigen::Index m = 0; m < y.size(); ++m) row.push_back(Table::num(y[m]));
        row.push_back(Table::num(cost));
        cand.add(std::move(row));
    }
    write_file(dir / "candidates.csv", csv(cand));
    const PolicyProcurement& r = s.procurement;
    out << "approach II: dispatch " << Table::num(r.cost_dispatch) << " procurement " << Table::num(r.cost_procurement)
        << " expected_operation " << Table::num(r.cost_expected_operation) << " procured_mw "
        << Table::num(r.procured_mw()) << '\n';
    return kOk;
}

// ---------------------------------------------------------------- artifacts

/// A procurement artifact of either approach, checked against the grid.
struct Artifact {
    std::optional<ProcurementResult> i;
    std::optional<PolicyProcurement> ii;
};

inline Artifact load_artifact(const GridModel& g, const PtdfMatrices& ptdf, const std::string& path) {
    const Json j = load_json_file(path);
    const std::string approach = j.is_object() ? j.value("approach", "") : "";
    Artifact a;
    try {
        if (approach == "I") {
            a.i = procurement_from_json(g, j);
        } else if (approach == "II") {
            a.ii = policy_from_json(j);
            std::vector<std::string> ids;
            for (const auto& gen : g.generators) ids.push_back(gen.id);
            detail::require(a.ii->policy.generator_ids == ids, "policy generators do not match the grid's generators");
            detail::require(a.ii->policy.line_ids == dlr_ids(g, ptdf), "policy lines do not match the grid's DLR lines");
        } else {
            throw InvalidInput("'approach' must be \"I\" or \"II\"");
        }
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
    return a;
}

// ---------------------------------------------------------------- operate

struct OperateArgs {
    std::string grid, procurement, rating, out;
};

inline int cmd_operate(const OperateArgs& a, std::ostream& out) {
    const Loaded l = load(a.grid);
    const Artifact art = load_artifact(l.g, l.ptdf, a.procurement);
    const Vector delta = to_vector(parse_values(a.rating, "--rating"));
    detail::require_dlr_dim(l.ptdf, delta.size());
    Json actions = Json::array();
    Json doc;
    if (art.i) {
        const RedispatchAction act = operate_online(l.g, l.ptdf, *art.i, delta);
        for (std::size_t j = 0; j < l.g.generators.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            if (act.delta_plus[i] != 0.0 || act.delta_minus[i] != 0.0)
                actions.push_back({{"id", l.g.generators[j].id}, {"up_mw", act.delta_plus[i]}, {"down_mw", act.delta_minus[i]}});
        }
        doc = {{"approach", "I"}, {"cost", act.cost}};
    } else {
        const AffinePolicy& p = art.ii->policy;
        const Vector d = p.deficit(delta);
        const Vector change = p.d * d;
        double cost = 0.0;
        for (std::size_t j = 0; j < l.g.generators.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            const auto& gen = l.g.generators[j];
            cost += gen.activation_price_up * p.d_up.row(i).dot(d) + gen.activation_price_down * p.d_dn.row(i).dot(d);
            if (change[i] != 0.0) actions.push_back({{"id", gen.id}, {"change_mw", change[i]}});
        }
        const detail::GridTerms t(l.g, l.ptdf);
        double over = 0.0;
        const auto lines = detail::overloaded(l.g, t.flows(art.ii->p_gen + change), t.limits(delta), over);
        if (!lines.empty()) {
            std::string msg = "realization " + detail::format_vector(delta) + " is not covered by the policy; overloaded:";
            for (const auto& id : lines) msg += " " + id;
            throw UncoveredRealization(msg, lines);
        }
        doc = {{"approach", "II"}, {"cost", cost}};
    }
    doc["rating_pu"] = std::vector<double>(delta.data(), delta.data() + delta.size());
    doc["actions"] = actions;
    if (a.out.empty()) out << doc.dump(2) << '\n';
    else write_file(a.out, doc.dump(2) + "\n");
    return kOk;
}

// ---------------------------------------------------------------- evaluate / sweep

struct EvalArgs {
    std::string grid, forecast, procurement, out;
    bool summary = false;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    double penalty = 1e4;
    double gamma = 0.95;
    int y_points = 17;
    double mu = 1.5, sigma_short = 0.1, sigma_long = 0.2, alpha_high = 0.1;
};

inline ScenarioConfig base_config(std::size_t samples, std::uint64_t seed, double penalty, double gamma, int y_points,
                                  int threads) {
    ScenarioConfig c;
    c.sample_count = samples;
    c.seed = seed;
    c.penalty_price = penalty;
    c.gamma = gamma;
    c.y_points = y_points;
    c.threads = threads;
    return c;
}

inline int cmd_evaluate(const EvalArgs& a, int threads, std::ostream& out) {
    const Loaded l = load(a.grid);
    ScenarioConfig cfg = base_config(a.samples, a.seed, a.penalty, a.gamma, a.y_points, threads);
    const auto dir = prepare_dir(a.out);
    if (a.summary) {
        const auto ids = dlr_ids(l.g, l.ptdf);
        cfg.forecast = RatingForecast::independent(static_cast<Eigen::Index>(ids.size()), a.mu, a.sigma_long);
        cfg.forecast.line_ids = ids;
        ComparisonSettings s;
        s.mu = a.mu;
        s.sigma_short = a.sigma_short;
        s.sigma_long = a.sigma_long;
        s.alpha_high = a.alpha_high;
        const Comparison cmp = compare_approaches(l.g, l.ptdf, cfg, s);
        write_file(dir / "summary.csv", csv(cmp.table()));
        for (const auto& c : cmp.columns)
            out << c.label << ": total " << Table::num(c.report.total()) << " savings_pct " << Table::num(c.report.savings_pct)
                << '\n';
        return kOk;
    }
    detail::require(!a.forecast.empty() && !a.procurement.empty(), "evaluate needs --forecast and --procurement (or --summary)");
    cfg.forecast = load_forecast(a.forecast);
    check_forecast(l.g, l.ptdf, cfg.forecast);
    const Artifact art = load_artifact(l.g, l.ptdf, a.procurement);
    ApproachReport r = art.i ? monte_carlo_eval(l.g, l.ptdf, cfg, *art.i) : monte_carlo_eval(l.g, l.ptdf, cfg, *art.ii);
    const double sq = status_quo_cost(l.g, l.ptdf);
    r.savings_pct = savings_pct(sq, r.total());
    Table t;
    t.header = {"status_quo"};
    const auto& cols = detail::report_columns();
    t.header.insert(t.header.end(), cols.begin(), cols.end());
    detail::append_report(t, {Table::num(sq)}, r);
    write_file(dir / "evaluation.csv", csv(t));
    Table s;
    s.header = {"sample"};
    for (const auto& id : dlr_ids(l.g, l.ptdf)) s.header.push_back("rating_pu_" + id);
    s.header.insert(s.header.end(), {"operational_cost", "feasible"});
    const Matrix deltas = detail::rating_samples(cfg);
    for (Eigen::Index i = 0; i < deltas.rows(); ++i) {
        std::vector<std::string> row{std::to_string(i)};
        for (Eigen::Index m = 0; m < deltas.cols(); ++m) row.push_back(Table::num(deltas(i, m)));
        row.push_back(Table::num(r.operational_cost[static_cast<std::size_t>(i)]));
        row.push_back(r.feasible[static_cast<std::size_t>(i)] ? "1" : "0");
        s.add(std::move(row));
    }
    write_file(dir / "samples.csv", csv(s));
    out << "approach " << r.name << ": total " << Table::num(r.total()) << " savings_pct " << Table::num(r.savings_pct)
        << " feasibility " << Table::num(r.feasibility_rate()) << '\n';
    return kOk;
}

struct SweepArgs {
    std::string grid, forecast, out;
    std::string kind = "flow-limits";
    std::string approach = "both";
    std::vector<std::string> caps;  // one value list per DLR line
    std::string mu = "1.25,1.5,1.75";
    std::string sigma = "0.05:0.3:0.05";
    double alpha = 0.0;
    double gamma = 0.95;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    double penalty = 1e4;
    int y_points = 17;
    bool plot_data = false;
};

inline int cmd_sweep(const SweepArgs& a, int threads, std::ostream& out) {
    const Loaded l = load(a.grid);
    ScenarioConfig cfg = base_config(a.samples, a.seed, a.penalty, a.gamma, a.y_points, threads);
    cfg.alpha = a.alpha;
    cfg.approach = approach_from_string(a.approach);
    cfg.forecast = load_forecast(a.forecast);
    check_forecast(l.g, l.ptdf, cfg.forecast);
    const auto dir = prepare_dir(a.out);
    const auto ids = dlr_ids(l.g, l.ptdf);
    std::vector<std::string> approaches;
    if (cfg.approach != Approach::II) approaches.push_back("I");
    if (cfg.approach != Approach::I) approaches.push_back("II");
    if (a.kind == "flow-limits") {
        detail::require(a.caps.size() == ids.size(), "--caps must be given once per DLR line (" + std::to_string(ids.size()) + ")");
        std::vector<std::vector<double>> axes;
        for (const auto& c : a.caps) axes.push_back(parse_values(c, "--caps"));
        const Table t = sweep_flow_limits(l.g, l.ptdf, cfg, cartesian(axes));
        write_file(dir / "sweep_flow_limits.csv", csv(t));
        if (a.plot_data) {
            const std::string y = ids.size() > 1 ? t.header[1] : t.header[0];
            for (const auto& ap : approaches)
                for (const char* z : {"savings_pct", "procured_mw"})
                    write_file(dir / ("plot_flow_limits_" + ap + "_" + z + ".csv"), csv(plot_triples(t, t.header[0], y, z, "approach", ap)));
        }
        out << "flow-limit sweep: " << t.rows.size() << " rows\n";
        return kOk;
    }
    if (a.kind == "mu-sigma") {
        const Table t = sweep_mu_sigma(l.g, l.ptdf, cfg, parse_values(a.mu, "--mu"), parse_values(a.sigma, "--sigma"));
        write_file(dir / "sweep_mu_sigma.csv", csv(t));
        if (a.plot_data)
            for (const auto& ap : approaches)
                for (const char* z : {"savings_pct", "mean_operational"})
                    write_file(dir / ("plot_mu_sigma_" + ap + "_" + z + ".csv"), csv(plot_triples(t, "sigma_pu", "mu_pu", z, "approach", ap)));
        out << "mu-sigma sweep: " << t.rows.size() << " rows\n";
        return kOk;
    }
    throw InvalidInput("unknown sweep kind '" + a.kind + "' (expected flow-limits or mu-sigma)");
}

// ---------------------------------------------------------------- entry point

inline int default_threads() {
    const char* v = std::getenv("DLR_THREADS");
    if (!v || !*v) return 1;
    try {
        return std::max(1, std::stoi(v));
    } catch (const std::exception&) {
        return 1;
    }
}

/// Parses `argv`, runs one subcommand, and maps failures onto exit codes.
/// The effective settings of commands with an output directory are saved
/// there as manifest.toml, which `--manifest` replays.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Robust reserve planning for grids with dynamic line ratings", "dlr"};
    app.set_config("--manifest", "", "Replay a run manifest (TOML) written by an earlier run");
    int threads = default_threads();
    app.add_option("--threads", threads, "Worker threads (default: $DLR_THREADS or 1); results do not depend on it")
        ->check(CLI::Range(1, 256))
        ->configurable(false);
    app.require_subcommand(1);

    RateArgs ra;
    auto* rate = app.add_subcommand("rate", "Ampacity and per-unit rating for each weather row")->configurable();
    rate->add_option("--weather", ra.weather, "Weather samples (CSV or JSON)")->required()->check(CLI::ExistingFile);
    rate->add_option("--conductor", ra.conductor, "Conductor parameters or a full rating spec (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    rate->add_option("--voltage-kv", ra.voltage_kv, "Line voltage for MW output when the file has no rating spec")
        ->check(CLI::PositiveNumber);
    rate->add_option("--out", ra.out, "Output CSV (default: stdout)");

    ProcureArgs pa;
    auto* procure = app.add_subcommand("procure", "Plan dispatch and reserves robust to the forecast")->configurable();
    procure->add_option("--grid", pa.grid, "Grid model (JSON)")->required()->check(CLI::ExistingFile);
    procure->add_option("--forecast", pa.forecast, "Rating forecast (JSON)")->required()->check(CLI::ExistingFile);
    procure->add_option("--approach", pa.approach, "I (vertex re-dispatch) or II (affine policy)")
        ->check(CLI::IsMember({"I", "II"}))
        ->capture_default_str();
    procure->add_option("--gamma", pa.gamma, "Probability mass of the uncertainty set")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6))
        ->capture_default_str();
    procure->add_option("--alpha", pa.alpha, "Weight on worst-case activation cost (approach I)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    procure->add_option("--y", pa.y, "Approach II: a single guarantee, MW per DLR line (comma-separated)");
    procure->add_option("--y-points", pa.y_points, "Approach II: candidate guarantees per DLR line")
        ->check(CLI::Range(1, 1000))
        ->capture_default_str();
    procure->add_option("--caps", pa.caps, "Upper flow limits, MW per DLR line (comma-separated)");
    procure->add_option("--facets", pa.facets, "Halfspaces per full turn of each 2-D face")
        ->check(CLI::Range(3, 360))
        ->capture_default_str();
    procure->add_option("--out", pa.out, "Output directory")->required();

    OperateArgs oa;
    auto* operate = app.add_subcommand("operate", "Corrective action for one realized rating vector")->configurable();
    operate->add_option("--grid", oa.grid, "Grid model (JSON)")->required()->check(CLI::ExistingFile);
    operate->add_option("--procurement", oa.procurement, "procurement.json from 'procure'")
        ->required()
        ->check(CLI::ExistingFile);
    operate->add_option("--rating", oa.rating, "Realized ratings, p.u. per DLR line (comma-separated)")->required();
    operate->add_option("--out", oa.out, "Output JSON (default: stdout)");

    EvalArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo cost of a plan, or the two-approach summary")->configurable();
    evaluate->add_option("--grid", ea.grid, "Grid model (JSON)")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--forecast", ea.forecast, "Rating forecast the samples are drawn from")->check(CLI::ExistingFile);
    evaluate->add_option("--procurement", ea.procurement, "procurement.json from 'procure'")->check(CLI::ExistingFile);
    evaluate->add_flag("--summary", ea.summary, "Compare both approaches at a short and a long lead time");
    evaluate->add_option("--samples", ea.samples, "Monte Carlo samples")->check(CLI::Range(1, 100000000))->capture_default_str();
    evaluate->add_option("--seed", ea.seed, "Sampling seed")->capture_default_str();
    evaluate->add_option("--penalty", ea.penalty, "Price per uncovered MW")->check(CLI::PositiveNumber)->capture_default_str();
    evaluate->add_option("--gamma", ea.gamma, "Summary: probability mass of the uncertainty set")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6))
        ->capture_default_str();
    evaluate->add_option("--y-points", ea.y_points, "Summary: candidate guarantees per DLR line")
        ->check(CLI::Range(1, 1000))
        ->capture_default_str();
    evaluate->add_option("--mu", ea.mu, "Summary: mean rating, p.u.")->check(CLI::PositiveNumber)->capture_default_str();
    evaluate->add_option("--sigma-short", ea.sigma_short, "Summary: rating std. dev. at the short lead time, p.u.")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    evaluate->add_option("--sigma-long", ea.sigma_long, "Summary: rating std. dev. at the long lead time, p.u.")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    evaluate->add_option("--alpha-high", ea.alpha_high, "Summary: the nonzero alpha for approach I")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    evaluate->add_option("--out", ea.out, "Output directory")->required();

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "Parameter sweeps over flow limits or forecast mean and spread")->configurable();
    sweep->add_option("--grid", sa.grid, "Grid model (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--forecast", sa.forecast, "Base rating forecast (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--kind", sa.kind, "flow-limits or mu-sigma")
        ->check(CLI::IsMember({"flow-limits", "mu-sigma"}))
        ->capture_default_str();
    sweep->add_option("--approach", sa.approach, "I, II or both")->check(CLI::IsMember({"I", "II", "both"}))->capture_default_str();
    sweep->add_option("--caps", sa.caps, "Flow-limit values for one DLR line, e.g. 250:400:25; repeat per line");
    sweep->add_option("--mu", sa.mu, "Mean ratings, p.u. (list or start:stop:step)")->capture_default_str();
    sweep->add_option("--sigma", sa.sigma, "Rating std. devs., p.u. (list or start:stop:step)")->capture_default_str();
    sweep->add_option("--alpha", sa.alpha, "Weight on worst-case activation cost (approach I)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sweep->add_option("--gamma", sa.gamma, "Probability mass of the uncertainty set")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6))
        ->capture_default_str();
    sweep->add_option("--samples", sa.samples, "Monte Carlo samples per point")->check(CLI::Range(1, 100000000))->capture_default_str();
    sweep->add_option("--seed", sa.seed, "Sampling seed")->capture_default_str();
    sweep->add_option("--penalty", sa.penalty, "Price per uncovered MW")->check(CLI::PositiveNumber)->capture_default_str();
    sweep->add_option("--y-points", sa.y_points, "Candidate guarantees per DLR line (approach II)")
        ->check(CLI::Range(1, 1000))
        ->capture_default_str();
    sweep->add_flag("--emit-plot-data", sa.plot_data, "Also write (x, y, z) triples for contour plots");
    sweep->add_option("--out", sa.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    auto save_manifest = [&](const CLI::App* sub, const std::string& dir) {
        write_file(std::filesystem::path(dir) / "manifest.toml",
                   "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false));
    };
    try {
        int code = kOk;
        if (*rate) {
            code = cmd_rate(ra, out);
        } else if (*procure) {
            code = cmd_procure(pa, threads, out);
            save_manifest(procure, pa.out);
        } else if (*operate) {
            code = cmd_operate(oa, out);
        } else if (*evaluate) {
            code = cmd_evaluate(ea, threads, out);
            save_manifest(evaluate, ea.out);
        } else if (*sweep) {
            code = cmd_sweep(sa, threads, out);
            save_manifest(sweep, sa.out);
        }
        return code;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

}  // namespace dlr::cli
