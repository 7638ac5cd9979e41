#pragma once

// Grid model, DC power flow sensitivities (PTDF) and the DLR/NLR split of
// line flow constraints.

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlr/convex_solver.hpp"
#include "dlr/errors.hpp"
#include "dlr/records.hpp"
#include "dlr/thermal.hpp"

namespace dlr {

struct Line {
    std::string id;
    int from_bus = 0;
    int to_bus = 0;
    double reactance = 0.0;  // p.u.
    double limit_mw = 0.0;   // nominal rating; the base of p.u. ratings on DLR lines
    bool is_dlr = false;
    std::optional<LineRatingSpec> rating;
};

/// A dispatchable unit with its energy cost curve and reserve offer.
///
/// Reserve caps follow the sign convention of the procured bounds: the
/// downward cap is <= 0 and the upward cap >= 0. Procurement prices are $/MW,
/// activation prices $/MWh, all nonnegative.
struct Generator {
    std::string id;
    int bus = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    double cost_quadratic = 0.0;  // $/MW^2h
    double cost_linear = 0.0;     // $/MWh
    double reserve_down_max = 0.0;
    double reserve_up_max = 0.0;
    double procurement_price_up = 0.0;
    double procurement_price_down = 0.0;
    double activation_price_up = 0.0;
    double activation_price_down = 0.0;

    bool offers_reserve() const { return reserve_up_max > 0.0 || reserve_down_max < 0.0; }
    double dispatch_cost(double p) const { return cost_quadratic * p * p + cost_linear * p; }
};

struct Load {
    int bus = 0;
    double mw = 0.0;
};

struct GridModel {
    std::string name;
    std::vector<int> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    int slack_bus = 0;

    std::size_t num_buses() const { return buses.size(); }

    std::size_t bus_index(int bus) const {
        const auto it = std::find(buses.begin(), buses.end(), bus);
        if (it == buses.end()) throw InvalidInput("unknown bus " + std::to_string(bus));
        return static_cast<std::size_t>(it - buses.begin());
    }

    std::size_t line_index(const std::string& id) const {
        for (std::size_t i = 0; i < lines.size(); ++i)
            if (lines[i].id == id) return i;
        throw InvalidInput("unknown line '" + id + "'");
    }

    double total_load() const {
        double s = 0.0;
        for (const auto& l : loads) s += l.mw;
        return s;
    }

    /// Net load (MW) per bus, in `buses` order.
    Vector bus_loads() const {
        Vector v = Vector::Zero(static_cast<Eigen::Index>(buses.size()));
        for (const auto& l : loads) v[static_cast<Eigen::Index>(bus_index(l.bus))] += l.mw;
        return v;
    }

    /// Bus-by-generator incidence: column j has a single 1 at generator j's bus.
    Matrix generator_incidence() const {
        Matrix c = Matrix::Zero(static_cast<Eigen::Index>(buses.size()), static_cast<Eigen::Index>(generators.size()));
        for (std::size_t j = 0; j < generators.size(); ++j)
            c(static_cast<Eigen::Index>(bus_index(generators[j].bus)), static_cast<Eigen::Index>(j)) = 1.0;
        return c;
    }

    /// Net bus injections for a generator schedule.
    Vector injections(const Vector& p_gen) const { return generator_incidence() * p_gen - bus_loads(); }

    std::vector<std::size_t> dlr_lines() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < lines.size(); ++i)
            if (lines[i].is_dlr) out.push_back(i);
        return out;
    }

    std::vector<std::size_t> reserve_providers() const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < generators.size(); ++j)
            if (generators[j].offers_reserve()) out.push_back(j);
        return out;
    }

    void validate() const {
        using detail::require;
        require(!buses.empty(), "grid has no buses");
        std::set<int> bus_set(buses.begin(), buses.end());
        require(bus_set.size() == buses.size(), "duplicate bus ids");
        require(bus_set.count(slack_bus) == 1, "slack bus " + std::to_string(slack_bus) + " is not a bus");

        std::set<std::string> line_ids;
        for (const auto& l : lines) {
            require(line_ids.insert(l.id).second, "duplicate line id '" + l.id + "'");
            require(bus_set.count(l.from_bus) && bus_set.count(l.to_bus),
                    "line '" + l.id + "' references an unknown bus");
            require(l.from_bus != l.to_bus, "line '" + l.id + "' is a self loop");
            require(std::isfinite(l.reactance) && l.reactance > 0.0, "line '" + l.id + "' needs reactance > 0");
            require(std::isfinite(l.limit_mw) && l.limit_mw > 0.0, "line '" + l.id + "' needs limit_mw > 0");
            if (l.rating)
                require(std::abs(l.rating->nominal_rating_mw - l.limit_mw) <= 1e-9 * l.limit_mw,
                        "line '" + l.id + "' rating spec disagrees with limit_mw");
        }

        std::set<std::string> gen_ids;
        double capacity = 0.0;
        for (const auto& g : generators) {
            const std::string w = "generator '" + g.id + "'";
            require(gen_ids.insert(g.id).second, "duplicate generator id '" + g.id + "'");
            require(bus_set.count(g.bus) == 1, w + " references an unknown bus");
            require(std::isfinite(g.p_min) && std::isfinite(g.p_max) && g.p_min <= g.p_max, w + " needs p_min <= p_max");
            require(g.cost_quadratic >= 0.0 && g.cost_linear >= 0.0, w + " has negative cost coefficients");
            require(g.reserve_down_max <= 0.0 && g.reserve_up_max >= 0.0,
                    w + " needs reserve_down_max <= 0 <= reserve_up_max");
            require(g.procurement_price_up >= 0.0 && g.procurement_price_down >= 0.0 &&
                        g.activation_price_up >= 0.0 && g.activation_price_down >= 0.0,
                    w + " has negative reserve prices");
            capacity += g.p_max;
        }
        for (const auto& l : loads) {
            require(bus_set.count(l.bus) == 1, "load references unknown bus " + std::to_string(l.bus));
            require(std::isfinite(l.mw), "load values must be finite");
        }
        require(capacity >= total_load(), "total generator capacity is below total load");

        // Connectivity.
        std::unordered_map<int, std::vector<int>> adj;
        for (const auto& l : lines) {
            adj[l.from_bus].push_back(l.to_bus);
            adj[l.to_bus].push_back(l.from_bus);
        }
        std::set<int> seen{slack_bus};
        std::queue<int> todo;
        todo.push(slack_bus);
        while (!todo.empty()) {
            const int b = todo.front();
            todo.pop();
            for (int nb : adj[b])
                if (seen.insert(nb).second) todo.push(nb);
        }
        require(seen.size() == buses.size(), "grid is not connected");
    }
};

/// Line flow sensitivities to net bus injections with the slack absorbing
/// the balance. Rows of `h_dlr`/`h_nlr` follow `dlr_line_index`/`nlr_line_index`.
struct PtdfMatrices {
    Matrix h_full;
    Matrix h_dlr;
    Matrix h_nlr;
    std::vector<std::size_t> dlr_line_index;
    std::vector<std::size_t> nlr_line_index;
};

inline PtdfMatrices compute_ptdf(const GridModel& g) {
    const auto nb = static_cast<Eigen::Index>(g.num_buses());
    const auto nl = static_cast<Eigen::Index>(g.lines.size());
    const auto slack = static_cast<Eigen::Index>(g.bus_index(g.slack_bus));

    Matrix bbus = Matrix::Zero(nb, nb);
    Matrix bf = Matrix::Zero(nl, nb);  // flow = bf * theta
    for (Eigen::Index l = 0; l < nl; ++l) {
        const auto& line = g.lines[static_cast<std::size_t>(l)];
        const auto f = static_cast<Eigen::Index>(g.bus_index(line.from_bus));
        const auto t = static_cast<Eigen::Index>(g.bus_index(line.to_bus));
        const double b = 1.0 / line.reactance;
        bbus(f, f) += b;
        bbus(t, t) += b;
        bbus(f, t) -= b;
        bbus(t, f) -= b;
        bf(l, f) = b;
        bf(l, t) = -b;
    }

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < nb; ++i)
        if (i != slack) keep.push_back(i);
    const auto nr = static_cast<Eigen::Index>(keep.size());
    Matrix reduced(nr, nr);
    for (Eigen::Index i = 0; i < nr; ++i)
        for (Eigen::Index j = 0; j < nr; ++j) reduced(i, j) = bbus(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);

    PtdfMatrices out;
    out.h_full = Matrix::Zero(nl, nb);
    if (nr > 0) {
        Eigen::FullPivLU<Matrix> lu(reduced);
        lu.setThreshold(1e-12);
        if (lu.rank() < nr) throw NumericalError("reduced susceptance matrix is singular");
        const Matrix x = lu.inverse();  // reactance matrix with the slack row/col removed
        Matrix x_full = Matrix::Zero(nb, nb);
        for (Eigen::Index i = 0; i < nr; ++i)
            for (Eigen::Index j = 0; j < nr; ++j) x_full(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]) = x(i, j);
        out.h_full = bf * x_full;
    }

    for (std::size_t l = 0; l < g.lines.size(); ++l)
        (g.lines[l].is_dlr ? out.dlr_line_index : out.nlr_line_index).push_back(l);
    auto rows = [&](const std::vector<std::size_t>& idx) {
        Matrix m(static_cast<Eigen::Index>(idx.size()), nb);
        for (std::size_t r = 0; r < idx.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = out.h_full.row(static_cast<Eigen::Index>(idx[r]));
        return m;
    };
    out.h_dlr = rows(out.dlr_line_index);
    out.h_nlr = rows(out.nlr_line_index);
    return out;
}

/// Line flows (MW, positive from -> to) for balanced bus injections.
inline Vector flows(const GridModel& g, const PtdfMatrices& ptdf, const Vector& injections) {
    detail::require(injections.size() == static_cast<Eigen::Index>(g.num_buses()),
                    "injection vector must have one entry per bus");
    const double tol = 1e-6 * std::max(1.0, g.total_load());
    if (std::abs(injections.sum()) > tol)
        throw InvalidInput("injections are unbalanced by " + std::to_string(injections.sum()) + " MW");
    return ptdf.h_full * injections;
}

namespace detail {

inline int int_field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw InvalidInput(where + ": field '" + key + "' must be an integer");
    return j.at(key).get<int>();
}

inline std::string string_field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string()) throw InvalidInput(where + ": field '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

inline const Json& array_field(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw InvalidInput(std::string("grid: missing array '") + key + "'");
    return j.at(key);
}

}  // namespace detail

/// Parses and validates a grid document. Loads are multiplied by the
/// optional top-level "load_scale" (default 1).
inline GridModel grid_from_json(const Json& j) {
    using namespace detail;
    if (!j.is_object()) throw InvalidInput("grid: document must be a JSON object");
    GridModel g;
    g.name = j.value("name", std::string("grid"));
    g.slack_bus = int_field(j, "slack_bus", "grid");
    const double scale = number_field_or(j, "load_scale", 1.0, "grid");
    require(std::isfinite(scale) && scale >= 0.0, "grid: load_scale must be >= 0");

    for (const auto& b : array_field(j, "buses")) {
        if (!b.is_number_integer()) throw InvalidInput("grid: bus ids must be integers");
        g.buses.push_back(b.get<int>());
    }
    const auto& lines = array_field(j, "lines");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const Json& r = lines[i];
        const std::string where = "grid.lines[" + std::to_string(i) + "]";
        Line l;
        l.id = string_field(r, "id", where);
        l.from_bus = int_field(r, "from", where);
        l.to_bus = int_field(r, "to", where);
        l.reactance = number_field(r, "reactance", where);
        l.limit_mw = number_field(r, "limit_mw", where);
        l.is_dlr = r.value("dlr", false);
        if (r.contains("rating")) l.rating = rating_spec_from_json(r.at("rating"), where + ".rating");
        g.lines.push_back(std::move(l));
    }
    const auto& gens = array_field(j, "generators");
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const Json& r = gens[i];
        const std::string where = "grid.generators[" + std::to_string(i) + "]";
        Generator gen;
        gen.id = string_field(r, "id", where);
        gen.bus = int_field(r, "bus", where);
        gen.p_min = number_field(r, "p_min", where);
        gen.p_max = number_field(r, "p_max", where);
        gen.cost_quadratic = number_field_or(r, "cost_quadratic", 0.0, where);
        gen.cost_linear = number_field_or(r, "cost_linear", 0.0, where);
        gen.reserve_down_max = number_field_or(r, "reserve_down_max", 0.0, where);
        gen.reserve_up_max = number_field_or(r, "reserve_up_max", 0.0, where);
        gen.procurement_price_up = number_field_or(r, "procurement_price_up", 0.0, where);
        gen.procurement_price_down = number_field_or(r, "procurement_price_down", 0.0, where);
        gen.activation_price_up = number_field_or(r, "activation_price_up", 0.0, where);
        gen.activation_price_down = number_field_or(r, "activation_price_down", 0.0, where);
        g.generators.push_back(std::move(gen));
    }
    const auto& loads = array_field(j, "loads");
    for (std::size_t i = 0; i < loads.size(); ++i) {
        const std::string where = "grid.loads[" + std::to_string(i) + "]";
        g.loads.push_back(Load{int_field(loads[i], "bus", where), scale * number_field(loads[i], "mw", where)});
    }
    g.validate();
    return g;
}

inline GridModel load_grid(const std::string& path) { return grid_from_json(load_json_file(path)); }

}  // namespace dlr
