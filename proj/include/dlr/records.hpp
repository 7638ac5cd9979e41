#pragma once

// Structured-text records for the thermal inputs. JSON keys and CSV column
// names are the struct field names.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlr/errors.hpp"
#include "dlr/thermal.hpp"

namespace dlr {

using Json = nlohmann::json;

namespace detail {

inline double number_field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InvalidInput(where + ": missing field '" + key + "'");
    if (!j.at(key).is_number()) throw InvalidInput(where + ": field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline double number_field_or(const Json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number_field(j, key, where) : fallback;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Json parse_json(const std::string& text, const std::string& where) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(where + ": malformed JSON: " + e.what());
    }
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace detail

/// A header-keyed CSV table. Blank lines and lines starting with '#' are
/// skipped; `line_numbers` keeps the 1-based source line of every row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }

    double number(std::size_t row, const std::string& name) const {
        const int c = column(name);
        const std::string where = "row " + std::to_string(line_numbers[row]);
        if (c < 0) throw InvalidInput("missing column '" + name + "'");
        const std::string& cell = rows[row][static_cast<std::size_t>(c)];
        try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            if (used != cell.size()) throw std::invalid_argument(cell);
            return v;
        } catch (const std::exception&) {
            throw InvalidInput(where + ": column '" + name + "' is not a number ('" + cell + "')");
        }
    }

    static CsvTable parse(const std::string& text) {
        CsvTable t;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = detail::trim(line);
            if (s.empty() || s[0] == '#') continue;
            auto cells = detail::split_csv_line(s);
            if (t.header.empty()) {
                t.header = std::move(cells);
                continue;
            }
            if (cells.size() != t.header.size())
                throw InvalidInput("row " + std::to_string(lineno) + ": expected " +
                                   std::to_string(t.header.size()) + " columns, found " +
                                   std::to_string(cells.size()));
            t.rows.push_back(std::move(cells));
            t.line_numbers.push_back(lineno);
        }
        return t;
    }
};

inline ConductorParams conductor_from_json(const Json& j, const std::string& where = "conductor") {
    using detail::number_field;
    using detail::number_field_or;
    ConductorParams c;
    c.diameter = number_field(j, "diameter", where);
    c.resistance_at_t_low = number_field(j, "resistance_at_t_low", where);
    c.t_low = number_field_or(j, "t_low", 25.0, where);
    c.resistance_at_t_high = number_field(j, "resistance_at_t_high", where);
    c.t_high = number_field_or(j, "t_high", 75.0, where);
    c.emissivity = number_field(j, "emissivity", where);
    c.absorptivity = number_field(j, "absorptivity", where);
    c.max_temperature = number_field(j, "max_temperature", where);
    c.elevation = number_field_or(j, "elevation", 0.0, where);
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw InvalidInput(where + ": " + e.what());
    }
    return c;
}

inline Json to_json(const ConductorParams& c) {
    return Json{{"diameter", c.diameter},
                {"resistance_at_t_low", c.resistance_at_t_low},
                {"t_low", c.t_low},
                {"resistance_at_t_high", c.resistance_at_t_high},
                {"t_high", c.t_high},
                {"emissivity", c.emissivity},
                {"absorptivity", c.absorptivity},
                {"max_temperature", c.max_temperature},
                {"elevation", c.elevation}};
}

inline WeatherSample weather_from_json(const Json& j, const std::string& where = "weather") {
    using detail::number_field;
    WeatherSample w;
    w.wind_speed = number_field(j, "wind_speed", where);
    w.wind_angle = number_field(j, "wind_angle", where);
    w.ambient_temperature = number_field(j, "ambient_temperature", where);
    w.solar_irradiance = number_field(j, "solar_irradiance", where);
    try {
        w.validate();
    } catch (const InvalidInput& e) {
        throw InvalidInput(where + ": " + e.what());
    }
    return w;
}

inline Json to_json(const WeatherSample& w) {
    return Json{{"wind_speed", w.wind_speed},
                {"wind_angle", w.wind_angle},
                {"ambient_temperature", w.ambient_temperature},
                {"solar_irradiance", w.solar_irradiance}};
}

inline LineRatingSpec rating_spec_from_json(const Json& j, const std::string& where = "rating") {
    LineRatingSpec s;
    if (!j.contains("conductor")) throw InvalidInput(where + ": missing field 'conductor'");
    s.conductor = conductor_from_json(j.at("conductor"), where + ".conductor");
    s.voltage_kv = detail::number_field(j, "voltage_kv", where);
    s.nominal_rating_mw = detail::number_field(j, "nominal_rating_mw", where);
    if (j.contains("nlr_weather")) s.nlr_weather = weather_from_json(j.at("nlr_weather"), where + ".nlr_weather");
    try {
        s.validate();
    } catch (const Error& e) {
        throw InvalidInput(where + ": " + e.what());
    }
    return s;
}

inline Json to_json(const LineRatingSpec& s) {
    return Json{{"conductor", to_json(s.conductor)},
                {"voltage_kv", s.voltage_kv},
                {"nominal_rating_mw", s.nominal_rating_mw},
                {"nlr_weather", to_json(s.nlr_weather)}};
}

/// Weather rows from CSV with columns wind_speed, wind_angle,
/// ambient_temperature, solar_irradiance (extra columns are ignored).
inline std::vector<WeatherSample> weather_from_csv(const std::string& text) {
    const CsvTable t = CsvTable::parse(text);
    std::vector<WeatherSample> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        WeatherSample w;
        w.wind_speed = t.number(r, "wind_speed");
        w.wind_angle = t.number(r, "wind_angle");
        w.ambient_temperature = t.number(r, "ambient_temperature");
        w.solar_irradiance = t.number(r, "solar_irradiance");
        try {
            w.validate();
        } catch (const InvalidInput& e) {
            throw InvalidInput("row " + std::to_string(t.line_numbers[r]) + ": " + e.what());
        }
        out.push_back(w);
    }
    return out;
}

/// Weather from a file: JSON (an array of records, or an object holding
/// "samples") or CSV, chosen by the first non-blank character.
inline std::vector<WeatherSample> load_weather(const std::string& path) {
    const std::string text = detail::read_file(path);
    const std::string s = detail::trim(text);
    if (!s.empty() && (s[0] == '[' || s[0] == '{')) {
        const Json j = detail::parse_json(text, path);
        const Json& arr = j.is_array() ? j : j.at("samples");
        std::vector<WeatherSample> out;
        for (std::size_t i = 0; i < arr.size(); ++i)
            out.push_back(weather_from_json(arr[i], path + " record " + std::to_string(i + 1)));
        return out;
    }
    return weather_from_csv(text);
}

inline Json load_json_file(const std::string& path) {
    return detail::parse_json(detail::read_file(path), path);
}

}  // namespace dlr
