#pragma once

// Steady-state conductor heat balance and weather-dependent line ratings.
//
// The convective, radiative and solar terms follow the IEEE Std 738 steady
// state model in SI units. Solar gain takes the effective irradiance on the
// conductor directly (no solar-geometry model).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dlr/errors.hpp"

namespace dlr {

struct ConductorParams {
    double diameter = 0.0;             // m
    double resistance_at_t_low = 0.0;  // ohm/m
    double t_low = 25.0;               // degC
    double resistance_at_t_high = 0.0; // ohm/m
    double t_high = 75.0;              // degC
    double emissivity = 0.5;
    double absorptivity = 0.5;
    double max_temperature = 75.0;     // degC
    double elevation = 0.0;            // m

    /// Linear interpolation (and extrapolation) between the two reference points.
    double resistance(double temperature) const {
        const double slope = (resistance_at_t_high - resistance_at_t_low) / (t_high - t_low);
        return resistance_at_t_low + slope * (temperature - t_low);
    }

    void validate() const {
        using detail::require;
        require(std::isfinite(diameter) && diameter > 0.0, "conductor diameter must be > 0");
        require(std::isfinite(resistance_at_t_low) && resistance_at_t_low > 0.0 &&
                    std::isfinite(resistance_at_t_high) && resistance_at_t_high > 0.0,
                "conductor resistances must be > 0");
        require(std::isfinite(t_low) && std::isfinite(t_high) && t_high > t_low,
                "conductor reference temperatures must satisfy t_low < t_high");
        require(resistance_at_t_high >= resistance_at_t_low,
                "conductor resistance must be nondecreasing in temperature");
        require(emissivity >= 0.0 && emissivity <= 1.0, "emissivity must lie in [0, 1]");
        require(absorptivity >= 0.0 && absorptivity <= 1.0, "absorptivity must lie in [0, 1]");
        require(std::isfinite(max_temperature) && max_temperature > -273.15,
                "max_temperature must exceed absolute zero");
        require(std::isfinite(elevation), "elevation must be finite");
    }
};

struct WeatherSample {
    double wind_speed = 0.0;            // m/s
    double wind_angle = 90.0;           // deg between wind and line axis, 0 = parallel
    double ambient_temperature = 25.0;  // degC
    double solar_irradiance = 0.0;      // W/m^2

    /// Folds any angle onto [0, 90] (the convection model is symmetric).
    static double normalize_angle(double degrees) {
        double a = std::fmod(std::abs(degrees), 180.0);
        return a > 90.0 ? 180.0 - a : a;
    }

    void validate() const {
        using detail::require;
        require(std::isfinite(wind_speed) && std::isfinite(wind_angle) &&
                    std::isfinite(ambient_temperature) && std::isfinite(solar_irradiance),
                "weather sample has non-finite fields");
        require(wind_speed >= 0.0, "wind_speed must be >= 0");
        require(solar_irradiance >= 0.0, "solar_irradiance must be >= 0");
        require(ambient_temperature > -273.15, "ambient_temperature below absolute zero");
    }
};

/// Conservative weather behind a nominal rating unless configured otherwise.
inline WeatherSample default_nlr_weather() {
    return WeatherSample{0.5, 22.5, 30.0, 900.0};
}

struct HeatTerms {
    double convection = 0.0;  // q_c, W/m
    double radiation = 0.0;   // q_r, W/m
    double solar = 0.0;       // q_s, W/m
};

namespace detail {

struct FilmProperties {
    double viscosity;     // Pa s
    double density;       // kg/m^3
    double conductivity;  // W/(m degC)
};

inline FilmProperties air_film(double t_film, double elevation) {
    FilmProperties f{};
    f.viscosity = 1.458e-6 * std::pow(t_film + 273.0, 1.5) / (t_film + 383.4);
    f.density = (1.293 - 1.525e-4 * elevation + 6.379e-9 * elevation * elevation) /
                (1.0 + 0.00367 * t_film);
    f.conductivity = 2.424e-2 + 7.477e-5 * t_film - 4.407e-9 * t_film * t_film;
    return f;
}

inline double wind_direction_factor(double angle_deg) {
    const double phi = WeatherSample::normalize_angle(angle_deg) * std::numbers::pi / 180.0;
    return 1.194 - std::cos(phi) + 0.194 * std::cos(2.0 * phi) + 0.368 * std::sin(2.0 * phi);
}

}  // namespace detail

/// Heat exchange rates per metre of conductor at temperature `t_conductor`.
inline HeatTerms heat_terms(const WeatherSample& w, const ConductorParams& c, double t_conductor) {
    w.validate();
    c.validate();
    detail::require(std::isfinite(t_conductor), "conductor temperature must be finite");

    const double ta = w.ambient_temperature;
    const double dt = t_conductor - ta;
    const double d = c.diameter;
    const auto air = detail::air_film(0.5 * (t_conductor + ta), c.elevation);

    const double reynolds = d * air.density * w.wind_speed / air.viscosity;
    const double k_angle = detail::wind_direction_factor(w.wind_angle);
    // Forced convection: low and high Reynolds-number correlations, natural
    // convection as the floor. Magnitudes are compared; sign follows dt.
    const double forced_low = k_angle * (1.01 + 1.35 * std::pow(reynolds, 0.52)) * air.conductivity;
    const double forced_high = k_angle * 0.754 * std::pow(reynolds, 0.6) * air.conductivity;
    const double natural = 3.645 * std::sqrt(air.density) * std::pow(d, 0.75) * std::pow(std::abs(dt), 0.25);
    const double coeff = std::max({forced_low, forced_high, natural});

    HeatTerms q;
    q.convection = coeff * dt;
    const double tc_k = (t_conductor + 273.0) / 100.0;
    const double ta_k = (ta + 273.0) / 100.0;
    q.radiation = 17.8 * d * c.emissivity * (std::pow(tc_k, 4) - std::pow(ta_k, 4));
    q.solar = c.absorptivity * w.solar_irradiance * d;
    return q;
}

/// Maximum steady-state current (A) keeping the conductor at or below its
/// maximum temperature. Clamped to zero when solar gain dominates cooling.
inline double ampacity(const WeatherSample& w, const ConductorParams& c) {
    const double t_max = c.max_temperature;
    const HeatTerms q = heat_terms(w, c, t_max);
    const double radicand = q.convection + q.radiation - q.solar;
    return std::sqrt(std::max(0.0, radicand) / c.resistance(t_max));
}

struct LineRatingSpec {
    ConductorParams conductor;
    double voltage_kv = 0.0;
    double nominal_rating_mw = 0.0;
    WeatherSample nlr_weather = default_nlr_weather();

    /// Three-phase power at unity power factor carried by `amps`.
    double power_mw(double amps) const { return std::sqrt(3.0) * voltage_kv * amps * 1e-3; }

    /// Relative mismatch between the nominal rating and the rating implied by
    /// the conductor at NLR weather.
    double nominal_mismatch() const {
        return std::abs(power_mw(ampacity(nlr_weather, conductor)) - nominal_rating_mw) / nominal_rating_mw;
    }

    void validate(double tolerance = 0.005) const {
        using detail::require;
        conductor.validate();
        nlr_weather.validate();
        require(std::isfinite(voltage_kv) && voltage_kv > 0.0, "voltage_kv must be > 0");
        require(std::isfinite(nominal_rating_mw) && nominal_rating_mw > 0.0, "nominal_rating_mw must be > 0");
        if (ampacity(nlr_weather, conductor) <= 0.0)
            throw DegenerateSpec("conductor has zero ampacity under its NLR weather");
        require(nominal_mismatch() <= tolerance,
                "nominal_rating_mw is inconsistent with conductor ampacity at NLR weather (" +
                    std::to_string(100.0 * nominal_mismatch()) + "% off)");
    }
};

/// Rating normalized to the NLR ampacity; exactly 1 at the NLR weather.
inline double rating_pu(const WeatherSample& w, const LineRatingSpec& spec) {
    const double base = ampacity(spec.nlr_weather, spec.conductor);
    if (!(base > 0.0)) throw DegenerateSpec("zero ampacity at NLR weather; rating base undefined");
    return ampacity(w, spec.conductor) / base;
}

inline double rating_mw(const WeatherSample& w, const LineRatingSpec& spec) {
    return rating_pu(w, spec) * spec.nominal_rating_mw;
}

/// 26/7 ACSR "Drake" with the usual 25/75 degC resistance points.
inline ConductorParams drake_conductor() {
    ConductorParams c;
    c.diameter = 0.02814;
    c.resistance_at_t_low = 7.283e-5;
    c.t_low = 25.0;
    c.resistance_at_t_high = 8.688e-5;
    c.t_high = 75.0;
    c.emissivity = 0.8;
    c.absorptivity = 0.8;
    c.max_temperature = 100.0;
    c.elevation = 0.0;
    return c;
}

/// Draws independent plausible weather samples. This stands in for measured
/// station data: Weibull wind, 22.5 deg angle, normal ambient temperature and
/// a clipped-normal irradiance.
inline std::vector<WeatherSample> synthetic_weather(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::weibull_distribution<double> wind(2.0, 3.0);
    std::normal_distribution<double> ambient(12.0, 8.0);
    std::normal_distribution<double> sun(350.0, 300.0);
    std::vector<WeatherSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        WeatherSample w;
        w.wind_speed = wind(rng);
        w.wind_angle = 22.5;
        w.ambient_temperature = ambient(rng);
        w.solar_irradiance = std::clamp(sun(rng), 0.0, 1100.0);
        out.push_back(w);
    }
    return out;
}

}  // namespace dlr
