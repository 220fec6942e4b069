#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

#include "errors.hpp"
#include "montecarlo.hpp"
#include "scheme.hpp"

namespace frmpair {

enum class ScenarioKind { Ideal, Fringe, Chsh, Drift };

inline std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
    case ScenarioKind::Ideal: return "ideal";
    case ScenarioKind::Fringe: return "fringe";
    case ScenarioKind::Chsh: return "chsh";
    case ScenarioKind::Drift: return "drift";
    }
    return "ideal";
}

inline bool parse_scenario_kind(std::string_view text, ScenarioKind& out) noexcept {
    for (ScenarioKind k : {ScenarioKind::Ideal, ScenarioKind::Fringe, ScenarioKind::Chsh, ScenarioKind::Drift}) {
        if (text == to_string(k)) {
            out = k;
            return true;
        }
    }
    return false;
}

struct ScenarioConfig {
    ScenarioKind type = ScenarioKind::Ideal;
    double hwp_start_deg = 0.0;
    double hwp_stop_deg = 180.0;
    double hwp_step_deg = 7.5;
    double signal_polarizer_deg = 0.0;
    bool subtract_accidentals = false;
    int drift_trials = 100;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

    [[nodiscard]] std::string validate() const {
        if (!std::isfinite(hwp_start_deg)) return "hwp_start_deg: must be finite";
        if (!std::isfinite(hwp_stop_deg) || hwp_stop_deg < hwp_start_deg)
            return "hwp_stop_deg: must be finite and >= hwp_start_deg";
        if (!(hwp_step_deg > 0.0) || !std::isfinite(hwp_step_deg)) return "hwp_step_deg: must be positive";
        if (!std::isfinite(signal_polarizer_deg)) return "signal_polarizer_deg: must be finite";
        if (drift_trials < 1) return "drift_trials: must be >= 1";
        return {};
    }
};

struct SimulationConfig {
    PumpConfig pump;
    SchemeConfig scheme;
    RunConfig run;
    ScenarioConfig scenario;

    friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, int line, const std::string& reason)
        : std::runtime_error(format(key, line, reason)), key_(std::move(key)), line_(line) {}

    /// "section.key", or empty for structural errors.
    [[nodiscard]] const std::string& key() const noexcept { return key_; }
    /// 1-based line, 0 when the value came from a default.
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& reason) {
        std::string msg = key.empty() ? reason : key + ": " + reason;
        if (line > 0) {
            msg += " (line " + std::to_string(line) + ")";
        }
        return msg;
    }
    std::string key_;
    int line_;
};

/// Shortest round-trip text for a double; locale independent.
inline std::string format_roundtrip(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool parse_number(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

template <typename Int>
bool parse_integer(std::string_view text, Int& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec == std::errc() && ptr == text.data() + text.size()) return true;
    // accept integral values written in exponent form, e.g. 2e7
    double d = 0.0;
    if (parse_number(text, d) && d >= 0.0 && d == std::floor(d) && d < 1.8e19) {
        out = static_cast<Int>(d);
        return static_cast<double>(out) == d;
    }
    return false;
}

/// Field binding: reads text into a target and writes it back out.
struct Field {
    enum class Kind { Real, U64, Unsigned, Int, Bool, Scenario } kind;
    void* target;
};

using FieldTable = std::map<std::string, Field, std::less<>>;

inline std::map<std::string, FieldTable, std::less<>> field_tables(SimulationConfig& c) {
    using K = Field::Kind;
    return {
        {"pump",
         {{"avg_power_dbm", {K::Real, &c.pump.avg_power_dbm}},
          {"pulse_width_ns", {K::Real, &c.pump.pulse_width_ns}},
          {"rep_rate_hz", {K::Real, &c.pump.rep_rate_hz}},
          {"wavelength_nm", {K::Real, &c.pump.wavelength_nm}},
          {"signal_nm", {K::Real, &c.pump.signal_nm}},
          {"idler_nm", {K::Real, &c.pump.idler_nm}}}},
        {"scheme",
         {{"pmf_delay_ns", {K::Real, &c.scheme.pmf_delay_ns}},
          {"pmf_length_m", {K::Real, &c.scheme.pmf_length_m}},
          {"fiber_length_km", {K::Real, &c.scheme.fiber_length_km}},
          {"gamma_per_w_km", {K::Real, &c.scheme.gamma_per_w_km}},
          {"launch_angle_deg", {K::Real, &c.scheme.launch_angle_deg}},
          {"pump_phase_rad", {K::Real, &c.scheme.pump_phase_rad}},
          {"fiber_group_delay_ns_per_km", {K::Real, &c.scheme.fiber_group_delay_ns_per_km}}}},
        {"run",
         {{"n_gates", {K::U64, &c.run.n_gates}},
          {"mu_pair", {K::Real, &c.run.mu_pair}},
          {"collection_kappa", {K::Real, &c.run.collection_kappa}},
          {"eta_s", {K::Real, &c.run.eta_s}},
          {"eta_i", {K::Real, &c.run.eta_i}},
          {"gate_rate_hz", {K::Real, &c.run.gate_rate_hz}},
          {"gate_width_ns", {K::Real, &c.run.gate_width_ns}},
          {"seed", {K::U64, &c.run.seed}},
          {"workers", {K::Unsigned, &c.run.workers}}}},
        {"noise",
         {{"raman_s", {K::Real, &c.run.raman_s}},
          {"raman_i", {K::Real, &c.run.raman_i}},
          {"dark_s", {K::Real, &c.run.dark_s}},
          {"dark_i", {K::Real, &c.run.dark_i}},
          {"pump_leak_s", {K::Real, &c.run.pump_leak_s}},
          {"pump_leak_i", {K::Real, &c.run.pump_leak_i}}}},
        {"scenario",
         {{"type", {K::Scenario, &c.scenario.type}},
          {"hwp_start_deg", {K::Real, &c.scenario.hwp_start_deg}},
          {"hwp_stop_deg", {K::Real, &c.scenario.hwp_stop_deg}},
          {"hwp_step_deg", {K::Real, &c.scenario.hwp_step_deg}},
          {"signal_polarizer_deg", {K::Real, &c.scenario.signal_polarizer_deg}},
          {"subtract_accidentals", {K::Bool, &c.scenario.subtract_accidentals}},
          {"drift_trials", {K::Int, &c.scenario.drift_trials}}}},
    };
}

inline bool assign(const Field& f, std::string_view text) {
    using K = Field::Kind;
    switch (f.kind) {
    case K::Real: {
        double v = 0.0;
        if (!parse_number(text, v) || !std::isfinite(v)) return false;
        *static_cast<double*>(f.target) = v;
        return true;
    }
    case K::U64: return parse_integer(text, *static_cast<std::uint64_t*>(f.target));
    case K::Unsigned: return parse_integer(text, *static_cast<unsigned*>(f.target));
    case K::Int: return parse_integer(text, *static_cast<int*>(f.target));
    case K::Bool:
        if (text == "true") {
            *static_cast<bool*>(f.target) = true;
        } else if (text == "false") {
            *static_cast<bool*>(f.target) = false;
        } else {
            return false;
        }
        return true;
    case K::Scenario: return parse_scenario_kind(text, *static_cast<ScenarioKind*>(f.target));
    }
    return false;
}

inline std::string render_field(const Field& f) {
    using K = Field::Kind;
    switch (f.kind) {
    case K::Real: return format_roundtrip(*static_cast<const double*>(f.target));
    case K::U64: return std::to_string(*static_cast<const std::uint64_t*>(f.target));
    case K::Unsigned: return std::to_string(*static_cast<const unsigned*>(f.target));
    case K::Int: return std::to_string(*static_cast<const int*>(f.target));
    case K::Bool: return *static_cast<const bool*>(f.target) ? "true" : "false";
    case K::Scenario: return std::string(to_string(*static_cast<const ScenarioKind*>(f.target)));
    }
    return {};
}

/// Maps "field: reason" from a validate() call onto "section.field".
inline void raise_validation(std::string_view section_hint, const std::string& why,
                             const std::map<std::string, int, std::less<>>& lines,
                             const std::map<std::string, FieldTable, std::less<>>& tables) {
    const auto colon = why.find(':');
    const std::string field = why.substr(0, colon);
    const std::string reason = colon == std::string::npos ? why : std::string(trim(why.substr(colon + 1)));
    std::string key = std::string(section_hint) + "." + field;
    for (const auto& [section, table] : tables) {
        if (table.count(field) && (section == section_hint || (section_hint == "run" && section == "noise"))) {
            key = section + "." + field;
        }
    }
    const auto it = lines.find(key);
    throw ConfigError(key, it == lines.end() ? 0 : it->second, reason);
}

} // namespace detail

/// Parses `[section]` / `key = value` text with `#` comments. Missing keys keep
/// their defaults; when run.mu_pair is absent it is derived from the pump and
/// fiber parameters through pair_probability().
inline SimulationConfig parse_config(std::string_view text) {
    SimulationConfig cfg;
    const auto tables = detail::field_tables(cfg);
    std::map<std::string, int, std::less<>> lines;
    std::string section;
    int line_no = 0;

    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("", line_no, "malformed section header '" + std::string(line) + "'");
            }
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!tables.count(section)) {
                throw ConfigError(section, line_no, "unknown section");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", line_no, "expected 'key = value'");
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (section.empty()) {
            throw ConfigError(key, line_no, "key outside of any section");
        }
        const std::string full = section + "." + key;
        const auto& table = tables.at(section);
        const auto field = table.find(key);
        if (field == table.end()) {
            throw ConfigError(full, line_no, "unknown key");
        }
        if (lines.count(full)) {
            throw ConfigError(full, line_no, "duplicate key");
        }
        if (!detail::assign(field->second, value)) {
            throw ConfigError(full, line_no, "cannot parse value '" + std::string(value) + "'");
        }
        lines[full] = line_no;
    }

    if (auto why = cfg.pump.validate(); !why.empty()) detail::raise_validation("pump", why, lines, tables);
    if (auto why = cfg.scheme.validate(); !why.empty()) detail::raise_validation("scheme", why, lines, tables);
    if (auto why = cfg.run.validate(); !why.empty()) detail::raise_validation("run", why, lines, tables);
    if (auto why = cfg.scenario.validate(); !why.empty())
        detail::raise_validation("scenario", why, lines, tables);

    if (!lines.count("run.mu_pair")) {
        try {
            cfg.run.mu_pair = pair_probability(cfg.scheme.gamma_per_w_km, peak_power_w(cfg.pump),
                                               cfg.scheme.fiber_length_km, cfg.run.collection_kappa);
        } catch (const std::exception& e) {
            throw ConfigError("run.mu_pair", 0, e.what());
        }
    } else if (!(cfg.run.mu_pair < 1.0)) {
        throw ConfigError("run.mu_pair", lines.at("run.mu_pair"), "must be < 1 (multi-pair approximation)");
    }
    return cfg;
}

/// Inverse of parse_config: every field written explicitly.
inline std::string render_config(const SimulationConfig& config) {
    SimulationConfig copy = config;
    const auto tables = detail::field_tables(copy);
    std::string out;
    for (const char* section : {"pump", "scheme", "run", "noise", "scenario"}) {
        out += "[";
        out += section;
        out += "]\n";
        for (const auto& [key, field] : tables.at(section)) {
            out += key + " = " + detail::render_field(field) + "\n";
        }
        out += "\n";
    }
    return out;
}

} // namespace frmpair
