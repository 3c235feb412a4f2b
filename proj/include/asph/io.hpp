#pragma once

/**
 * @file io.hpp
 * @brief Run configuration, CSV snapshots and time series, comparison reports, run manifest.
 *
 * Config files are sectioned `key = value` text:
 *
 *     scenario = bar
 *     [time]
 *     dt = 2e-6
 *     [kernel]
 *     kernel = adaptive-cubic
 *
 * A key may also appear before any section header. `#` and `;` start comments.
 */

#include "asph/run.hpp"
#include "asph/scenarios.hpp"

#include "json.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace asph {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line) : std::runtime_error(format(what, line)), line_(line) {}
    int line() const { return line_; }

private:
    static std::string format(const std::string& what, int line) {
        return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
    }
    int line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario geometry parameters; which ones apply depends on the scenario.
struct ScenarioParams {
    Stability2dParams stability2d;
    BarParams bar;
    PlateParams plate;
    RingParams rings;
};

struct RunRequest {
    std::string scenario;
    ScenarioParams params;
    SimConfig config;
    std::string kernel = "adaptive-cubic";
    std::string output_dir = "output";
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"stability2d", "bar", "plate", "rings"};
    return names;
}

inline Scenario<2> build_scenario(const std::string& name, const ScenarioParams& p) {
    if (name == "stability2d") return build_stability2d(p.stability2d);
    if (name == "bar") return build_bar(p.bar);
    if (name == "plate") return build_plate(p.plate);
    if (name == "rings") return build_ring_collision(p.rings);
    throw ArgumentError("unknown scenario '" + name + "'");
}

/// Sets family / adaptive flag from a kernel name.
inline void apply_kernel_name(const std::string& name, SimConfig& cfg) {
    if (name == "standard-cubic") {
        cfg.family = KernelFamily::StandardCubic;
        cfg.adaptive = false;
    } else if (name == "adaptive-cubic") {
        cfg.family = KernelFamily::CubicBSpline;
        cfg.adaptive = true;
    } else if (name == "cubic-bspline") {
        cfg.family = KernelFamily::CubicBSpline;
        cfg.adaptive = false;
    } else if (name == "adaptive-quadratic") {
        cfg.family = KernelFamily::QuadraticBSpline;
        cfg.adaptive = true;
    } else if (name == "quadratic-bspline") {
        cfg.family = KernelFamily::QuadraticBSpline;
        cfg.adaptive = false;
    } else {
        throw ArgumentError("unknown kernel '" + name +
                            "' (expected standard-cubic, adaptive-cubic, cubic-bspline, adaptive-quadratic, quadratic-bspline)");
    }
}

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct ConfigEntry {
    std::string value;
    int line = 0;
};

inline double parse_real(const std::string& key, const ConfigEntry& e) {
    const char* begin = e.value.data();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (e.value.empty() || end != begin + e.value.size() || !std::isfinite(v))
        throw ConfigError("key '" + key + "' expects a real number, got '" + e.value + "'", e.line);
    return v;
}

inline int parse_int(const std::string& key, const ConfigEntry& e) {
    int v = 0;
    const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size())
        throw ConfigError("key '" + key + "' expects an integer, got '" + e.value + "'", e.line);
    return v;
}

inline bool parse_bool(const std::string& key, const ConfigEntry& e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + e.value + "'", e.line);
}

// key -> section it belongs to
inline const std::map<std::string, std::string>& config_schema() {
    static const std::map<std::string, std::string> schema{
        {"scenario", "run"},         {"output_dir", "run"},        {"output_every", "run"},
        {"deterministic", "run"},    {"dt", "time"},               {"t_end", "time"},
        {"kernel", "kernel"},        {"fixed_a", "kernel"},        {"b", "kernel"},
        {"h_factor", "kernel"},      {"tension_factor", "adaptivity"}, {"compression_a", "adaptivity"},
        {"knot_floor", "adaptivity"}, {"knot_ceiling", "adaptivity"}, {"immediate_radius_factor", "adaptivity"},
        {"reference_ring", "adaptivity"}, {"gamma1", "viscosity"},    {"gamma2", "viscosity"},
        {"eta", "viscosity"},        {"xsph_eps", "solver"},       {"renormalize", "solver"},
        {"mirror_boundary_stress", "solver"}, {"boundary_knot_from_interior", "solver"},
        {"dp", "scenario"},          {"length", "scenario"},       {"depth", "scenario"},
        {"thickness", "scenario"},   {"speed", "scenario"},        {"tip_velocity", "scenario"},
        {"n_interior", "scenario"},  {"rho_ratio", "scenario"},    {"perturb_speed", "scenario"},
        {"inner_radius", "scenario"}, {"outer_radius", "scenario"}, {"closing_speed", "scenario"},
        {"gap_factor", "scenario"},
    };
    return schema;
}

}  // namespace detail

/// Parses config text. Scenario defaults are applied first, then every key
/// present overrides them. Unknown keys, keys in the wrong section, bad
/// values and a missing scenario are reported with their line number.
inline RunRequest parse_config(const std::string& text) {
    using detail::ConfigEntry;
    std::map<std::string, ConfigEntry> entries;
    std::istringstream in(text);
    std::string raw, section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'", line_no);
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
        const std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        const auto& schema = detail::config_schema();
        const auto it = schema.find(key);
        if (it == schema.end()) throw ConfigError("unknown key '" + key + "'", line_no);
        if (!section.empty() && section != it->second)
            throw ConfigError("key '" + key + "' does not belong in section [" + section + "] (expected [" + it->second + "])",
                              line_no);
        if (entries.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no);
        entries[key] = ConfigEntry{value, line_no};
    }

    auto has = [&](const char* k) { return entries.count(k) > 0; };
    auto real = [&](const char* k) { return detail::parse_real(k, entries.at(k)); };
    auto integer = [&](const char* k) { return detail::parse_int(k, entries.at(k)); };
    auto boolean = [&](const char* k) { return detail::parse_bool(k, entries.at(k)); };

    RunRequest req;
    if (!has("scenario")) throw ConfigError("missing required key 'scenario'", 0);
    req.scenario = entries.at("scenario").value;
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), req.scenario) == names.end())
        throw ConfigError("unknown scenario '" + req.scenario + "'", entries.at("scenario").line);

    auto& prm = req.params;
    auto set_real = [&](const char* k, double& dst) {
        if (has(k)) dst = real(k);
    };
    auto reject = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (has(k))
                throw ConfigError("key '" + std::string(k) + "' does not apply to scenario '" + req.scenario + "'",
                                  entries.at(k).line);
    };
    if (req.scenario == "stability2d") {
        set_real("dp", prm.stability2d.dp);
        set_real("rho_ratio", prm.stability2d.rho_ratio);
        set_real("perturb_speed", prm.stability2d.perturb_speed);
        if (has("n_interior")) prm.stability2d.n_interior = integer("n_interior");
        reject({"length", "depth", "thickness", "speed", "tip_velocity", "inner_radius", "outer_radius", "closing_speed",
                "gap_factor"});
    } else if (req.scenario == "bar") {
        set_real("dp", prm.bar.dp);
        set_real("length", prm.bar.length);
        set_real("depth", prm.bar.depth);
        set_real("speed", prm.bar.speed);
        reject({"thickness", "tip_velocity", "n_interior", "rho_ratio", "perturb_speed", "inner_radius", "outer_radius",
                "closing_speed", "gap_factor"});
    } else if (req.scenario == "plate") {
        set_real("dp", prm.plate.dp);
        set_real("length", prm.plate.length);
        set_real("thickness", prm.plate.thickness);
        set_real("tip_velocity", prm.plate.tip_velocity);
        reject({"depth", "speed", "n_interior", "rho_ratio", "perturb_speed", "inner_radius", "outer_radius",
                "closing_speed", "gap_factor"});
    } else {
        set_real("dp", prm.rings.dp);
        set_real("inner_radius", prm.rings.inner_radius);
        set_real("outer_radius", prm.rings.outer_radius);
        set_real("closing_speed", prm.rings.closing_speed);
        set_real("gap_factor", prm.rings.gap_factor);
        reject({"length", "depth", "thickness", "speed", "tip_velocity", "n_interior", "rho_ratio", "perturb_speed"});
    }

    Scenario<2> sc;
    try {
        sc = build_scenario(req.scenario, prm);
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what(), has("dp") ? entries.at("dp").line : 0);
    }
    SimConfig& cfg = req.config;
    cfg = sc.defaults;
    if (has("kernel")) req.kernel = entries.at("kernel").value;
    try {
        apply_kernel_name(req.kernel, cfg);
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what(), entries.at("kernel").line);
    }
    set_real("dt", cfg.dt);
    set_real("t_end", cfg.t_end);
    set_real("fixed_a", cfg.fixed_a);
    set_real("b", cfg.adaptivity.b);
    set_real("h_factor", cfg.h_factor);
    set_real("tension_factor", cfg.adaptivity.tension_factor);
    set_real("compression_a", cfg.adaptivity.compression_a);
    set_real("knot_floor", cfg.adaptivity.knot_floor);
    set_real("knot_ceiling", cfg.adaptivity.knot_ceiling);
    set_real("immediate_radius_factor", cfg.adaptivity.immediate_radius_factor);
    set_real("gamma1", cfg.viscosity.gamma1);
    set_real("gamma2", cfg.viscosity.gamma2);
    set_real("eta", cfg.viscosity.eta);
    set_real("xsph_eps", cfg.xsph_eps);
    if (has("reference_ring")) cfg.adaptivity.reference_ring = boolean("reference_ring");
    if (has("renormalize")) cfg.renormalize = boolean("renormalize");
    if (has("mirror_boundary_stress")) cfg.mirror_boundary_stress = boolean("mirror_boundary_stress");
    if (has("boundary_knot_from_interior")) cfg.boundary_knot_from_interior = boolean("boundary_knot_from_interior");
    if (has("deterministic")) cfg.deterministic = boolean("deterministic");
    if (has("output_every")) cfg.output_every = integer("output_every");
    if (has("output_dir")) req.output_dir = entries.at("output_dir").value;
    try {
        cfg.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what(), 0);
    }
    return req;
}

inline RunRequest parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Canonical `key = value` listing of every effective setting.
inline std::string effective_config(const RunRequest& r) {
    const SimConfig& c = r.config;
    std::ostringstream os;
    auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
    auto kr = [&](const char* k, double v) { kv(k, format_real(v)); };
    auto kb = [&](const char* k, bool v) { kv(k, v ? "true" : "false"); };
    kv("scenario", r.scenario);
    kv("kernel", r.kernel);
    kr("dp", c.dp);
    kr("dt", c.dt);
    kr("t_end", c.t_end);
    kr("fixed_a", c.fixed_a);
    kr("b", c.adaptivity.b);
    kr("h_factor", c.h_factor);
    kr("tension_factor", c.adaptivity.tension_factor);
    kr("compression_a", c.adaptivity.compression_a);
    kr("knot_floor", c.adaptivity.knot_floor);
    kr("knot_ceiling", c.adaptivity.knot_ceiling);
    kr("immediate_radius_factor", c.adaptivity.immediate_radius_factor);
    kb("reference_ring", c.adaptivity.reference_ring);
    kr("gamma1", c.viscosity.gamma1);
    kr("gamma2", c.viscosity.gamma2);
    kr("eta", c.viscosity.eta);
    kr("xsph_eps", c.xsph_eps);
    kb("renormalize", c.renormalize);
    kb("mirror_boundary_stress", c.mirror_boundary_stress);
    kb("boundary_knot_from_interior", c.boundary_knot_from_interior);
    kb("deterministic", c.deterministic);
    os << "output_every = " << c.output_every << '\n';
    const auto& p = r.params;
    if (r.scenario == "stability2d") {
        os << "n_interior = " << p.stability2d.n_interior << '\n';
        kr("rho_ratio", p.stability2d.rho_ratio);
        kr("perturb_speed", p.stability2d.perturb_speed);
    } else if (r.scenario == "bar") {
        kr("length", p.bar.length);
        kr("depth", p.bar.depth);
        kr("speed", p.bar.speed);
    } else if (r.scenario == "plate") {
        kr("length", p.plate.length);
        kr("thickness", p.plate.thickness);
        kr("tip_velocity", p.plate.tip_velocity);
    } else if (r.scenario == "rings") {
        kr("inner_radius", p.rings.inner_radius);
        kr("outer_radius", p.rings.outer_radius);
        kr("closing_speed", p.rings.closing_speed);
        kr("gap_factor", p.rings.gap_factor);
    }
    return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_hash(const RunRequest& r) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(effective_config(r)));
    return buf;
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

inline constexpr const char* snapshot_header = "id,kind,x,y,vx,vy,rho,p,sxx,syy,sxy,e,a_knot";

struct SnapshotRow {
    std::uint64_t id = 0;
    ParticleKind kind = ParticleKind::Interior;
    double x = 0, y = 0, vx = 0, vy = 0, rho = 0, p = 0, sxx = 0, syy = 0, sxy = 0, e = 0, a_knot = 0;
};

/// Writes one CSV snapshot. 1D states write y and vy as 0.
template <int Dim>
void write_snapshot(std::ostream& os, const ParticleSet<Dim>& s, const MaterialModel& mat, double t,
                    const std::string& hash) {
    os << "# t=" << format_real(t) << " step=" << s.step << " config_hash=" << hash << '\n';
    os << snapshot_header << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& p = s.particles[i];
        const double y = Dim > 1 ? p.x[Dim > 1 ? 1 : 0] : 0.0;
        const double vy = Dim > 1 ? p.v[Dim > 1 ? 1 : 0] : 0.0;
        os << i << ',' << to_string(p.kind);
        for (double v : {p.x[0], y, p.v[0], vy, p.rho, pressure(p.rho, mat), p.S[0][0], p.S[1][1], p.S[0][1], p.e, p.a_knot})
            os << ',' << format_real(v);
        os << '\n';
    }
    if (!os) throw IoError("snapshot write failed");
}

template <int Dim>
void write_snapshot(const std::filesystem::path& path, const ParticleSet<Dim>& s, const MaterialModel& mat, double t,
                    const std::string& hash) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    write_snapshot<Dim>(f, s, mat, t, hash);
}

inline std::vector<SnapshotRow> read_snapshot(std::istream& is) {
    std::vector<SnapshotRow> rows;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != snapshot_header) throw IoError("unexpected snapshot header '" + line + "'");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 13) throw IoError("snapshot row has " + std::to_string(f.size()) + " fields");
        SnapshotRow r;
        r.id = std::stoull(f[0]);
        if (f[1] == "interior")
            r.kind = ParticleKind::Interior;
        else if (f[1] == "fixed")
            r.kind = ParticleKind::FixedBoundary;
        else
            throw IoError("unknown particle kind '" + f[1] + "'");
        double* dst[] = {&r.x, &r.y, &r.vx, &r.vy, &r.rho, &r.p, &r.sxx, &r.syy, &r.sxy, &r.e, &r.a_knot};
        for (std::size_t k = 0; k < 11; ++k) *dst[k] = std::strtod(f[k + 2].c_str(), nullptr);
        rows.push_back(r);
    }
    if (!header) throw IoError("snapshot has no header");
    return rows;
}

inline std::vector<SnapshotRow> read_snapshot(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    return read_snapshot(f);
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

inline std::string time_series_header(const std::vector<Probe>& probes) {
    std::string h = "step,t";
    for (const auto& p : probes) h += "," + p.name;
    h += ",min_pair,max_density_dev,max_disp,broken_bonds,px,py,energy";
    return h;
}

inline void write_time_series_row(std::ostream& os, const TimeSample& s) {
    os << s.step << ',' << format_real(s.t);
    for (double v : s.probes) os << ',' << format_real(v);
    os << ',' << format_real(s.instability.min_pair_distance) << ',' << format_real(s.instability.max_density_deviation)
       << ',' << format_real(s.instability.max_displacement) << ',' << s.instability.broken_bonds << ','
       << format_real(s.momentum[0]) << ',' << format_real(s.momentum[1]) << ',' << format_real(s.energy) << '\n';
}

// ---------------------------------------------------------------------------
// Comparison against an analytic reference
// ---------------------------------------------------------------------------

struct CompareReport {
    std::size_t samples = 0;
    double linf = 0.0;
    double rms = 0.0;
    double reference_peak = 0.0;  ///< max |oracle| over the window
    std::optional<double> measured_period;
    std::optional<double> reference_period;
    std::string warning;

    double relative_linf() const { return reference_peak > 0.0 ? linf / reference_peak : linf; }
};

/// L-infinity and RMS error of `values` against `oracle` for t <= window.
/// A series ending before the window only produces a warning.
inline CompareReport compare_report(const std::vector<double>& t, const std::vector<double>& values,
                                    const std::function<double(double)>& oracle, double window,
                                    std::optional<double> reference_period = std::nullopt) {
    if (t.size() != values.size()) throw ArgumentError("compare_report: size mismatch");
    if (!oracle) throw ArgumentError("compare_report: no oracle");
    CompareReport rep;
    rep.reference_period = reference_period;
    double sq = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] > window * (1.0 + 1e-12)) break;
        const double ref = oracle(t[i]);
        const double err = std::abs(values[i] - ref);
        rep.linf = std::max(rep.linf, err);
        rep.reference_peak = std::max(rep.reference_peak, std::abs(ref));
        sq += err * err;
        ++rep.samples;
    }
    if (rep.samples > 0) rep.rms = std::sqrt(sq / static_cast<double>(rep.samples));
    if (t.empty() || t.back() < window * (1.0 - 1e-9))
        rep.warning = "series ends at t=" + format_real(t.empty() ? 0.0 : t.back()) + " before the comparison window " +
                      format_real(window);
    if (reference_period) {
        try {
            rep.measured_period = measure_period(t, values);
        } catch (const InsufficientData&) {
        }
    }
    return rep;
}

inline void write_compare_csv(std::ostream& os, const std::vector<double>& t, const std::vector<double>& values,
                              const std::function<double(double)>& oracle, const std::string& hash) {
    os << "# config_hash=" << hash << '\n' << "t,computed,analytic,error\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double ref = oracle(t[i]);
        os << format_real(t[i]) << ',' << format_real(values[i]) << ',' << format_real(ref) << ','
           << format_real(values[i] - ref) << '\n';
    }
}

inline std::string compare_summary(const CompareReport& r, const std::string& hash) {
    std::ostringstream os;
    os << "# config_hash=" << hash << '\n';
    os << "samples          " << r.samples << '\n';
    os << "linf             " << format_real(r.linf) << '\n';
    os << "rms              " << format_real(r.rms) << '\n';
    os << "reference_peak   " << format_real(r.reference_peak) << '\n';
    os << "relative_linf    " << format_real(r.relative_linf()) << '\n';
    if (r.reference_period) os << "reference_period " << format_real(*r.reference_period) << '\n';
    if (r.measured_period) os << "measured_period  " << format_real(*r.measured_period) << '\n';
    if (!r.warning.empty()) os << "warning          " << r.warning << '\n';
    return os.str();
}

/// Reads the probe column `column` (0-based after step,t) from a time-series CSV.
inline std::pair<std::vector<double>, std::vector<double>> read_probe_series(std::istream& is, std::size_t column = 0) {
    std::vector<double> t, y;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() < column + 3) throw IoError("time-series row too short");
        t.push_back(std::strtod(f[1].c_str(), nullptr));
        y.push_back(std::strtod(f[2 + column].c_str(), nullptr));
    }
    return {t, y};
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline constexpr const char* code_version = "1.0.0";

inline nlohmann::json summary_json(const RunSummary& s) {
    nlohmann::json j;
    j["scenario"] = s.scenario;
    j["steps"] = s.steps;
    j["t_final"] = s.t_final;
    j["failed"] = s.failed;
    j["failure"] = s.failure;
    j["cfl_warning"] = s.cfl_warning;
    j["min_pair_distance"] = s.min_pair_distance;
    j["max_density_deviation"] = s.max_density_deviation;
    j["max_probe_magnitude"] = s.max_probe_magnitude;
    j["first_clumping_time"] = s.first_clumping_time ? nlohmann::json(*s.first_clumping_time) : nlohmann::json();
    j["first_fracture_time"] = s.first_fracture_time ? nlohmann::json(*s.first_fracture_time) : nlohmann::json();
    j["momentum_drift"] = s.momentum_drift;
    j["energy_drift"] = s.energy_drift;
    j["measured_period"] = s.measured_period ? nlohmann::json(*s.measured_period) : nlohmann::json();
    j["renorm_fallbacks"] = s.renorm_fallbacks;
    j["wall_seconds"] = s.wall_seconds;
    return j;
}

/// Writes `j` to `path` through a temporary file and a rename.
inline void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
        f << j.dump(2) << '\n';
        if (!f) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

/// Output directory: ASPH_OUTPUT_DIR when set, otherwise `fallback`.
inline std::filesystem::path output_directory(const std::string& fallback) {
    const char* env = std::getenv("ASPH_OUTPUT_DIR");
    return (env && *env) ? std::filesystem::path(env) : std::filesystem::path(fallback);
}

/// Observer writing snapshots, the time series and the manifest into a directory.
///
/// A failed run leaves a FAILED marker next to the partial outputs.
class FileRunWriter : public RunObserver<2> {
public:
    FileRunWriter(std::filesystem::path dir, RunRequest req)
        : dir_(std::move(dir)), req_(std::move(req)), hash_(config_hash(req_)) {}

    const std::filesystem::path& directory() const { return dir_; }
    const std::string& hash() const { return hash_; }

    void on_start(const Scenario<2>& sc, const SimConfig&) override {
        std::filesystem::create_directories(dir_ / "snapshots");
        std::filesystem::remove(dir_ / "FAILED");
        started_ = std::chrono::system_clock::now();
        series_.open(dir_ / "timeseries.csv", std::ios::binary);
        if (!series_) throw IoError("cannot open time-series file in '" + dir_.string() + "'");
        series_ << "# scenario=" << sc.name << " config_hash=" << hash_ << '\n' << time_series_header(sc.probes) << '\n';
    }

    void on_sample(const TimeSample& s) override {
        write_time_series_row(series_, s);
        if (!series_) throw IoError("time-series write failed");
    }

    void on_snapshot(const ParticleSet<2>& s, const MaterialModel& mat, double t) override {
        char name[64];
        std::snprintf(name, sizeof name, "snap_%09" PRIu64 ".csv", s.step);
        write_snapshot<2>(dir_ / "snapshots" / name, s, mat, t, hash_);
    }

    void on_finish(const RunSummary& sum) override {
        series_.flush();
        nlohmann::json m;
        m["code_version"] = code_version;
        m["config_hash"] = hash_;
        m["config"] = effective_config(req_);
        m["start_time"] = iso_time(started_);
        m["end_time"] = iso_time(std::chrono::system_clock::now());
        m["summary"] = summary_json(sum);
        write_json_atomic(dir_ / "manifest.json", m);
        if (sum.failed) mark_failed(sum.failure);
    }

    void mark_failed(const std::string& why) const {
        std::ofstream f(dir_ / "FAILED", std::ios::binary);
        f << why << '\n';
    }

private:
    static std::string iso_time(std::chrono::system_clock::time_point tp) {
        const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
        std::tm tm{};
        gmtime_r(&tt, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    std::filesystem::path dir_;
    RunRequest req_;
    std::string hash_;
    std::ofstream series_;
    std::chrono::system_clock::time_point started_;
};

}  // namespace asph
