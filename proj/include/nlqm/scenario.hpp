#pragma once

// Experiment runner: declarative configs, the reference two-spin preset,
// time series of ensemble averages, locality audits, and CSV/JSON export.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nlqm/dynamics.hpp"
#include "nlqm/hamfun.hpp"
#include "nlqm/measure.hpp"
#include "nlqm/qstate.hpp"

namespace nlqm {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Presets

/// (1/3)|1>|2> - (2 sqrt 2 / 3)|2>|1>, |1> = (cos pi/8, sin pi/8), |2> = (-sin pi/8, cos pi/8).
inline StateVector vi_c_state() {
    const double c = std::cos(std::numbers::pi / 8.0);
    const double s = std::sin(std::numbers::pi / 8.0);
    Vector one(2), two(2);
    one << c, s;
    two << -s, c;
    const Matrix a = kron(one, two);
    const Matrix b = kron(two, one);
    const Vector psi = Vector(a.col(0)) / 3.0 - (2.0 * std::numbers::sqrt2 / 3.0) * Vector(b.col(0));
    return StateVector(psi, 1e-14 + 4 * kNormTolerance);
}

/// (|01> - |10>) / sqrt 2.
inline StateVector singlet_state() {
    Vector v = Vector::Zero(4);
    v(1) = 1.0 / std::numbers::sqrt2;
    v(2) = -1.0 / std::numbers::sqrt2;
    return StateVector(std::move(v));
}

inline constexpr double kViCA = 8.0;
inline constexpr double kViCB = 0.5;
inline constexpr double kViCT1 = 3.5;
inline constexpr double kViCT2 = 8.0;

// ---------------------------------------------------------------------------
// Named operators

namespace detail {

inline Observable pauli_named(std::string_view name, const std::string& field) {
    if (name == "I") return pauli::identity();
    if (name == "sx") return pauli::x();
    if (name == "sy") return pauli::y();
    if (name == "sz") return pauli::z();
    throw ValidationError(field + ": unknown one-particle operator '" + std::string(name) +
                          "' (expected I, sx, sy or sz)");
}

}  // namespace detail

/// Two-particle operator named "<a>*<b>" with a, b in {I, sx, sy, sz}.
inline Observable named_observable(std::string_view name, const std::string& field = "observable") {
    const auto star = name.find('*');
    if (star == std::string_view::npos || name.find('*', star + 1) != std::string_view::npos)
        throw ValidationError(field + ": expected '<a>*<b>', got '" + std::string(name) + "'");
    return tensor(detail::pauli_named(name.substr(0, star), field), detail::pauli_named(name.substr(star + 1), field));
}

// ---------------------------------------------------------------------------
// Config

enum class ExportFormat { csv, json };

struct FunctionalConfig {
    enum class Kind { linear, curie_weiss };

    Kind kind = Kind::curie_weiss;
    double coeff = 0.0;
    Matrix matrix = Matrix::Zero(2, 2);

    HamiltonianFunctional build() const {
        if (kind == Kind::curie_weiss) return curie_weiss(coeff);
        return linear_functional(Observable(matrix));
    }

    static FunctionalConfig curie_weiss_of(double c) { return {Kind::curie_weiss, c, Matrix::Zero(2, 2)}; }
    static FunctionalConfig linear_of(const Observable& h) { return {Kind::linear, 0.0, h.entries()}; }
};

struct ExperimentConfig {
    std::string preset = "vi_c";  // empty when explicit amplitudes are given
    Vector amplitudes;
    FunctionalConfig functional1 = FunctionalConfig::curie_weiss_of(kViCA);
    FunctionalConfig functional2 = FunctionalConfig::curie_weiss_of(kViCB);
    DetectionSchedule schedule{kViCT1, kViCT2};
    std::vector<std::string> observables{"sx*sx", "sx*I", "I*sx"};
    double t_max = 10.0;
    double dt = 1e-3;
    std::size_t sample_stride = 10;
    Algorithm algorithm = Algorithm::open;
    Engine engine = Engine::automatic;
    BlochAxis axis1 = BlochAxis::x();
    BlochAxis axis2 = BlochAxis::x();
    bool emit_branches = false;

    StateVector initial_state() const {
        if (preset == "vi_c") return vi_c_state();
        if (preset == "singlet") return singlet_state();
        if (!preset.empty()) throw ValidationError("initial_state: unknown preset '" + preset + "'");
        if (amplitudes.size() != 4) throw ValidationError("initial_state: expected 4 amplitudes for a spin pair");
        const StateVector s = StateVector::normalized(amplitudes);
        if (std::abs(s.norm() - 1.0) > 1e-9) throw ValidationError("initial_state: amplitudes do not normalize");
        return s;
    }

    EvolveOptions evolve_options() const { return {engine, dt}; }

    void validate() const {
        (void)initial_state();
        (void)functional1.build();
        (void)functional2.build();
        if (!std::isfinite(t_max) || t_max < 0.0) throw ValidationError("t_max: must be finite and >= 0");
        if (!(dt > 0.0 && dt <= kMaxStep)) throw ValidationError("dt: must lie in (0, 0.01]");
        if (sample_stride == 0) throw ValidationError("sample_stride: must be a positive integer");
        if (!(schedule.t1 >= 0.0 && schedule.t1 <= t_max)) throw ValidationError("schedule.t1: must lie in [0, t_max]");
        if (!(schedule.t2 >= 0.0 && schedule.t2 <= t_max)) throw ValidationError("schedule.t2: must lie in [0, t_max]");
        for (std::size_t i = 0; i < observables.size(); ++i)
            (void)named_observable(observables[i], "observables[" + std::to_string(i) + "]");
        if (engine == Engine::closed_form && !closed_form_available(functional1.build(), functional2.build()))
            throw ValidationError("engine: closed_form requires curie_weiss functionals on both particles");
    }
};

inline ExperimentConfig figure_config(int figure) {
    if (figure != 1 && figure != 2) throw ValidationError("figure: expected 1 or 2");
    ExperimentConfig c;
    c.algorithm = figure == 1 ? Algorithm::open : Algorithm::projection_standard;
    c.emit_branches = figure == 2;
    return c;
}

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::open: return "open";
        case Algorithm::projection_standard: return "projection_standard";
        case Algorithm::projection_generalized: return "projection_generalized";
    }
    return "?";
}

inline std::string to_string(Engine e) {
    switch (e) {
        case Engine::automatic: return "automatic";
        case Engine::closed_form: return "closed_form";
        case Engine::integrator: return "integrator";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s, const std::string& field = "algorithm") {
    if (s == "open") return Algorithm::open;
    if (s == "projection_standard") return Algorithm::projection_standard;
    if (s == "projection_generalized") return Algorithm::projection_generalized;
    throw ValidationError(field + ": expected open, projection_standard or projection_generalized");
}

inline Engine parse_engine(const std::string& s, const std::string& field = "engine") {
    if (s == "automatic") return Engine::automatic;
    if (s == "closed_form") return Engine::closed_form;
    if (s == "integrator") return Engine::integrator;
    throw ValidationError(field + ": expected automatic, closed_form or integrator");
}

inline ExportFormat parse_format(const std::string& s) {
    if (s == "csv") return ExportFormat::csv;
    if (s == "json") return ExportFormat::json;
    throw ValidationError("format: expected csv or json");
}

namespace detail {

inline double json_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ValidationError(field + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError(field + ": must be finite");
    return v;
}

inline cplx json_complex(const json& j, const std::string& field) {
    if (j.is_number()) return {json_number(j, field), 0.0};
    if (j.is_array() && j.size() == 2) return {json_number(j[0], field + "[0]"), json_number(j[1], field + "[1]")};
    throw ValidationError(field + ": expected a number or [re, im]");
}

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline BlochAxis parse_axis(const json& j, const std::string& field) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "x") return BlochAxis::x();
        if (s == "y") return BlochAxis::y();
        if (s == "z") return BlochAxis::z();
        throw ValidationError(field + ": expected x, y, z or [ax, ay, az]");
    }
    if (j.is_array() && j.size() == 3) {
        const double x = json_number(j[0], field + "[0]");
        const double y = json_number(j[1], field + "[1]");
        const double z = json_number(j[2], field + "[2]");
        // Already-unit axes are kept bit-for-bit so configs round-trip.
        if (std::abs(std::sqrt(x * x + y * y + z * z) - 1.0) <= kNormTolerance) return {x, y, z};
        try {
            return BlochAxis::normalized(x, y, z);
        } catch (const ValidationError&) {
            throw ValidationError(field + ": axis must be nonzero");
        }
    }
    throw ValidationError(field + ": expected x, y, z or [ax, ay, az]");
}

inline BlochAxis parse_axis_text(const std::string& s, const std::string& field) {
    if (s == "x" || s == "y" || s == "z") return parse_axis(json(s), field);
    json arr = json::array();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            arr.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ValidationError(field + ": cannot parse '" + s + "'");
        }
    }
    return parse_axis(arr, field);
}

inline FunctionalConfig parse_functional(const json& j, const std::string& field) {
    if (!j.is_object()) throw ValidationError(field + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (key != "kind" && key != "coeff" && key != "matrix")
            throw ValidationError(field + "." + key + ": unknown field");
    if (!j.contains("kind") || !j["kind"].is_string()) throw ValidationError(field + ".kind: required string");
    const auto kind = j["kind"].get<std::string>();
    if (kind == "curie_weiss") {
        if (!j.contains("coeff")) throw ValidationError(field + ".coeff: required for curie_weiss");
        return FunctionalConfig::curie_weiss_of(json_number(j["coeff"], field + ".coeff"));
    }
    if (kind == "linear") {
        if (!j.contains("matrix")) throw ValidationError(field + ".matrix: required for linear");
        const json& m = j["matrix"];
        if (m.is_string()) return FunctionalConfig::linear_of(pauli_named(m.get<std::string>(), field + ".matrix"));
        if (!m.is_array() || m.size() != 2) throw ValidationError(field + ".matrix: expected a 2x2 matrix");
        Matrix h(2, 2);
        for (std::size_t r = 0; r < 2; ++r) {
            if (!m[r].is_array() || m[r].size() != 2) throw ValidationError(field + ".matrix: expected a 2x2 matrix");
            for (std::size_t c = 0; c < 2; ++c)
                h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    json_complex(m[r][c], field + ".matrix[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
        try {
            return FunctionalConfig::linear_of(Observable(h));
        } catch (const ValidationError&) {
            throw ValidationError(field + ".matrix: must be Hermitian");
        }
    }
    throw ValidationError(field + ".kind: expected linear or curie_weiss");
}

inline json functional_json(const FunctionalConfig& f) {
    if (f.kind == FunctionalConfig::Kind::curie_weiss) return {{"kind", "curie_weiss"}, {"coeff", f.coeff}};
    json rows = json::array();
    for (Eigen::Index r = 0; r < f.matrix.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < f.matrix.cols(); ++c) row.push_back(complex_json(f.matrix(r, c)));
        rows.push_back(row);
    }
    return {{"kind", "linear"}, {"matrix", rows}};
}

inline json axis_json(const BlochAxis& a) {
    return json::array({a.components()[0], a.components()[1], a.components()[2]});
}

}  // namespace detail

/// Parses and validates a config document. Missing optional fields keep the
/// reference-scenario defaults.
inline ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    static const std::vector<std::string> known{"initial_state", "functional1", "functional2",  "schedule",
                                                "observables",   "t_max",       "dt",           "sample_stride",
                                                "algorithm",     "engine",      "axis1",        "axis2",
                                                "emit_branches"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError(key + ": unknown field");

    ExperimentConfig c;
    if (j.contains("initial_state")) {
        const json& s = j["initial_state"];
        if (s.is_string()) {
            c.preset = s.get<std::string>();
            if (c.preset != "vi_c" && c.preset != "singlet")
                throw ValidationError("initial_state: unknown preset '" + c.preset + "'");
        } else if (s.is_array()) {
            c.preset.clear();
            c.amplitudes.resize(static_cast<Eigen::Index>(s.size()));
            for (std::size_t i = 0; i < s.size(); ++i)
                c.amplitudes(static_cast<Eigen::Index>(i)) =
                    detail::json_complex(s[i], "initial_state[" + std::to_string(i) + "]");
        } else {
            throw ValidationError("initial_state: expected a preset name or an amplitude list");
        }
    }
    if (j.contains("functional1")) c.functional1 = detail::parse_functional(j["functional1"], "functional1");
    if (j.contains("functional2")) c.functional2 = detail::parse_functional(j["functional2"], "functional2");
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        if (!s.is_object() || !s.contains("t1") || !s.contains("t2"))
            throw ValidationError("schedule: expected {\"t1\": ..., \"t2\": ...}");
        for (const auto& [key, _] : s.items())
            if (key != "t1" && key != "t2") throw ValidationError("schedule." + key + ": unknown field");
        c.schedule = {detail::json_number(s["t1"], "schedule.t1"), detail::json_number(s["t2"], "schedule.t2")};
    }
    if (j.contains("observables")) {
        const json& o = j["observables"];
        if (!o.is_array()) throw ValidationError("observables: expected a list of names");
        c.observables.clear();
        for (std::size_t i = 0; i < o.size(); ++i) {
            if (!o[i].is_string()) throw ValidationError("observables[" + std::to_string(i) + "]: expected a string");
            c.observables.push_back(o[i].get<std::string>());
        }
    }
    if (j.contains("t_max")) c.t_max = detail::json_number(j["t_max"], "t_max");
    if (j.contains("dt")) c.dt = detail::json_number(j["dt"], "dt");
    if (j.contains("sample_stride")) {
        const json& s = j["sample_stride"];
        if (!s.is_number_integer() || s.get<long long>() < 1)
            throw ValidationError("sample_stride: must be a positive integer");
        c.sample_stride = s.get<std::size_t>();
    }
    if (j.contains("algorithm")) {
        if (!j["algorithm"].is_string()) throw ValidationError("algorithm: expected a string");
        c.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    }
    if (j.contains("engine")) {
        if (!j["engine"].is_string()) throw ValidationError("engine: expected a string");
        c.engine = parse_engine(j["engine"].get<std::string>());
    }
    if (j.contains("axis1")) c.axis1 = detail::parse_axis(j["axis1"], "axis1");
    if (j.contains("axis2")) c.axis2 = detail::parse_axis(j["axis2"], "axis2");
    if (j.contains("emit_branches")) {
        if (!j["emit_branches"].is_boolean()) throw ValidationError("emit_branches: expected true or false");
        c.emit_branches = j["emit_branches"].get<bool>();
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

inline json to_json(const ExperimentConfig& c) {
    json j;
    if (!c.preset.empty()) {
        j["initial_state"] = c.preset;
    } else {
        json amps = json::array();
        for (Eigen::Index i = 0; i < c.amplitudes.size(); ++i) amps.push_back(detail::complex_json(c.amplitudes(i)));
        j["initial_state"] = amps;
    }
    j["functional1"] = detail::functional_json(c.functional1);
    j["functional2"] = detail::functional_json(c.functional2);
    j["schedule"] = {{"t1", c.schedule.t1}, {"t2", c.schedule.t2}};
    j["observables"] = c.observables;
    j["t_max"] = c.t_max;
    j["dt"] = c.dt;
    j["sample_stride"] = c.sample_stride;
    j["algorithm"] = to_string(c.algorithm);
    j["engine"] = to_string(c.engine);
    j["axis1"] = detail::axis_json(c.axis1);
    j["axis2"] = detail::axis_json(c.axis2);
    j["emit_branches"] = c.emit_branches;
    return j;
}

// ---------------------------------------------------------------------------
// Runs

struct Sample {
    double t = 0.0;
    double value = 0.0;
};

/// Sampled curve. Abscissae are non-decreasing; a repeated abscissa carries
/// the left and right limits at a detection time.
struct TimeSeries {
    std::string label;
    std::vector<Sample> samples;
};

/// Uniform grid 0, dt*stride, ..., t_max with t1 and t2 inserted exactly.
/// Projection algorithms sample each detection time twice (left, right).
inline std::vector<SamplePoint> sample_points(const ExperimentConfig& c) {
    const double step = c.dt * static_cast<double>(c.sample_stride);
    const auto count = static_cast<long long>(std::floor(c.t_max / step + 1e-9));
    std::vector<double> detections;
    for (double tk : {c.schedule.t1, c.schedule.t2})
        if (tk <= c.t_max && std::find(detections.begin(), detections.end(), tk) == detections.end())
            detections.push_back(tk);

    std::vector<SamplePoint> pts;
    auto snap = [&](double t) {
        for (double tk : detections)
            if (std::abs(t - tk) <= 1e-9 * step) return tk;
        if (std::abs(t - c.t_max) <= 1e-9 * step) return c.t_max;
        return t;
    };
    for (long long k = 0; k <= count; ++k) pts.push_back({snap(static_cast<double>(k) * step), Side::right});
    if (pts.back().t < c.t_max) pts.push_back({c.t_max, Side::right});
    const bool doubled = c.algorithm != Algorithm::open;
    for (double tk : detections) {
        pts.push_back({tk, Side::right});
        if (doubled) pts.push_back({tk, Side::left});
    }
    std::sort(pts.begin(), pts.end(), [](const SamplePoint& a, const SamplePoint& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.side == Side::left && b.side == Side::right;
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const SamplePoint& a, const SamplePoint& b) { return a.t == b.t && a.side == b.side; }),
              pts.end());
    return pts;
}

inline std::vector<Ensemble> run_ensembles(const ExperimentConfig& c, const std::vector<SamplePoint>& points) {
    return ensembles_after_measurement(c.initial_state(), c.functional1.build(), c.functional2.build(), c.schedule,
                                       c.axis1, points, c.algorithm, c.evolve_options());
}

/// One series per requested observable; with emit_branches, also the two
/// single-outcome conditional curves "<obs>|+" and "<obs>|-".
inline std::vector<TimeSeries> run(const ExperimentConfig& c) {
    c.validate();
    const auto points = sample_points(c);
    const auto ensembles = run_ensembles(c, points);
    std::vector<TimeSeries> out;
    for (const auto& name : c.observables) {
        const Observable obs = named_observable(name);
        TimeSeries ts{name, {}};
        for (std::size_t i = 0; i < points.size(); ++i)
            ts.samples.push_back({points[i].t, ensemble_average(ensembles[i], obs)});
        out.push_back(std::move(ts));
    }
    if (c.emit_branches && c.algorithm != Algorithm::open) {
        for (const auto& name : c.observables) {
            const Observable obs = named_observable(name);
            for (Sign s : kSigns) {
                TimeSeries ts{name + "|" + sign_char(s), {}};
                bool present = true;
                for (std::size_t i = 0; i < points.size() && present; ++i) {
                    const Ensemble& e = ensembles[i];
                    if (e.size() == 1 && !e.front().outcome) {
                        ts.samples.push_back({points[i].t, expect(e.front().state, obs)});
                        continue;
                    }
                    const auto it = std::find_if(e.begin(), e.end(), [&](const Branch& b) { return b.outcome == s; });
                    present = it != e.end();
                    if (present) ts.samples.push_back({points[i].t, expect(it->state, obs)});
                }
                if (present) out.push_back(std::move(ts));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Locality audit

struct AuditEntry {
    std::string perturbation;
    double max_deviation = 0.0;
    bool pass = false;
};

struct AuditReport {
    Subsystem target = Subsystem::first;
    std::vector<AuditEntry> entries;

    bool pass() const {
        return std::all_of(entries.begin(), entries.end(), [](const AuditEntry& e) { return e.pass; });
    }

    std::string text() const {
        std::ostringstream os;
        os << "locality audit of particle " << static_cast<int>(target) << "\n";
        for (const auto& e : entries) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3e", e.max_deviation);
            os << (e.pass ? "PASS " : "FAIL ") << e.perturbation << "  max deviation " << buf << "\n";
        }
        os << (pass() ? "PASS" : "FAIL") << "\n";
        return os.str();
    }
};

inline constexpr double kLocalityTolerance = 1e-9;

/// Applies "field=value" to a config. Returns the particle that owns the field.
inline Subsystem apply_override(ExperimentConfig& c, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ValidationError("perturbation '" + spec + "': expected field=value");
    const std::string field = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    auto number = [&]() {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw ValidationError(field + ": cannot parse number '" + value + "'");
        }
    };
    auto coeff = [&](FunctionalConfig& f) {
        if (f.kind != FunctionalConfig::Kind::curie_weiss)
            throw ValidationError(field + ": functional is not curie_weiss");
        f.coeff = number();
    };
    if (field == "A" || field == "functional1.coeff") {
        coeff(c.functional1);
        return Subsystem::first;
    }
    if (field == "B" || field == "functional2.coeff") {
        coeff(c.functional2);
        return Subsystem::second;
    }
    if (field == "t1" || field == "schedule.t1") {
        c.schedule.t1 = number();
        return Subsystem::first;
    }
    if (field == "t2" || field == "schedule.t2") {
        c.schedule.t2 = number();
        return Subsystem::second;
    }
    if (field == "axis1") {
        c.axis1 = detail::parse_axis_text(value, field);
        return Subsystem::first;
    }
    if (field == "axis2") {
        c.axis2 = detail::parse_axis_text(value, field);
        return Subsystem::second;
    }
    throw ValidationError("perturbation field '" + field + "' is not supported (A, B, t1, t2, axis1, axis2)");
}

/// Reruns `base` under each perturbation of the other particle's fields and
/// reports the largest change of the target particle's reduced-density-matrix
/// trajectory on the base sample points. PASS iff <= 1e-9.
inline AuditReport locality_audit(const ExperimentConfig& base, const std::vector<std::string>& perturbations,
                                  Subsystem target) {
    base.validate();
    const auto points = sample_points(base);
    auto trajectory = [&](const ExperimentConfig& c) {
        const auto ens = run_ensembles(c, points);
        std::vector<Matrix> rho;
        rho.reserve(ens.size());
        for (const auto& e : ens) rho.push_back(ensemble_reduced(e, target));
        return rho;
    };
    const auto reference = trajectory(base);
    AuditReport report{target, {}};
    for (const auto& p : perturbations) {
        ExperimentConfig c = base;
        if (apply_override(c, p) == target)
            throw ValidationError("perturbation '" + p + "' touches the audited particle's own fields");
        c.validate();
        const auto rho = trajectory(c);
        double dev = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i)
            dev = std::max(dev, (rho[i] - reference[i]).cwiseAbs().maxCoeff());
        report.entries.push_back({p, dev, dev <= kLocalityTolerance});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Export

namespace detail {

inline std::string fmt15(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

}  // namespace detail

/// CSV: header "t,<label>...", one LF-terminated row per sample, %.15g values.
inline void write_csv(std::ostream& os, const std::vector<TimeSeries>& series) {
    os << "t";
    for (const auto& s : series) os << ',' << s.label;
    os << '\n';
    if (series.empty()) return;
    const std::size_t rows = series.front().samples.size();
    for (const auto& s : series)
        if (s.samples.size() != rows) throw ValidationError("export: series have different lengths");
    for (std::size_t i = 0; i < rows; ++i) {
        os << detail::fmt15(series.front().samples[i].t);
        for (const auto& s : series) {
            if (s.samples[i].t != series.front().samples[i].t)
                throw ValidationError("export: series are sampled on different grids");
            os << ',' << detail::fmt15(s.samples[i].value);
        }
        os << '\n';
    }
}

inline json series_json(const std::vector<TimeSeries>& series, const json& config_echo) {
    json arr = json::array();
    for (const auto& s : series) {
        json samples = json::array();
        for (const auto& p : s.samples) samples.push_back(json::array({p.t, p.value}));
        arr.push_back({{"label", s.label}, {"samples", samples}});
    }
    return {{"config_echo", config_echo}, {"series", arr}};
}

inline void write_json(std::ostream& os, const std::vector<TimeSeries>& series, const json& config_echo) {
    os << series_json(series, config_echo).dump(2) << '\n';
}

inline void export_series(const std::vector<TimeSeries>& series, ExportFormat format, const std::string& path,
                          const json& config_echo = nullptr) {
    std::ostringstream buf;
    if (format == ExportFormat::csv)
        write_csv(buf, series);
    else
        write_json(buf, series, config_echo);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << buf.str();
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace nlqm
