#pragma once

// Batch jobs: the key = value config format, dispatch to a solver, and the
// result files (energies.csv, trace_<k>.csv, state_<k>.csv, job_resolved.cfg).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "itprop/error.hpp"
#include "itprop/hamiltonian.hpp"
#include "itprop/mesh.hpp"
#include "itprop/propagation.hpp"
#include "itprop/reference.hpp"
#include "itprop/spectrum.hpp"

namespace itprop {

enum class SolverKind { Ladder, Block, ModeScan };

struct JobSpec {
    PotentialSpec model = potential::HarmonicOscillator{};
    Geometry geometry = Geometry::Radial;
    Modes modes = Modes::defaults_for(Geometry::Radial);  // empty for mode_scan

    // grid
    double h = 0;
    std::optional<double> h_rho, h_z;  // cylindrical overrides of h
    std::optional<double> rmax, rho_max, z_max, extent;

    SolverKind solver = SolverKind::Ladder;
    int n_states = 1;
    std::size_t block_size = 1;
    std::size_t rr_stride = 10;
    int mode_max = 0;
    int states_per_mode = 1;
    double degeneracy_tol = default_degeneracy_tol;

    PropagationConfig propagation;

    std::string output_dir = "out";
    bool dump_states = false;

    bool operator==(JobSpec const& o) const {
        auto const& p = propagation;
        auto const& q = o.propagation;
        return model == o.model && geometry == o.geometry && modes == o.modes && h == o.h && h_rho == o.h_rho &&
               h_z == o.h_z && rmax == o.rmax && rho_max == o.rho_max && z_max == o.z_max && extent == o.extent &&
               solver == o.solver && n_states == o.n_states && block_size == o.block_size &&
               rr_stride == o.rr_stride && mode_max == o.mode_max && states_per_mode == o.states_per_mode &&
               degeneracy_tol == o.degeneracy_tol && p.dtau == q.dtau && p.safety == q.safety &&
               p.max_steps == q.max_steps && p.energy_tol == q.energy_tol && p.variance_tol == q.variance_tol &&
               p.trace_stride == q.trace_stride && p.seed == q.seed && output_dir == o.output_dir &&
               dump_states == o.dump_states;
    }
};

/// Shortest decimal representation that parses back to the same double.
inline std::string format_number(double x) {
    char buf[64];
    auto const res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto const e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct Entry {
    std::string value;
    int line;
};

[[noreturn]] inline void parse_fail(int line, std::string const& key, std::string const& what) {
    std::string where = line > 0 ? "line " + std::to_string(line) : "config";
    throw Error(ErrorCode::ParseError, where + ", key '" + key + "': " + what);
}

class ConfigReader {
  public:
    explicit ConfigReader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(std::string const& key) const { return entries_.count(key) != 0; }

    std::optional<Entry> take(std::string const& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string text(std::string const& key) {
        auto e = take(key);
        if (!e) parse_fail(0, key, "missing required key");
        return e->value;
    }

    std::optional<double> real(std::string const& key, bool positive = true) {
        auto e = take(key);
        if (!e) return std::nullopt;
        double v = 0;
        auto const& s = e->value;
        auto const res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
            parse_fail(e->line, key, "expected a real number, got '" + s + "'");
        if (positive && !(v > 0)) parse_fail(e->line, key, "must be positive");
        return v;
    }

    double real_required(std::string const& key) {
        auto v = real(key);
        if (!v) parse_fail(0, key, "missing required key");
        return *v;
    }

    template <class Int>
    std::optional<Int> integer(std::string const& key, Int minimum) {
        auto e = take(key);
        if (!e) return std::nullopt;
        Int v{};
        auto const& s = e->value;
        auto const res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            parse_fail(e->line, key, "expected an integer, got '" + s + "'");
        if (v < minimum) parse_fail(e->line, key, "must be >= " + std::to_string(minimum));
        return v;
    }

    std::optional<bool> boolean(std::string const& key) {
        auto e = take(key);
        if (!e) return std::nullopt;
        if (e->value == "true" || e->value == "1") return true;
        if (e->value == "false" || e->value == "0") return false;
        parse_fail(e->line, key, "expected true or false");
    }

    /// Fails on a key that is present but not meaningful for this job.
    void forbid(std::string const& key, std::string const& why) {
        if (auto it = entries_.find(key); it != entries_.end()) parse_fail(it->second.line, key, why);
    }

    void finish() const {
        for (auto const& [k, e] : entries_)
            if (!used_.count(k)) parse_fail(e.line, k, "unknown key");
    }

    int line_of(std::string const& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

  private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

inline std::set<std::string> const& known_sections() {
    static std::set<std::string> const s{"model", "grid", "solver", "propagation", "output"};
    return s;
}

} // namespace detail

/// Parses the line-oriented `key = value` format with `[section]` headers.
/// Keys may also be written fully qualified (`grid.h = 0.02`). Unknown and
/// duplicate keys are rejected.
inline JobSpec parse_config(std::string_view text) {
    std::map<std::string, detail::Entry> entries;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::string const s = detail::trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') detail::parse_fail(line, s, "malformed section header");
            section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
            if (!detail::known_sections().count(section)) detail::parse_fail(line, section, "unknown section");
            continue;
        }
        auto const eq = s.find('=');
        if (eq == std::string::npos) detail::parse_fail(line, s, "expected key = value");
        std::string key = detail::trim(std::string_view(s).substr(0, eq));
        std::string value = detail::trim(std::string_view(s).substr(eq + 1));
        if (key.empty()) detail::parse_fail(line, key, "empty key");
        if (key.find('.') == std::string::npos) {
            if (section.empty()) {
                // `geometry` is the one key commonly written without its section
                if (key == "geometry") key = "grid.geometry";
                else detail::parse_fail(line, key, "key outside any section");
            } else {
                key = section + "." + key;
            }
        }
        if (value.empty()) detail::parse_fail(line, key, "empty value");
        if (entries.count(key))
            detail::parse_fail(line, key, "duplicate key (first set on line " + std::to_string(entries[key].line) + ")");
        entries[key] = {value, line};
    }

    detail::ConfigReader r(std::move(entries));
    JobSpec spec;

    // grid
    std::string const geometry = r.text("grid.geometry");
    if (geometry == "radial") spec.geometry = Geometry::Radial;
    else if (geometry == "cylindrical") spec.geometry = Geometry::Cylindrical;
    else if (geometry == "cartesian") spec.geometry = Geometry::Cartesian3;
    else detail::parse_fail(r.line_of("grid.geometry"), "grid.geometry", "expected radial, cylindrical or cartesian");

    switch (spec.geometry) {
        case Geometry::Radial:
            spec.h = r.real_required("grid.h");
            spec.rmax = r.real_required("grid.rmax");
            for (auto k : {"grid.h_rho", "grid.h_z", "grid.rho_max", "grid.z_max", "grid.extent"})
                r.forbid(k, "not used by radial grids");
            break;
        case Geometry::Cylindrical:
            spec.h = r.real("grid.h").value_or(0);
            spec.h_rho = r.real("grid.h_rho");
            spec.h_z = r.real("grid.h_z");
            if (spec.h == 0 && !(spec.h_rho && spec.h_z))
                detail::parse_fail(0, "grid.h", "missing required key (or both grid.h_rho and grid.h_z)");
            spec.rho_max = r.real_required("grid.rho_max");
            spec.z_max = r.real_required("grid.z_max");
            for (auto k : {"grid.rmax", "grid.extent"}) r.forbid(k, "not used by cylindrical grids");
            break;
        case Geometry::Cartesian3:
            spec.h = r.real_required("grid.h");
            spec.extent = r.real_required("grid.extent");
            for (auto k : {"grid.h_rho", "grid.h_z", "grid.rmax", "grid.rho_max", "grid.z_max"})
                r.forbid(k, "not used by cartesian grids");
            break;
    }

    // model
    std::string const kind = r.text("model.kind");
    std::set<std::string> params;
    if (kind == "harmonic_oscillator") {
        spec.model = potential::HarmonicOscillator{};
    } else if (kind == "spherical_box") {
        spec.model = potential::SphericalBox{r.real_required("model.a")};
        params = {"model.a"};
    } else if (kind == "cylindrical_box") {
        spec.model = potential::CylindricalBox{r.real_required("model.rho0"), r.real_required("model.length")};
        params = {"model.rho0", "model.length"};
    } else if (kind == "cone_dot") {
        spec.model = potential::ConeDot{r.real_required("model.base_radius"), r.real_required("model.height")};
        params = {"model.base_radius", "model.height"};
    } else if (kind == "hydrogenic_dot") {
        spec.model = potential::HydrogenicDot{r.real("model.a")};
        params = {"model.a"};
    } else {
        detail::parse_fail(r.line_of("model.kind"), "model.kind",
                           "expected harmonic_oscillator, spherical_box, cylindrical_box, cone_dot or hydrogenic_dot");
    }
    for (auto k : {"model.a", "model.rho0", "model.length", "model.base_radius", "model.height"})
        if (!params.count(k)) r.forbid(k, "not a parameter of model " + kind);
    if (!compatible(spec.model, spec.geometry))
        detail::parse_fail(r.line_of("model.kind"), "model.kind",
                           "model " + kind + " is not compatible with " + geometry + " geometry");

    // solver
    std::string const solver = r.text("solver.kind");
    if (solver == "ladder") {
        spec.solver = SolverKind::Ladder;
        auto v = r.integer<int>("solver.n_states", 1);
        if (!v) detail::parse_fail(0, "solver.n_states", "missing required key");
        spec.n_states = *v;
    } else if (solver == "block") {
        spec.solver = SolverKind::Block;
        auto v = r.integer<std::size_t>("solver.block_size", 1);
        if (!v) detail::parse_fail(0, "solver.block_size", "missing required key");
        spec.block_size = *v;
        spec.rr_stride = r.integer<std::size_t>("solver.rr_stride", 1).value_or(10);
    } else if (solver == "mode_scan") {
        spec.solver = SolverKind::ModeScan;
        if (spec.geometry == Geometry::Cartesian3)
            detail::parse_fail(r.line_of("solver.kind"), "solver.kind", "mode_scan needs radial or cylindrical geometry");
        auto mm = r.integer<int>("solver.mode_max", 0);
        auto sp = r.integer<int>("solver.states_per_mode", 1);
        if (!mm) detail::parse_fail(0, "solver.mode_max", "missing required key");
        if (!sp) detail::parse_fail(0, "solver.states_per_mode", "missing required key");
        spec.mode_max = *mm;
        spec.states_per_mode = *sp;
    } else {
        detail::parse_fail(r.line_of("solver.kind"), "solver.kind", "expected ladder, block or mode_scan");
    }
    std::map<SolverKind, std::set<std::string>> const solver_keys{
        {SolverKind::Ladder, {"solver.n_states"}},
        {SolverKind::Block, {"solver.block_size", "solver.rr_stride"}},
        {SolverKind::ModeScan, {"solver.mode_max", "solver.states_per_mode"}}};
    for (auto k : {"solver.n_states", "solver.block_size", "solver.rr_stride", "solver.mode_max",
                   "solver.states_per_mode"})
        if (!solver_keys.at(spec.solver).count(k)) r.forbid(k, "not used by solver " + solver);
    spec.degeneracy_tol = r.real("solver.degeneracy_tol").value_or(default_degeneracy_tol);

    // mode numbers live with the model; a mode scan sets them itself
    spec.modes = spec.solver == SolverKind::ModeScan ? Modes{} : Modes::defaults_for(spec.geometry);
    if (spec.solver == SolverKind::ModeScan) {
        r.forbid("model.l", "mode numbers are scanned by mode_scan");
        r.forbid("model.m", "mode numbers are scanned by mode_scan");
    } else {
        if (spec.geometry != Geometry::Radial) r.forbid("model.l", "l applies to radial grids only");
        if (spec.geometry != Geometry::Cylindrical) r.forbid("model.m", "m applies to cylindrical grids only");
        if (auto l = r.integer<int>("model.l", 0)) spec.modes.l = *l;
        if (auto m = r.integer<int>("model.m", std::numeric_limits<int>::min())) spec.modes.m = *m;
    }

    // propagation
    auto& p = spec.propagation;
    if (auto e = r.take("propagation.dtau"); e && e->value != "auto") {
        double v = 0;
        auto const res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
        if (res.ec != std::errc() || res.ptr != e->value.data() + e->value.size() || !(v > 0) || !std::isfinite(v))
            detail::parse_fail(e->line, "propagation.dtau", "expected 'auto' or a positive real");
        p.dtau = v;
    }
    if (auto v = r.real("propagation.safety")) {
        if (*v > 1) detail::parse_fail(r.line_of("propagation.safety"), "propagation.safety", "must be in (0, 1]");
        p.safety = *v;
    }
    p.max_steps = r.integer<std::size_t>("propagation.max_steps", 1).value_or(p.max_steps);
    p.energy_tol = r.real("propagation.energy_tol").value_or(p.energy_tol);
    p.variance_tol = r.real("propagation.variance_tol").value_or(p.variance_tol);
    p.trace_stride = r.integer<std::size_t>("propagation.trace_stride", 1).value_or(p.trace_stride);
    p.seed = r.integer<std::uint64_t>("propagation.seed", 0).value_or(p.seed);

    // output
    if (auto e = r.take("output.dir")) spec.output_dir = e->value;
    spec.dump_states = r.boolean("output.dump_states").value_or(false);

    r.finish();
    return spec;
}

/// Emits a fully resolved config that parse_config reads back to an equal JobSpec.
inline std::string emit_config(JobSpec const& s) {
    std::ostringstream o;
    auto num = [](double x) { return format_number(x); };
    o << "[model]\n";
    std::visit(
        [&](auto const& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, potential::HarmonicOscillator>) {
                o << "kind = harmonic_oscillator\n";
            } else if constexpr (std::is_same_v<T, potential::SphericalBox>) {
                o << "kind = spherical_box\na = " << num(v.a) << "\n";
            } else if constexpr (std::is_same_v<T, potential::CylindricalBox>) {
                o << "kind = cylindrical_box\nrho0 = " << num(v.rho0) << "\nlength = " << num(v.length) << "\n";
            } else if constexpr (std::is_same_v<T, potential::ConeDot>) {
                o << "kind = cone_dot\nbase_radius = " << num(v.base_radius) << "\nheight = " << num(v.height)
                  << "\n";
            } else {
                o << "kind = hydrogenic_dot\n";
                if (v.confinement) o << "a = " << num(*v.confinement) << "\n";
            }
        },
        s.model);
    if (s.modes.l) o << "l = " << *s.modes.l << "\n";
    if (s.modes.m) o << "m = " << *s.modes.m << "\n";

    o << "\n[grid]\ngeometry = " << to_string(s.geometry) << "\n";
    if (s.h > 0) o << "h = " << num(s.h) << "\n";
    if (s.h_rho) o << "h_rho = " << num(*s.h_rho) << "\n";
    if (s.h_z) o << "h_z = " << num(*s.h_z) << "\n";
    if (s.rmax) o << "rmax = " << num(*s.rmax) << "\n";
    if (s.rho_max) o << "rho_max = " << num(*s.rho_max) << "\n";
    if (s.z_max) o << "z_max = " << num(*s.z_max) << "\n";
    if (s.extent) o << "extent = " << num(*s.extent) << "\n";

    o << "\n[solver]\n";
    switch (s.solver) {
        case SolverKind::Ladder: o << "kind = ladder\nn_states = " << s.n_states << "\n"; break;
        case SolverKind::Block:
            o << "kind = block\nblock_size = " << s.block_size << "\nrr_stride = " << s.rr_stride << "\n";
            break;
        case SolverKind::ModeScan:
            o << "kind = mode_scan\nmode_max = " << s.mode_max << "\nstates_per_mode = " << s.states_per_mode << "\n";
            break;
    }
    o << "degeneracy_tol = " << num(s.degeneracy_tol) << "\n";

    auto const& p = s.propagation;
    o << "\n[propagation]\n";
    o << "dtau = " << (p.dtau ? num(*p.dtau) : std::string("auto")) << "\n";
    o << "safety = " << num(p.safety) << "\n";
    o << "max_steps = " << p.max_steps << "\n";
    o << "energy_tol = " << num(p.energy_tol) << "\n";
    o << "variance_tol = " << num(p.variance_tol) << "\n";
    o << "trace_stride = " << p.trace_stride << "\n";
    o << "seed = " << p.seed << "\n";

    o << "\n[output]\ndir = " << s.output_dir << "\ndump_states = " << (s.dump_states ? "true" : "false") << "\n";
    return o.str();
}

inline GridPtr build_job_grid(JobSpec const& s) {
    switch (s.geometry) {
        case Geometry::Radial: return build_grid(Geometry::Radial, s.h, *s.rmax);
        case Geometry::Cylindrical: {
            double const h[2] = {s.h_rho.value_or(s.h), s.h_z.value_or(s.h)};
            double const e[2] = {*s.rho_max, *s.z_max};
            return build_grid(Geometry::Cylindrical, std::span<double const>(h), std::span<double const>(e));
        }
        case Geometry::Cartesian3: return build_grid(Geometry::Cartesian3, s.h, *s.extent);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown geometry");
}

// ---------------------------------------------------------------------------
// analytic comparison

/// One symmetry sector of a reduced problem: the fixed mode value and the
/// multiplicity each of its eigenvalues carries in the reported spectrum.
struct Sector {
    int mode;
    int weight;
};

/// Analytic levels below `cutoff` for the problem a solver actually sees:
/// full 3D when `sectors` is empty (Cartesian grids), otherwise the union of
/// the given reduced sectors. Empty when no closed form exists.
inline std::vector<reference::AnalyticLevel> analytic_levels(PotentialSpec const& model, Geometry geometry,
                                                             std::vector<Sector> const& sectors, double cutoff) {
    using reference::AnalyticLevel;
    std::vector<AnalyticLevel> raw;
    bool const full3d = geometry == Geometry::Cartesian3;

    std::visit(
        [&](auto const& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, potential::HarmonicOscillator>) {
                if (full3d) {
                    for (int n = 0; n + 1.5 <= cutoff; ++n) raw.push_back(reference::ho_level(n));
                } else if (geometry == Geometry::Radial) {
                    for (auto const& s : sectors)
                        for (int k = 0; reference::ho_radial_energy(s.mode, k) <= cutoff; ++k)
                            raw.push_back({reference::ho_radial_energy(s.mode, k), s.weight, {{"l", s.mode}, {"k", k}}});
                } else {
                    for (auto const& s : sectors)
                        for (int k = 0; reference::ho_cylindrical_energy(s.mode, k, 0) <= cutoff; ++k)
                            for (int nz = 0; reference::ho_cylindrical_energy(s.mode, k, nz) <= cutoff; ++nz)
                                raw.push_back({reference::ho_cylindrical_energy(s.mode, k, nz), s.weight,
                                               {{"m", s.mode}, {"k", k}, {"n_z", nz}}});
                }
            } else if constexpr (std::is_same_v<T, potential::SphericalBox>) {
                auto add_l = [&](int l, int weight) {
                    for (int k = 1;; ++k) {
                        auto lv = reference::sphere_box_level(l, k, v.a);
                        if (lv.energy > cutoff) return k > 1;
                        lv.degeneracy = weight;
                        raw.push_back(lv);
                    }
                };
                if (full3d) {
                    for (int l = 0; add_l(l, 2 * l + 1); ++l) {}
                } else {
                    for (auto const& s : sectors) add_l(s.mode, s.weight);
                }
            } else if constexpr (std::is_same_v<T, potential::CylindricalBox>) {
                auto add_m = [&](int m, int weight) {
                    bool any = false;
                    for (int k = 1;; ++k) {
                        if (reference::cylinder_box_level(m, k, 1, v.rho0, v.length).energy > cutoff) break;
                        for (int nz = 1;; ++nz) {
                            auto lv = reference::cylinder_box_level(m, k, nz, v.rho0, v.length);
                            if (lv.energy > cutoff) break;
                            lv.degeneracy = weight;
                            raw.push_back(lv);
                            any = true;
                        }
                    }
                    return any;
                };
                if (full3d) {
                    for (int m = 0; add_m(m, m == 0 ? 1 : 2); ++m) {}
                } else {
                    for (auto const& s : sectors) add_m(s.mode, s.weight);
                }
            } else if constexpr (std::is_same_v<T, potential::HydrogenicDot>) {
                if (v.confinement) return;  // the confined spectrum has no closed form
                for (int n = 1; n <= 60; ++n) {
                    auto lv = reference::hydrogen_level(n);
                    if (lv.energy > cutoff) break;
                    if (full3d) {
                        raw.push_back(lv);
                    } else {
                        for (auto const& s : sectors)
                            if (s.mode < n) raw.push_back({lv.energy, s.weight, {{"n", n}, {"l", s.mode}}});
                    }
                }
            }
            // ConeDot: no closed form
        },
        model);

    std::stable_sort(raw.begin(), raw.end(), [](auto const& a, auto const& b) { return a.energy < b.energy; });
    std::vector<AnalyticLevel> out;
    for (auto& lv : raw) {
        if (!out.empty() && std::abs(out.back().energy - lv.energy) <= 1e-9 * std::max(1.0, std::abs(lv.energy))) {
            out.back().degeneracy += lv.degeneracy;
        } else {
            out.push_back(std::move(lv));
        }
    }
    return out;
}

struct ReportRow {
    std::size_t level = 0;
    double energy = 0;
    int degeneracy = 0;
    std::optional<double> analytic;
    std::optional<int> analytic_degeneracy;
    std::optional<double> abs_error;
    std::optional<double> rel_error;
    bool multiplicity_mismatch = false;
};

/// Sectors a job's solver works in (empty means the full 3D problem).
inline std::vector<Sector> job_sectors(JobSpec const& s) {
    std::vector<Sector> out;
    if (s.geometry == Geometry::Cartesian3) return out;
    if (s.solver == SolverKind::ModeScan) {
        for (int v = 0; v <= s.mode_max; ++v) out.push_back({v, mode_weight(s.geometry, v)});
    } else {
        out.push_back({s.geometry == Geometry::Radial ? *s.modes.l : std::abs(*s.modes.m), 1});
    }
    return out;
}

/// Pairs each computed level (ascending) with the nearest unused analytic level.
inline std::vector<ReportRow> compare_report(SpectrumResult const& result, PotentialSpec const& model,
                                             Geometry geometry, std::vector<Sector> const& sectors) {
    std::vector<ReportRow> rows;
    if (result.levels.empty()) return rows;
    double top = result.levels.back().energy;
    double const spread = top - result.levels.front().energy;
    double const cutoff = top + std::max(1.0, spread) + std::abs(top) * 0.5;
    auto const oracle = analytic_levels(model, geometry, sectors, cutoff);
    std::vector<bool> used(oracle.size(), false);

    for (std::size_t i = 0; i < result.levels.size(); ++i) {
        auto const& lv = result.levels[i];
        ReportRow row;
        row.level = i;
        row.energy = lv.energy;
        row.degeneracy = lv.degeneracy;
        std::optional<std::size_t> best;
        for (std::size_t j = 0; j < oracle.size(); ++j) {
            if (used[j]) continue;
            if (!best || std::abs(oracle[j].energy - lv.energy) < std::abs(oracle[*best].energy - lv.energy)) best = j;
        }
        if (best) {
            used[*best] = true;
            row.analytic = oracle[*best].energy;
            row.analytic_degeneracy = oracle[*best].degeneracy;
            row.abs_error = std::abs(lv.energy - *row.analytic);
            row.rel_error = *row.abs_error / std::max(std::abs(*row.analytic), 1e-300);
            row.multiplicity_mismatch = lv.degeneracy != *row.analytic_degeneracy;
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// result files

inline std::string trace_csv(EnergyTrace const& trace) {
    std::string out = "tau,energy,energy_sq,pre_norm\n";
    for (auto const& r : trace) {
        out += format_number(r.tau) + "," + format_number(r.energy) + "," + format_number(r.energy_sq) + "," +
               format_number(r.pre_norm) + "\n";
    }
    return out;
}

inline std::string state_csv(Field const& f) {
    auto const& g = f.grid();
    std::string out;
    switch (g.geometry()) {
        case Geometry::Radial: out = "r,value\n"; break;
        case Geometry::Cylindrical: out = "rho,z,value\n"; break;
        case Geometry::Cartesian3: out = "x,y,z,value\n"; break;
    }
    std::size_t const dims = g.axes().size();
    for (std::size_t k = 0; k < g.size(); ++k) {
        auto const x = g.coordinates(k);
        for (std::size_t a = 0; a < dims; ++a) out += format_number(x[a]) + ",";
        out += format_number(f[k]) + "\n";
    }
    return out;
}

inline std::string mode_label(JobSpec const& s, Level const& lv) {
    if (lv.provenance == Provenance::ModeScan) {
        std::set<int> m(lv.modes.begin(), lv.modes.end());
        std::string out;
        for (int v : m) out += (out.empty() ? "" : ";") + std::to_string(v);
        return out;
    }
    if (s.modes.l) return std::to_string(*s.modes.l);
    if (s.modes.m) return std::to_string(*s.modes.m);
    return {};
}

inline std::string energies_csv(JobSpec const& s, SpectrumResult const& result, std::vector<ReportRow> const& rows) {
    std::string out = "index,mode,energy,degeneracy,analytic,abs_error,converged,tau_final\n";
    for (std::size_t i = 0; i < result.levels.size(); ++i) {
        auto const& lv = result.levels[i];
        auto const& row = rows[i];
        out += std::to_string(i) + "," + mode_label(s, lv) + "," + format_number(lv.energy) + "," +
               std::to_string(lv.degeneracy) + "," + (row.analytic ? format_number(*row.analytic) : "") + "," +
               (row.abs_error ? format_number(*row.abs_error) : "") + "," + (lv.converged ? "true" : "false") + "," +
               format_number(lv.tau_final) + "\n";
    }
    return out;
}

namespace detail {

inline void write_file(std::filesystem::path const& path, std::string const& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

inline void append_file(std::filesystem::path const& path, std::string const& content) {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for appending");
    f << content;
}

} // namespace detail

inline SpectrumResult solve_job(JobSpec const& s) {
    auto const grid = build_job_grid(s);
    switch (s.solver) {
        case SolverKind::Ladder: {
            Hamiltonian const h(grid, s.model, s.modes);
            return solve_ladder(h, s.n_states, s.propagation, s.degeneracy_tol);
        }
        case SolverKind::Block: {
            Hamiltonian const h(grid, s.model, s.modes);
            return block_solve(h, s.block_size, s.propagation, BlockOptions{s.rr_stride, s.degeneracy_tol});
        }
        case SolverKind::ModeScan:
            return mode_scan(grid, s.model, s.mode_max, s.states_per_mode, s.propagation, s.degeneracy_tol);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown solver");
}

struct JobOutcome {
    int exit_status = 0;
    std::string message;
};

/// Runs a job and writes its result files into spec.output_dir.
/// Exit status: 0 all levels converged, 1 solver failure or non-convergence,
/// 2 output directory unusable.
inline JobOutcome run_job(JobSpec const& s) {
    namespace fs = std::filesystem;
    fs::path const dir(s.output_dir);
    try {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string() + ": " + ec.message());
        detail::write_file(dir / "job_resolved.cfg", emit_config(s));
        detail::write_file(dir / "energies.csv", "index,mode,energy,degeneracy,analytic,abs_error,converged,tau_final\n");
    } catch (Error const& e) {
        return {2, e.what()};
    }

    try {
        auto const result = solve_job(s);
        auto const rows = compare_report(result, s.model, s.geometry, job_sectors(s));
        detail::write_file(dir / "energies.csv", energies_csv(s, result, rows));
        std::size_t k = 0;
        bool all = true;
        for (auto const& lv : result.levels) {
            all = all && lv.converged;
            for (std::size_t i = 0; i < lv.states.size(); ++i, ++k) {
                detail::write_file(dir / ("trace_" + std::to_string(k) + ".csv"), trace_csv(lv.traces[i]));
                if (s.dump_states)
                    detail::write_file(dir / ("state_" + std::to_string(k) + ".csv"), state_csv(lv.states[i]));
            }
        }
        if (!all) {
            detail::append_file(dir / "energies.csv", "# FAILED: not all levels converged within max_steps\n");
            return {1, "not all levels converged within max_steps"};
        }
        return {0, "ok"};
    } catch (Error const& e) {
        try {
            detail::append_file(dir / "energies.csv", std::string("# FAILED: ") + e.what() + "\n");
        } catch (Error const&) {
        }
        return {e.code() == ErrorCode::IoError ? 2 : 1, e.what()};
    }
}

} // namespace itprop
