// itprop: batch front end.
//
//   itprop run <config> [--output-dir DIR]
//   itprop oracle <model> [key=value ...]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itprop/job.hpp"

namespace {

using namespace itprop;

int run_command(std::string const& config_path, std::string const& output_dir) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "io-error: cannot read " << config_path << "\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    JobSpec spec;
    try {
        spec = parse_config(buf.str());
    } catch (Error const& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return 2;
    }
    if (!output_dir.empty()) spec.output_dir = output_dir;

    auto const outcome = run_job(spec);
    if (outcome.exit_status != 0) std::cerr << outcome.message << "\n";
    else std::cout << "results written to " << spec.output_dir << "\n";
    return outcome.exit_status;
}

int oracle_command(std::string const& model, std::vector<std::string> const& params) {
    std::map<std::string, double> kv{{"count", 6}};
    for (auto const& p : params) {
        auto const eq = p.find('=');
        if (eq == std::string::npos) {
            std::cerr << "expected key=value, got '" << p << "'\n";
            return 2;
        }
        try {
            kv[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
        } catch (std::exception const&) {
            std::cerr << "bad number in '" << p << "'\n";
            return 2;
        }
    }
    auto get = [&](char const* key, double fallback) { return kv.count(key) ? kv.at(key) : fallback; };

    PotentialSpec spec;
    if (model == "harmonic_oscillator") spec = potential::HarmonicOscillator{};
    else if (model == "spherical_box") spec = potential::SphericalBox{get("a", 1)};
    else if (model == "cylindrical_box") spec = potential::CylindricalBox{get("rho0", 1), get("length", 1)};
    else if (model == "hydrogenic_dot") spec = potential::HydrogenicDot{};
    else if (model == "cone_dot") {
        std::cout << "cone_dot: no closed-form spectrum\n";
        return 0;
    } else {
        std::cerr << "unknown model '" << model << "'\n";
        return 2;
    }

    // a fixed l selects the radial sector, a fixed m the cylindrical one
    Geometry geometry = Geometry::Cartesian3;
    std::vector<Sector> sectors;
    if (kv.count("l")) {
        geometry = Geometry::Radial;
        sectors.push_back({static_cast<int>(kv.at("l")), 1});
    } else if (kv.count("m")) {
        geometry = Geometry::Cylindrical;
        sectors.push_back({static_cast<int>(kv.at("m")), 1});
    }

    try {
        auto const count = static_cast<std::size_t>(get("count", 6));
        double cutoff = std::holds_alternative<potential::HydrogenicDot>(spec) ? -1e-4 : 4.0;
        std::vector<reference::AnalyticLevel> levels;
        for (int attempt = 0; attempt < 40; ++attempt, cutoff *= 1.6) {
            levels = analytic_levels(spec, geometry, sectors, cutoff);
            if (levels.size() >= count || std::holds_alternative<potential::HydrogenicDot>(spec)) break;
        }
        if (levels.size() > count) levels.resize(count);
        std::cout << "energy,degeneracy\n";
        for (auto const& lv : levels) std::cout << format_number(lv.energy) << "," << lv.degeneracy << "\n";
    } catch (Error const& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Imaginary-time propagation eigensolver for single-particle Schroedinger operators"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    auto* run = app.add_subcommand("run", "Run a job described by a config file");
    run->add_option("config", config_path, "Job config (key = value with [sections])")->required();
    run->add_option("--output-dir", output_dir, "Override output.dir from the config");

    std::string model;
    std::vector<std::string> params;
    auto* oracle = app.add_subcommand("oracle", "Print analytic levels for a model");
    oracle->add_option("model", model, "harmonic_oscillator | spherical_box | cylindrical_box | hydrogenic_dot | cone_dot")
        ->required();
    oracle->add_option("params", params, "key=value parameters: a, rho0, length, l, m, count");

    CLI11_PARSE(app, argc, argv);

    if (*run) return run_command(config_path, output_dir);
    return oracle_command(model, params);
}
