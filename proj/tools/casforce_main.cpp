// Command-line front end: dispersion-force computations, transparency-window
// sweeps, Kramers-Kronig transforms, and the synthetic calibration pipeline.
// Data goes to stdout (or --output); the run manifest and logs go to stderr.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "casforce/calibration.hpp"
#include "casforce/calibration_io.hpp"
#include "casforce/dielectric_io.hpp"
#include "casforce/lifshitz.hpp"
#include "casforce/manifest.hpp"
#include "casforce/quadrature.hpp"

using namespace casforce;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitFit = 4;

struct GlobalOptions {
    double rel_tol = 1e-6;
    double abs_tol_pN = 1e-6;
    int max_subdiv = 4000;
    std::optional<std::uint64_t> seed;
    bool emit_scans = false;
    std::string output;
};

QuadratureSettings quad_settings(const GlobalOptions& g) {
    QuadratureSettings s;
    s.rel_tol = g.rel_tol;
    s.abs_tol_newtons = g.abs_tol_pN * 1e-12;
    s.max_subdivisions = g.max_subdiv;
    s.validate();
    return s;
}

json settings_json(const GlobalOptions& g) {
    return json{{"rel_tol", g.rel_tol},
                {"abs_tol_pN", g.abs_tol_pN},
                {"max_subdiv", g.max_subdiv}};
}

class OutputTarget {
public:
    explicit OutputTarget(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw ConfigError("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::string g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void emit_manifest(const std::string& command_line, const json& resolved) {
    std::cerr << RunManifest::create(command_line, resolved).to_json().dump() << "\n";
}

void warn_proximity(const Geometry& geom) {
    if (geom.proximity_warning())
        std::cerr << "warning: separation/radius = "
                  << geom.separation_m / geom.sphere_radius_m
                  << " exceeds 0.01; the sphere-plate proximity formula degrades\n";
}

std::vector<double> separation_grid(double d_min_nm, double d_max_nm, int points,
                                    const std::string& spacing) {
    if (!(d_min_nm > 0.0) || !(d_max_nm > d_min_nm))
        throw ConfigError("need 0 < d-min-nm < d-max-nm");
    if (points < 2) throw ConfigError("need points >= 2");
    if (spacing == "log") return quad::log_spaced(d_min_nm, d_max_nm, points);
    if (spacing != "linear") throw ConfigError("spacing must be 'linear' or 'log'");
    std::vector<double> out;
    for (int i = 0; i < points; ++i)
        out.push_back(d_min_nm + (d_max_nm - d_min_nm) * static_cast<double>(i) /
                                     static_cast<double>(points - 1));
    return out;
}

// ---------------------------------------------------------------------------

struct ForceArgs {
    std::string sphere, plate;
    double radius_um = 0.0, separation_nm = 0.0;
};

int cmd_force(const GlobalOptions& g, const ForceArgs& a, const std::string& command_line) {
    const DielectricModel sphere = resolve_model_spec(a.sphere);
    const DielectricModel plate = resolve_model_spec(a.plate);
    const Geometry geom(a.radius_um * 1e-6, a.separation_nm * 1e-9);
    const QuadratureSettings settings = quad_settings(g);

    const json resolved{{"command", "force"},
                        {"sphere", model_to_json(sphere)},
                        {"plate", model_to_json(plate)},
                        {"radius_um", a.radius_um},
                        {"separation_nm", a.separation_nm},
                        {"settings", settings_json(g)}};
    warn_proximity(geom);

    OutputTarget out(g.output);
    auto print = [&](const ForceResult& r) {
        out.stream() << json{{"force_pN", r.force_newtons * 1e12},
                             {"est_error_pN", r.est_error_newtons * 1e12},
                             {"node_count", r.node_count}}
                            .dump()
                     << "\n";
    };
    try {
        print(lifshitz_sphere_plate(ForceQuery{geom, sphere, plate, settings}));
    } catch (const ConvergenceError& e) {
        print(e.best_estimate());
        std::cerr << "error: " << e.what() << "\n";
        emit_manifest(command_line, resolved);
        return kExitConvergence;
    }
    emit_manifest(command_line, resolved);
    return kExitOk;
}

struct SweepArgs {
    std::string sphere, plate;
    double radius_um = 0.0, d_min_nm = 0.0, d_max_nm = 0.0;
    int points = 0;
    std::string spacing = "log";
};

int cmd_sweep(const GlobalOptions& g, const SweepArgs& a, const std::string& command_line) {
    const DielectricModel sphere = resolve_model_spec(a.sphere);
    const DielectricModel plate = resolve_model_spec(a.plate);
    const QuadratureSettings settings = quad_settings(g);
    const auto grid = separation_grid(a.d_min_nm, a.d_max_nm, a.points, a.spacing);

    const json resolved{{"command", "sweep"},          {"sphere", model_to_json(sphere)},
                        {"plate", model_to_json(plate)}, {"radius_um", a.radius_um},
                        {"d_min_nm", a.d_min_nm},        {"d_max_nm", a.d_max_nm},
                        {"points", a.points},            {"spacing", a.spacing},
                        {"settings", settings_json(g)}};

    OutputTarget out(g.output);
    out.stream() << "separation_nm,force_pN,est_error_pN,node_count\n";
    bool any_failed = false;
    for (double d_nm : grid) {
        const Geometry geom(a.radius_um * 1e-6, d_nm * 1e-9);
        warn_proximity(geom);
        ForceResult r;
        bool failed = false;
        try {
            r = lifshitz_sphere_plate(ForceQuery{geom, sphere, plate, settings});
        } catch (const ConvergenceError& e) {
            r = e.best_estimate();
            failed = true;
            any_failed = true;
            std::cerr << "error at d = " << d_nm << " nm: " << e.what() << "\n";
        }
        out.stream() << g9(d_nm) << ',' << g9(r.force_newtons * 1e12) << ','
                     << (failed ? std::string("nan") : g9(r.est_error_newtons * 1e12)) << ','
                     << r.node_count << "\n";
    }
    emit_manifest(command_line, resolved);
    return any_failed ? kExitConvergence : kExitOk;
}

struct RatioArgs {
    std::string base;
    double lambda_min_um = 0.0, lambda_max_um = 0.0;
    double radius_um = 0.0, d_min_nm = 0.0, d_max_nm = 0.0;
    int points = 0;
    std::string spacing = "log";
};

int cmd_ratio(const GlobalOptions& g, const RatioArgs& a, const std::string& command_line) {
    const DielectricModel base = resolve_model_spec(a.base);
    const TransparencyWindow window(a.lambda_min_um * 1e-6, a.lambda_max_um * 1e-6);
    const QuadratureSettings settings = quad_settings(g);
    const auto grid = separation_grid(a.d_min_nm, a.d_max_nm, a.points, a.spacing);

    const json resolved{{"command", "ratio"},
                        {"base", model_to_json(base)},
                        {"window_lambda_min_um", a.lambda_min_um},
                        {"window_lambda_max_um", a.lambda_max_um},
                        {"radius_um", a.radius_um},
                        {"d_min_nm", a.d_min_nm},
                        {"d_max_nm", a.d_max_nm},
                        {"points", a.points},
                        {"spacing", a.spacing},
                        {"settings", settings_json(g)}};

    OutputTarget out(g.output);
    out.stream() << "separation_nm,ratio_windowed,ratio_err\n";
    bool any_failed = false;
    for (double d_nm : grid) {
        const Geometry geom(a.radius_um * 1e-6, d_nm * 1e-9);
        warn_proximity(geom);
        try {
            const WindowedRatio r = force_ratio_windowed(base, window, geom, settings);
            out.stream() << g9(d_nm) << ',' << g9(r.ratio) << ',' << g9(r.err) << "\n";
        } catch (const ConvergenceError& e) {
            any_failed = true;
            std::cerr << "error at d = " << d_nm << " nm: " << e.what() << "\n";
            out.stream() << g9(d_nm) << ",nan,nan\n";
        }
    }
    emit_manifest(command_line, resolved);
    return any_failed ? kExitConvergence : kExitOk;
}

struct KkArgs {
    std::string table;
    double xi_min = 0.0, xi_max = 0.0;
    int points = 0;
};

int cmd_kk(const GlobalOptions& g, const KkArgs& a, const std::string& command_line) {
    const AbsorptionTable table = load_absorption_table_csv(a.table);
    if (!(a.xi_min > 0.0) || !(a.xi_max > a.xi_min))
        throw ConfigError("need 0 < xi-min < xi-max");
    if (a.points < 2) throw ConfigError("need points >= 2");

    const json resolved{{"command", "kk"},
                        {"table", model_to_json(DielectricModel::tabulated(table))},
                        {"xi_min", a.xi_min},
                        {"xi_max", a.xi_max},
                        {"points", a.points}};

    OutputTarget out(g.output);
    out.stream() << "xi_rad_per_s,eps\n";
    for (double xi : quad::log_spaced(a.xi_min, a.xi_max, a.points))
        out.stream() << g9(xi) << ',' << g9(eps_imag_axis_kk(table, AngularFrequency(xi)))
                     << "\n";
    emit_manifest(command_line, resolved);
    return kExitOk;
}

struct CalibrateArgs {
    std::string config_path;
};

void emit_scan_files(const GlobalOptions& g, const PipelineOutput& pipeline) {
    namespace fs = std::filesystem;
    fs::path scans = "scans.csv";
    fs::path parabolas = "parabolas.csv";
    if (!g.output.empty()) {
        const fs::path base(g.output);
        fs::path stem = base.parent_path() / base.stem();
        scans = stem.string() + "_scans.csv";
        parabolas = stem.string() + "_parabolas.csv";
    }
    std::ofstream s(scans);
    if (!s) throw ConfigError("cannot write " + scans.string());
    write_scan_csv(s, pipeline.records);
    std::ofstream p(parabolas);
    if (!p) throw ConfigError("cannot write " + parabolas.string());
    write_parabola_csv(p, pipeline.parabolas);
    std::cerr << "wrote " << scans.string() << " and " << parabolas.string() << "\n";
}

int cmd_calibrate_sim(const GlobalOptions& g, const CalibrateArgs& a,
                      const std::string& command_line) {
    CalibrateSimConfig cfg = load_calibrate_config(a.config_path);
    if (cfg.separate_electrostatic_calibration)
        throw ConfigError(
            "separate_electrostatic_calibration is a documented negative control, not a "
            "supported workflow; use the simultaneous calibration pipeline");
    if (g.seed) {
        cfg.plan.rng_seed = *g.seed;
        cfg.resolved["scan"]["rng_seed"] = *g.seed;
    }
    json resolved = cfg.resolved;
    resolved["command"] = "calibrate-sim";
    resolved["emit_scans"] = g.emit_scans;

    PipelineOutput pipeline;
    try {
        pipeline = run_pipeline(cfg.truth, cfg.plan, cfg.fit_options);
    } catch (const PipelineError& e) {
        std::cerr << "fit failure: " << e.what() << "\n";
        if (!e.diagnostics().empty()) std::cerr << "diagnostics: " << e.diagnostics() << "\n";
        if (g.emit_scans) emit_scan_files(g, e.partial());
        emit_manifest(command_line, resolved);
        return kExitFit;
    }

    OutputTarget out(g.output);
    out.stream() << calibration_report_json(pipeline.result).dump(2) << "\n";
    if (g.emit_scans) emit_scan_files(g, pipeline);
    emit_manifest(command_line, resolved);
    return kExitOk;
}

int cmd_presets(const GlobalOptions& g, const std::string& command_line) {
    json list = json::array();
    for (const auto& p : builtin_presets()) {
        list.push_back(json{{"name", p.name},
                            {"description", p.description},
                            {"model", model_to_json(model_from_preset(p.name))}});
    }
    OutputTarget out(g.output);
    out.stream() << list.dump(2) << "\n";
    emit_manifest(command_line, json{{"command", "presets"}});
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    std::string command_line;
    for (int i = 0; i < argc; ++i) {
        if (i) command_line += ' ';
        command_line += argv[i];
    }

    CLI::App app{"sphere-plate dispersion force toolkit"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--rel-tol", g.rel_tol, "relative quadrature tolerance")
        ->capture_default_str();
    app.add_option("--abs-tol-pN", g.abs_tol_pN, "absolute quadrature tolerance in pN")
        ->capture_default_str();
    app.add_option("--max-subdiv", g.max_subdiv, "adaptive subdivision budget")
        ->capture_default_str();
    app.add_option("--seed", g.seed, "override the scan rng seed");
    app.add_flag("--emit-scans", g.emit_scans,
                 "also write the scan and parabola-fit CSVs (calibrate-sim)");
    app.add_option("--output", g.output, "write data here instead of stdout");

    ForceArgs force_args;
    auto* force_cmd = app.add_subcommand("force", "single sphere-plate force point");
    force_cmd->add_option("--sphere", force_args.sphere, "sphere model: preset or JSON path")
        ->required();
    force_cmd->add_option("--plate", force_args.plate, "plate model: preset or JSON path")
        ->required();
    force_cmd->add_option("--radius-um", force_args.radius_um, "sphere radius in um")
        ->required();
    force_cmd->add_option("--separation-nm", force_args.separation_nm, "gap in nm")->required();

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "force vs separation CSV");
    sweep_cmd->add_option("--sphere", sweep_args.sphere)->required();
    sweep_cmd->add_option("--plate", sweep_args.plate)->required();
    sweep_cmd->add_option("--radius-um", sweep_args.radius_um)->required();
    sweep_cmd->add_option("--d-min-nm", sweep_args.d_min_nm)->required();
    sweep_cmd->add_option("--d-max-nm", sweep_args.d_max_nm)->required();
    sweep_cmd->add_option("--points", sweep_args.points)->required();
    sweep_cmd->add_option("--spacing", sweep_args.spacing, "linear|log")
        ->capture_default_str();

    RatioArgs ratio_args;
    auto* ratio_cmd =
        app.add_subcommand("ratio", "windowed-to-base force ratio vs separation CSV");
    ratio_cmd->add_option("--base", ratio_args.base, "base model: preset or JSON path")
        ->required();
    ratio_cmd->add_option("--lambda-min-um", ratio_args.lambda_min_um)->required();
    ratio_cmd->add_option("--lambda-max-um", ratio_args.lambda_max_um)->required();
    ratio_cmd->add_option("--radius-um", ratio_args.radius_um)->required();
    ratio_cmd->add_option("--d-min-nm", ratio_args.d_min_nm)->required();
    ratio_cmd->add_option("--d-max-nm", ratio_args.d_max_nm)->required();
    ratio_cmd->add_option("--points", ratio_args.points)->required();
    ratio_cmd->add_option("--spacing", ratio_args.spacing, "linear|log")
        ->capture_default_str();

    KkArgs kk_args;
    auto* kk_cmd = app.add_subcommand("kk", "eps(i*xi) from an absorption table");
    kk_cmd->add_option("--table", kk_args.table, "absorption CSV path")->required();
    kk_cmd->add_option("--xi-min", kk_args.xi_min, "rad/s")->required();
    kk_cmd->add_option("--xi-max", kk_args.xi_max, "rad/s")->required();
    kk_cmd->add_option("--points", kk_args.points)->required();

    CalibrateArgs cal_args;
    auto* cal_cmd =
        app.add_subcommand("calibrate-sim", "synthetic simultaneous-calibration pipeline");
    cal_cmd->add_option("config", cal_args.config_path, "ground-truth/plan JSON")->required();

    auto* presets_cmd = app.add_subcommand("presets", "list builtin material presets");

    // Global flags may appear after the subcommand.
    for (auto* sub : {force_cmd, sweep_cmd, ratio_cmd, kk_cmd, cal_cmd, presets_cmd})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (force_cmd->parsed()) return cmd_force(g, force_args, command_line);
        if (sweep_cmd->parsed()) return cmd_sweep(g, sweep_args, command_line);
        if (ratio_cmd->parsed()) return cmd_ratio(g, ratio_args, command_line);
        if (kk_cmd->parsed()) return cmd_kk(g, kk_args, command_line);
        if (cal_cmd->parsed()) return cmd_calibrate_sim(g, cal_args, command_line);
        if (presets_cmd->parsed()) return cmd_presets(g, command_line);
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const PipelineError& e) {
        std::cerr << "fit failure: " << e.what() << "\n";
        return kExitFit;
    } catch (const FitError& e) {
        std::cerr << "fit failure: " << e.what() << "\n";
        return kExitFit;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "no subcommand\n";
    return kExitConfig;
}
