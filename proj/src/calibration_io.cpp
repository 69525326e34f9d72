#include "casforce/calibration_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>

#include "casforce/dielectric_io.hpp"
#include "casforce/lifshitz.hpp"

namespace casforce {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + path);
}

double need_number(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError("missing key '" + path + "." + key + "'");
    if (!j[key].is_number()) throw ConfigError("'" + path + "." + key + "' must be a number");
    return j[key].get<double>();
}

std::vector<double> grid_from(const json& j, const std::string& key, const std::string& path,
                              double unit) {
    if (!j.contains(key)) throw ConfigError("missing key '" + path + "." + key + "'");
    const json& g = j[key];
    std::vector<double> out;
    if (g.is_array()) {
        for (const auto& v : g) {
            if (!v.is_number())
                throw ConfigError("'" + path + "." + key + "' entries must be numbers");
            out.push_back(v.get<double>() * unit);
        }
        return out;
    }
    if (g.is_object()) {
        require_keys(g, {"min", "max", "count"}, path + "." + key);
        const double lo = need_number(g, "min", path + "." + key) * unit;
        const double hi = need_number(g, "max", path + "." + key) * unit;
        const int count = static_cast<int>(need_number(g, "count", path + "." + key));
        if (count < 2 || !(hi > lo))
            throw ConfigError("'" + path + "." + key + "' range needs min < max, count >= 2");
        for (int i = 0; i < count; ++i)
            out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                   static_cast<double>(count - 1));
        return out;
    }
    throw ConfigError("'" + path + "." + key + "' must be an array or {min,max,count}");
}

// Loads a force-distance table: `separation_nm,force_pN` (the two leading
// columns of the sweep format are accepted too). Interpolates log-log when
// all forces are positive, linearly otherwise; out-of-range lookups fail.
std::function<double(double)> force_curve_from_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open force table: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty force table: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "separation_nm,force_pN" &&
        line.rfind("separation_nm,force_pN,", 0) != 0)
        throw ConfigError("force table must start with 'separation_nm,force_pN': " +
                          path.string());

    auto seps = std::make_shared<std::vector<double>>();
    auto forces = std::make_shared<std::vector<double>>();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double sep_nm = 0.0, force_pn = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf", &sep_nm, &force_pn) != 2)
            throw ConfigError("bad row at " + path.string() + ":" + std::to_string(line_no));
        seps->push_back(sep_nm * 1e-9);
        forces->push_back(force_pn * 1e-12);
    }
    if (seps->size() < 2) throw ConfigError("force table needs at least 2 rows");
    for (std::size_t i = 1; i < seps->size(); ++i)
        if (!((*seps)[i] > (*seps)[i - 1]))
            throw ConfigError("force table separations must be strictly increasing");

    bool log_ok = true;
    for (double f : *forces)
        if (!(f > 0.0)) log_ok = false;

    const std::string name = path.string();
    return [seps, forces, log_ok, name](double d) {
        // Absorb rounding from unit conversion at the table boundaries.
        if (d < seps->front() && d > seps->front() * (1.0 - 1e-12)) d = seps->front();
        if (d > seps->back() && d < seps->back() * (1.0 + 1e-12)) d = seps->back();
        if (!(d >= seps->front() && d <= seps->back()))
            throw ConfigError("force table " + name + " does not cover separation " +
                              std::to_string(d * 1e9) + " nm");
        auto it = std::lower_bound(seps->begin(), seps->end(), d);
        if (it == seps->begin()) ++it;
        const std::size_t i = static_cast<std::size_t>(it - seps->begin());
        const double d1 = (*seps)[i - 1], d2 = (*seps)[i];
        const double f1 = (*forces)[i - 1], f2 = (*forces)[i];
        if (log_ok) {
            const double t = (std::log(d) - std::log(d1)) / (std::log(d2) - std::log(d1));
            return std::exp(std::log(f1) + t * (std::log(f2) - std::log(f1)));
        }
        const double t = (d - d1) / (d2 - d1);
        return f1 + t * (f2 - f1);
    };
}

char fmt_buf[64];
const char* g9(double v) {
    std::snprintf(fmt_buf, sizeof fmt_buf, "%.9g", v);
    return fmt_buf;
}

} // namespace

CalibrateSimConfig load_calibrate_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    require_keys(j,
                 {"k", "d0_nm", "v0_mV", "sphere_radius_um", "force_curve", "scan",
                  "weighted_alpha_fit", "separate_electrostatic_calibration"},
                 "config");

    CalibrateSimConfig cfg;
    cfg.truth.k = need_number(j, "k", "config");
    cfg.truth.d0_m = need_number(j, "d0_nm", "config") * 1e-9;
    cfg.truth.v0_V = need_number(j, "v0_mV", "config") * 1e-3;
    cfg.truth.sphere_radius_m = need_number(j, "sphere_radius_um", "config") * 1e-6;

    if (!j.contains("force_curve"))
        throw ConfigError("missing key 'config.force_curve'");
    const json& fc = j["force_curve"];
    if (!fc.is_object() || !fc.contains("kind"))
        throw ConfigError("'config.force_curve' must be an object with a 'kind'");
    const std::string kind = fc["kind"].get<std::string>();
    json fc_resolved;
    fc_resolved["kind"] = kind;
    if (kind == "lifshitz") {
        require_keys(fc, {"kind", "model"}, "config.force_curve");
        if (!fc.contains("model"))
            throw ConfigError("missing key 'config.force_curve.model'");
        DielectricModel model = [&] {
            if (fc["model"].is_object())
                return model_from_json(fc["model"], path.parent_path(),
                                       "config.force_curve.model");
            const std::string spec = fc["model"].get<std::string>();
            if (is_builtin_preset(spec)) return model_from_preset(spec);
            std::filesystem::path p = spec;
            if (p.is_relative()) p = path.parent_path() / p;
            return load_model_json(p);
        }();
        const double radius = cfg.truth.sphere_radius_m;
        cfg.truth.force_curve = [model, radius](double d) {
            return lifshitz_sphere_plate(
                       ForceQuery{Geometry(radius, d), model, model, QuadratureSettings{}})
                .force_newtons;
        };
        fc_resolved["model"] = model_to_json(model);
    } else if (kind == "table") {
        require_keys(fc, {"kind", "path"}, "config.force_curve");
        if (!fc.contains("path"))
            throw ConfigError("missing key 'config.force_curve.path'");
        std::filesystem::path p = fc["path"].get<std::string>();
        if (p.is_relative()) p = path.parent_path() / p;
        cfg.truth.force_curve = force_curve_from_table(p);
        fc_resolved["path"] = p.string();
    } else {
        throw ConfigError("'config.force_curve.kind' must be 'lifshitz' or 'table'");
    }

    if (!j.contains("scan")) throw ConfigError("missing key 'config.scan'");
    const json& scan = j["scan"];
    require_keys(scan, {"dpz_nm", "vbias_V", "noise_sigma", "rng_seed"}, "config.scan");
    cfg.plan.dpz_m = grid_from(scan, "dpz_nm", "config.scan", 1e-9);
    cfg.plan.vbias_V = grid_from(scan, "vbias_V", "config.scan", 1.0);
    cfg.plan.noise_sigma =
        scan.contains("noise_sigma") ? need_number(scan, "noise_sigma", "config.scan") : 0.0;
    cfg.plan.rng_seed =
        scan.contains("rng_seed")
            ? static_cast<std::uint64_t>(need_number(scan, "rng_seed", "config.scan"))
            : 0;

    if (j.contains("weighted_alpha_fit")) {
        if (!j["weighted_alpha_fit"].is_boolean())
            throw ConfigError("'config.weighted_alpha_fit' must be a boolean");
        cfg.fit_options.inverse_variance_weights = j["weighted_alpha_fit"].get<bool>();
    }
    if (j.contains("separate_electrostatic_calibration")) {
        if (!j["separate_electrostatic_calibration"].is_boolean())
            throw ConfigError("'config.separate_electrostatic_calibration' must be a boolean");
        cfg.separate_electrostatic_calibration =
            j["separate_electrostatic_calibration"].get<bool>();
    }

    cfg.truth.validate();
    cfg.plan.validate_against(cfg.truth);

    cfg.resolved = json{{"k", cfg.truth.k},
                        {"d0_nm", cfg.truth.d0_m * 1e9},
                        {"v0_mV", cfg.truth.v0_V * 1e3},
                        {"sphere_radius_um", cfg.truth.sphere_radius_m * 1e6},
                        {"force_curve", fc_resolved},
                        {"scan",
                         {{"dpz_nm", [&] {
                               std::vector<double> v;
                               for (double d : cfg.plan.dpz_m) v.push_back(d * 1e9);
                               return v;
                           }()},
                          {"vbias_V", cfg.plan.vbias_V},
                          {"noise_sigma", cfg.plan.noise_sigma},
                          {"rng_seed", cfg.plan.rng_seed}}},
                        {"weighted_alpha_fit", cfg.fit_options.inverse_variance_weights},
                        {"separate_electrostatic_calibration",
                         cfg.separate_electrostatic_calibration}};
    return cfg;
}

nlohmann::json calibration_report_json(const CalibrationResult& result) {
    json points = json::array();
    for (const auto& p : result.casimir_points) {
        points.push_back(json{{"separation_nm", p.separation_m * 1e9},
                              {"sigma_separation_nm", p.sigma_separation_m * 1e9},
                              {"force_pN", p.force_newtons * 1e12},
                              {"sigma_force_pN", p.sigma_force_newtons * 1e12}});
    }
    return json{{"k", result.k.value},
                {"sigma_k", result.k.sigma},
                {"d0_nm", result.d0_m.value * 1e9},
                {"sigma_d0_nm", result.d0_m.sigma * 1e9},
                {"v0_mV", result.v0_V.value * 1e3},
                {"sigma_v0_mV", result.v0_V.sigma * 1e3},
                {"casimir_points", points}};
}

void write_scan_csv(std::ostream& out, std::span<const LockInRecord> records) {
    out << "d_pz_nm,v_bias_V,amplitude\n";
    for (const auto& r : records) {
        out << g9(r.d_pz_m * 1e9) << ',';
        out << g9(r.v_bias_V) << ',';
        out << g9(r.amplitude) << '\n';
    }
}

void write_parabola_csv(std::ostream& out, std::span<const ParabolaFit> parabolas) {
    out << "d_pz_nm,alpha,sigma_alpha,x0_mV,sigma_x0_mV,beta,sigma_beta\n";
    for (const auto& p : parabolas) {
        out << g9(p.d_pz_m * 1e9) << ',';
        out << g9(p.alpha) << ',';
        out << g9(p.sigma_alpha()) << ',';
        out << g9(p.x0_V * 1e3) << ',';
        out << g9(p.sigma_x0() * 1e3) << ',';
        out << g9(p.beta) << ',';
        out << g9(p.sigma_beta()) << '\n';
    }
}

} // namespace casforce
