#include "casforce/dielectric_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "casforce/constants.hpp"

namespace casforce {

namespace {

std::string strip(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_double(const std::string& field, const std::string& context) {
    const std::string t = strip(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw ConfigError("cannot parse number '" + field + "' in " + context);
    return v;
}

TailRule parse_tail_rule(const std::string& spec, const std::string& context) {
    const std::string s = strip(spec);
    if (s == "zero") return TailRule::zero();
    if (s == "drude") return TailRule::inverse_frequency();
    if (s == "linear") return TailRule::linear_to_zero();
    if (s.rfind("power:", 0) == 0)
        return TailRule::power_law(parse_double(s.substr(6), context));
    throw ConfigError("unknown tail rule '" + s + "' in " + context +
                      " (expected zero|drude|linear|power:<exponent>)");
}

} // namespace

AbsorptionTable load_absorption_table_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open absorption table: " + path.string());
    const std::string context = path.string();

    std::optional<TailRule> low, high;
    std::string line;
    std::string header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = strip(line.substr(1));
            const auto colon = body.find(':');
            if (colon != std::string::npos) {
                const std::string key = strip(body.substr(0, colon));
                const std::string val = body.substr(colon + 1);
                if (key == "low_tail") low = parse_tail_rule(val, context);
                else if (key == "high_tail") high = parse_tail_rule(val, context);
            }
            continue;
        }
        header = line;
        break;
    }

    bool wavelength_input = false;
    if (header == "omega_rad_per_s,eps_imag") {
        wavelength_input = false;
    } else if (header == "wavelength_um,eps_imag") {
        wavelength_input = true;
    } else {
        throw ConfigError("bad absorption table header in " + context +
                          ": expected 'omega_rad_per_s,eps_imag' or 'wavelength_um,eps_imag'");
    }

    std::vector<AbsorptionSample> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (strip(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("missing comma at " + context + ":" + std::to_string(line_no));
        const double a = parse_double(line.substr(0, comma), context);
        const double b = parse_double(line.substr(comma + 1), context);
        double omega = a;
        if (wavelength_input) {
            if (!(a > 0.0))
                throw ConfigError("wavelength must be > 0 at " + context + ":" +
                                  std::to_string(line_no));
            omega = 2.0 * constants::pi * constants::speed_of_light / (a * 1e-6);
        }
        samples.push_back({omega, b});
    }
    if (wavelength_input)
        std::sort(samples.begin(), samples.end(), [](const auto& l, const auto& r) {
            return l.omega_rad_per_s < r.omega_rad_per_s;
        });

    if (low || high) {
        if (samples.size() < 2) throw ConfigError("absorption table needs at least 2 samples");
        const bool metallic = samples[0].eps_imag > samples[1].eps_imag;
        const TailRule def_low =
            metallic ? TailRule::inverse_frequency() : TailRule::linear_to_zero();
        return AbsorptionTable(std::move(samples), low.value_or(def_low),
                               high.value_or(TailRule::power_law(-3.0)));
    }
    return AbsorptionTable::with_default_tails(std::move(samples));
}

void save_absorption_table_csv(const AbsorptionTable& table,
                               const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write absorption table: " + path.string());
    out << "# low_tail: " << table.low_tail().name() << "\n";
    out << "# high_tail: " << table.high_tail().name() << "\n";
    out << "omega_rad_per_s,eps_imag\n";
    char buf[64];
    for (const auto& s : table.samples()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.omega_rad_per_s, s.eps_imag);
        out << buf;
    }
}

namespace {

void require_known_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                        const std::string& field_path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + field_path);
    }
}

double require_number(const nlohmann::json& j, const std::string& key,
                      const std::string& field_path) {
    if (!j.contains(key))
        throw ConfigError("missing key '" + field_path + "." + key + "'");
    if (!j[key].is_number())
        throw ConfigError("'" + field_path + "." + key + "' must be a number");
    return j[key].get<double>();
}

} // namespace

DielectricModel model_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                const std::string& field_path) {
    if (!j.is_object()) throw ConfigError(field_path + " must be a JSON object");
    if (!j.contains("variant"))
        throw ConfigError("missing key '" + field_path + ".variant'");
    const std::string variant = j["variant"].get<std::string>();

    if (variant == "vacuum" || variant == "ideal_metal") {
        require_known_keys(j, {"variant"}, field_path);
        return variant == "vacuum" ? DielectricModel::vacuum() : DielectricModel::ideal_metal();
    }
    if (variant == "drude") {
        require_known_keys(
            j, {"variant", "plasma_frequency_rad_per_s", "relaxation_rate_rad_per_s"},
            field_path);
        const double wp = require_number(j, "plasma_frequency_rad_per_s", field_path);
        const double gamma = require_number(j, "relaxation_rate_rad_per_s", field_path);
        return DielectricModel::drude(make_drude(wp, gamma));
    }
    if (variant == "tabulated") {
        require_known_keys(j, {"variant", "table_path"}, field_path);
        if (!j.contains("table_path"))
            throw ConfigError("missing key '" + field_path + ".table_path'");
        std::filesystem::path p = j["table_path"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        return DielectricModel::tabulated(load_absorption_table_csv(p));
    }
    if (variant == "windowed") {
        require_known_keys(
            j, {"variant", "base", "window_lambda_min_um", "window_lambda_max_um"}, field_path);
        if (!j.contains("base"))
            throw ConfigError("missing key '" + field_path + ".base'");
        const DielectricModel base =
            model_from_json(j["base"], base_dir, field_path + ".base");
        const double lmin = require_number(j, "window_lambda_min_um", field_path) * 1e-6;
        const double lmax = require_number(j, "window_lambda_max_um", field_path) * 1e-6;
        return DielectricModel::windowed(base, TransparencyWindow(lmin, lmax));
    }
    throw ConfigError("unknown variant '" + variant + "' in " + field_path);
}

DielectricModel load_model_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return model_from_json(j, path.parent_path(), "model");
}

DielectricModel resolve_model_spec(const std::string& name_or_path) {
    if (is_builtin_preset(name_or_path)) return model_from_preset(name_or_path);
    const std::filesystem::path p(name_or_path);
    if (!std::filesystem::exists(p))
        throw ConfigError("model spec '" + name_or_path +
                          "' is neither a builtin preset nor an existing file");
    return load_model_json(p);
}

nlohmann::json model_to_json(const DielectricModel& model) {
    nlohmann::json j;
    j["variant"] = model.kind_name();
    switch (model.kind()) {
    case DielectricModel::Kind::Vacuum:
    case DielectricModel::Kind::IdealMetal: break;
    case DielectricModel::Kind::Drude: {
        const auto* p = model.drude_parameters();
        j["plasma_frequency_rad_per_s"] = p->plasma_frequency.rad_per_s();
        j["relaxation_rate_rad_per_s"] = p->relaxation_rate.rad_per_s();
        break;
    }
    case DielectricModel::Kind::Tabulated: {
        const auto* t = model.absorption_table();
        j["samples"] = t->samples().size();
        j["omega_min_rad_per_s"] = t->omega_min();
        j["omega_max_rad_per_s"] = t->omega_max();
        j["low_tail"] = t->low_tail().name();
        j["high_tail"] = t->high_tail().name();
        break;
    }
    case DielectricModel::Kind::Windowed: {
        j["base"] = model_to_json(*model.windowed_base());
        j["window_lambda_min_um"] = model.window()->lambda_min_m * 1e6;
        j["window_lambda_max_um"] = model.window()->lambda_max_m * 1e6;
        break;
    }
    }
    return j;
}

} // namespace casforce
