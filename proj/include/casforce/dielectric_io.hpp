#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "casforce/dielectric.hpp"

namespace casforce {

/// CSV with header `omega_rad_per_s,eps_imag` (or `wavelength_um,eps_imag`,
/// converted and re-sorted on load). Optional leading directive lines
/// `# low_tail: <rule>` / `# high_tail: <rule>` override the default tails;
/// rules are `zero`, `drude`, `linear`, or `power:<exponent>`.
AbsorptionTable load_absorption_table_csv(const std::filesystem::path& path);

void save_absorption_table_csv(const AbsorptionTable& table, const std::filesystem::path& path);

/// Model preset file: JSON object keyed by `variant`; unknown keys rejected.
DielectricModel load_model_json(const std::filesystem::path& path);

DielectricModel model_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                const std::string& field_path = "model");

/// Builtin preset name, or a path to a model JSON file.
DielectricModel resolve_model_spec(const std::string& name_or_path);

/// Canonical JSON description of a model (used for manifests and the
/// preset listing). Tabulated data is summarized by its span and size.
nlohmann::json model_to_json(const DielectricModel& model);

} // namespace casforce
