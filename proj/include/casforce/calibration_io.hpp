#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "casforce/calibration.hpp"

namespace casforce {

struct CalibrateSimConfig {
    GroundTruth truth;
    ScanPlan plan;
    CalibrationFitOptions fit_options;
    /// Negative-control mode: calibrating from dedicated electrostatic scans
    /// instead of the simultaneous fit. Documented as not supported; the CLI
    /// rejects configs that enable it.
    bool separate_electrostatic_calibration = false;
    nlohmann::json resolved; // canonical form, for the run digest
};

/// Ground-truth + scan-plan JSON. Lengths in nm/um, voltages in V/mV as
/// named by each key; the force curve is `{"kind":"lifshitz","model":...}`
/// or `{"kind":"table","path":...}`.
CalibrateSimConfig load_calibrate_config(const std::filesystem::path& path);

nlohmann::json calibration_report_json(const CalibrationResult& result);

void write_scan_csv(std::ostream& out, std::span<const LockInRecord> records);
void write_parabola_csv(std::ostream& out, std::span<const ParabolaFit> parabolas);

} // namespace casforce
