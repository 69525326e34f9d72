#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "casforce/errors.hpp"
#include "casforce/frequency.hpp"

namespace casforce {

// ---------------------------------------------------------------------------
// Drude model
// ---------------------------------------------------------------------------

struct DrudeParameters {
    AngularFrequency plasma_frequency;  // > 0
    AngularFrequency relaxation_rate;   // >= 0
};

/// Validated constructor; throws ConfigError on non-physical parameters.
DrudeParameters make_drude(double plasma_frequency_rad_per_s, double relaxation_rate_rad_per_s);

/// eps(i*xi) = 1 + wp^2 / (xi*(xi + gamma)). Strictly decreasing in xi,
/// approaching 1 from above. Diverges at xi = 0: that endpoint belongs to
/// the force integrand, not to the model.
double eps_imag_axis_drude(const DrudeParameters& params, AngularFrequency xi);

/// Absorption on the real axis, eps''(omega) = wp^2*gamma / (omega*(omega^2+gamma^2)).
/// Used to build reference tables; diverges at omega = 0.
double drude_eps_imag(const DrudeParameters& params, double omega_rad_per_s);

// ---------------------------------------------------------------------------
// Tabulated absorption with declared tails
// ---------------------------------------------------------------------------

/// Extrapolation of eps''(omega) outside the sampled support, as a power law
/// matched to the boundary sample: eps''(w) = eps_boundary * (w/w_boundary)^exponent.
struct TailRule {
    enum class Kind { Zero, InverseFrequency, LinearToZero, PowerLaw };
    Kind kind = Kind::Zero;
    double exponent = 0.0; // only meaningful for PowerLaw

    static TailRule zero() { return {Kind::Zero, 0.0}; }
    static TailRule inverse_frequency() { return {Kind::InverseFrequency, -1.0}; }
    static TailRule linear_to_zero() { return {Kind::LinearToZero, 1.0}; }
    static TailRule power_law(double exponent) { return {Kind::PowerLaw, exponent}; }

    bool is_zero() const { return kind == Kind::Zero; }
    double effective_exponent() const;
    std::string name() const;
};

struct AbsorptionSample {
    double omega_rad_per_s = 0.0;
    double eps_imag = 0.0;
};

/// eps''(omega) sampled on a strictly increasing frequency grid,
/// linearly interpolated on its support and extrapolated by the declared
/// tail rules outside it. The low tail must be integrable against
/// omega (exponent > -2); the high tail must decay faster than omega^-2,
/// otherwise construction fails before any evaluation.
class AbsorptionTable {
public:
    AbsorptionTable(std::vector<AbsorptionSample> samples, TailRule low_tail, TailRule high_tail);

    /// Default tails: high tail omega^-3; low tail 1/omega when the sampled
    /// absorption rises toward zero frequency (metallic), linear-to-zero
    /// otherwise (insulating).
    static AbsorptionTable with_default_tails(std::vector<AbsorptionSample> samples);

    std::span<const AbsorptionSample> samples() const { return samples_; }
    const TailRule& low_tail() const { return low_; }
    const TailRule& high_tail() const { return high_; }

    double omega_min() const { return samples_.front().omega_rad_per_s; }
    double omega_max() const { return samples_.back().omega_rad_per_s; }

    /// eps''(omega) including interpolation and tails.
    double eps_imag_at(double omega_rad_per_s) const;

    /// Integral of omega*eps''(omega) / (omega^2 + xi^2) over [lo, hi]
    /// (hi may be +infinity). Support panels are integrated in closed form
    /// against the exact kernel; tails use closed forms for the standard
    /// exponents and adaptive quadrature otherwise.
    double kernel_integral(double xi, double lo = 0.0,
                           double hi = std::numeric_limits<double>::infinity()) const;

private:
    std::vector<AbsorptionSample> samples_;
    TailRule low_;
    TailRule high_;
};

/// Numerical Kramers-Kronig transform to the imaginary axis:
/// eps(i*xi) = 1 + (2/pi) * Integral_0^inf omega*eps''(omega)/(omega^2+xi^2) d omega.
double eps_imag_axis_kk(const AbsorptionTable& table, AngularFrequency xi);

// ---------------------------------------------------------------------------
// Transparency window
// ---------------------------------------------------------------------------

/// Wavelength interval on which the effective absorption is set to zero,
/// modelling a material that turns transparent over that band.
struct TransparencyWindow {
    TransparencyWindow(double lambda_min_meters, double lambda_max_meters);
    double lambda_min_m;
    double lambda_max_m;
    double omega_lo_rad_per_s() const; // 2*pi*c / lambda_max
    double omega_hi_rad_per_s() const; // 2*pi*c / lambda_min
};

// ---------------------------------------------------------------------------
// Dielectric model variants
// ---------------------------------------------------------------------------

struct EpsValue {
    double value = 1.0;
    bool is_infinite = false;
};

/// Immutable value type describing a surface's permittivity on the
/// imaginary frequency axis. Copies share the underlying data and the
/// per-frequency evaluation cache; evaluation is thread safe.
class DielectricModel {
public:
    enum class Kind { Vacuum, IdealMetal, Drude, Tabulated, Windowed };

    static DielectricModel vacuum();
    static DielectricModel ideal_metal();
    static DielectricModel drude(DrudeParameters params);
    static DielectricModel tabulated(AbsorptionTable table);
    /// Only Drude and Tabulated bases can be windowed.
    static DielectricModel windowed(const DielectricModel& base, TransparencyWindow window);

    Kind kind() const;
    std::string kind_name() const;
    bool is_ideal_metal() const { return kind() == Kind::IdealMetal; }
    bool is_vacuum() const { return kind() == Kind::Vacuum; }

    /// eps(i*xi) for xi > 0; IdealMetal reports the infinite flag instead
    /// of a number. Tabulated and windowed evaluations are cached per xi.
    EpsValue evaluate(AngularFrequency xi) const;

    /// As evaluate(), but IdealMetal is a domain error.
    double evaluate_finite(AngularFrequency xi) const;

    const DrudeParameters* drude_parameters() const;
    const AbsorptionTable* absorption_table() const;
    const TransparencyWindow* window() const;
    const DielectricModel* windowed_base() const;

private:
    struct Impl;
    explicit DielectricModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    static double compute_impl(const Impl& impl, double xi);
    std::shared_ptr<const Impl> impl_;
};

// ---------------------------------------------------------------------------
// Built-in presets
// ---------------------------------------------------------------------------

/// Generic gold-like Drude parameters (wp = 1.37e16 rad/s, gamma = 5.3e13 rad/s).
/// A configurable stand-in for a real measured data set, not one.
DielectricModel preset_gold_drude();

struct PresetInfo {
    std::string name;
    std::string description;
};
std::vector<PresetInfo> builtin_presets();
bool is_builtin_preset(const std::string& name);
DielectricModel model_from_preset(const std::string& name);

} // namespace casforce
