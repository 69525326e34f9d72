#include "casforce/dielectric.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

#include "casforce/constants.hpp"
#include "casforce/quadrature.hpp"

namespace casforce {

namespace {

constexpr double kPi = constants::pi;

// atan(hi/a) - atan(lo/a) for 0 <= lo <= hi (hi may be +inf), a > 0.
// The direct difference cancels badly when both arguments are large;
// the subtraction identity keeps full precision.
double atan_diff_over(double lo, double hi, double a) {
    if (std::isinf(hi)) return std::atan2(a, lo); // pi/2 - atan(lo/a)
    return std::atan(((hi - lo) / a) / (1.0 + (hi / a) * (lo / a)));
}

// Integral of 1/(w^2 + a^2) over [lo, hi].
double inv_quad_integral(double lo, double hi, double a) {
    return atan_diff_over(lo, hi, a) / a;
}

// Integral of w/(w^2 + a^2) over [lo, hi], hi finite.
double log_kernel_integral(double lo, double hi, double a) {
    return 0.5 * std::log1p((hi - lo) * (hi + lo) / (lo * lo + a * a));
}

// Integral of w^2/(w^2 + a^2) over [lo, hi], hi finite.
double sq_kernel_integral(double lo, double hi, double a) {
    return (hi - lo) - a * atan_diff_over(lo, hi, a);
}

// Kernel integral of one linearly interpolated panel:
//   Integral_a^b  w * (e0 + m*(w - w0)) / (w^2 + xi^2) dw
// for [a, b] inside the sample panel [w0, w1].
double panel_kernel_integral(double a, double b, double w0, double e0, double w1, double e1,
                             double xi) {
    const double m = (e1 - e0) / (w1 - w0);
    const double L = log_kernel_integral(a, b, xi);
    const double W = sq_kernel_integral(a, b, xi);
    return e0 * L + m * (W - w0 * L);
}

// Kernel integral of a matched power-law tail:
//   Integral_a^b  e_ref * (w/w_ref)^p * w / (w^2 + xi^2) dw
// with b possibly +inf (requires p < -2 there).
double power_kernel_integral(double e_ref, double w_ref, double p, double a, double b,
                             double xi) {
    if (e_ref == 0.0 || !(b > a)) return 0.0;

    if (p == -1.0) return e_ref * w_ref * inv_quad_integral(a, b, xi);
    if (p == 0.0) return e_ref * log_kernel_integral(a, b, xi);
    if (p == 1.0) return (e_ref / w_ref) * sq_kernel_integral(a, b, xi);

    const double rel = 1e-11;
    const int max_subdiv = 600;

    if (p < -2.0) {
        // Substitute g = w_ref/w; the integrand becomes
        // e_ref * g^(-p-1) / (1 + (xi*g/w_ref)^2), smooth on [0, 1].
        const double g_lo = std::isinf(b) ? 0.0 : w_ref / b;
        const double g_hi = w_ref / a;
        const double g_peak = w_ref / xi;
        std::vector<double> pts{g_lo};
        if (g_peak > g_lo && g_peak < g_hi) pts.push_back(g_peak);
        pts.push_back(g_hi);
        auto f = [&](double g) {
            const double u = xi * g / w_ref;
            return e_ref * std::pow(g, -p - 1.0) / (1.0 + u * u);
        };
        auto r = quad::integrate(f, std::span<const double>(pts.data(), pts.size()), 0.0, rel,
                                 max_subdiv);
        if (!r.converged)
            throw ConfigError("tail integration failed to converge for exponent " +
                              std::to_string(p));
        return r.value;
    }

    auto integrand = [&](double w) {
        return e_ref * std::pow(w / w_ref, p) * w / (w * w + xi * xi);
    };

    if (a == 0.0 && p < 0.0) {
        // Desingularize the w -> 0 end: w = b * v^kappa with kappa = 2/(2+p)
        // turns the integrand into something linear in v near zero.
        const double kappa = 2.0 / (2.0 + p);
        auto f = [&](double v) {
            const double w = b * std::pow(v, kappa);
            return integrand(w) * b * kappa * std::pow(v, kappa - 1.0);
        };
        auto r = quad::integrate(f, 0.0, 1.0, 0.0, rel, max_subdiv);
        if (!r.converged)
            throw ConfigError("tail integration failed to converge for exponent " +
                              std::to_string(p));
        return r.value;
    }

    std::vector<double> pts{a};
    if (xi > a && xi < b) pts.push_back(xi);
    pts.push_back(b);
    auto r =
        quad::integrate(integrand, std::span<const double>(pts.data(), pts.size()), 0.0, rel,
                        max_subdiv);
    if (!r.converged)
        throw ConfigError("tail integration failed to converge for exponent " +
                          std::to_string(p));
    return r.value;
}

// Integral of 1/((w^2+g^2)(w^2+x^2)) over [a, b] (b may be +inf).
double double_pole_integral(double a, double b, double g, double x) {
    if (!(b > a)) return 0.0;
    if (std::abs(x - g) > 1e-6 * g) {
        const double bracket =
            atan_diff_over(a, b, g) / g - atan_diff_over(a, b, x) / x;
        return bracket / ((x - g) * (x + g));
    }
    // Degenerate poles: antiderivative (atan(w/g) + g*w/(w^2+g^2)) / (2 g^3).
    const double rat_hi = std::isinf(b) ? 0.0 : g * b / (b * b + g * g);
    const double rat_lo = g * a / (a * a + g * g);
    return (atan_diff_over(a, b, g) + rat_hi - rat_lo) / (2.0 * g * g * g);
}

double clamp_eps_floor(double v) {
    if (v < 1.0) {
        if (v < 1.0 - 1e-6)
            throw std::logic_error("dielectric evaluation produced eps(i*xi) < 1");
        return 1.0;
    }
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// Drude
// ---------------------------------------------------------------------------

DrudeParameters make_drude(double plasma_frequency_rad_per_s, double relaxation_rate_rad_per_s) {
    if (!(plasma_frequency_rad_per_s > 0.0) || !std::isfinite(plasma_frequency_rad_per_s))
        throw ConfigError("drude plasma frequency must be finite and > 0");
    if (!(relaxation_rate_rad_per_s >= 0.0) || !std::isfinite(relaxation_rate_rad_per_s))
        throw ConfigError("drude relaxation rate must be finite and >= 0");
    return DrudeParameters{AngularFrequency(plasma_frequency_rad_per_s),
                           AngularFrequency(relaxation_rate_rad_per_s)};
}

double eps_imag_axis_drude(const DrudeParameters& params, AngularFrequency xi) {
    const double x = xi.rad_per_s();
    if (x <= 0.0)
        throw std::domain_error("drude eps(i*xi) diverges at zero imaginary frequency");
    const double wp = params.plasma_frequency.rad_per_s();
    const double g = params.relaxation_rate.rad_per_s();
    return 1.0 + (wp / x) * (wp / (x + g));
}

double drude_eps_imag(const DrudeParameters& params, double omega_rad_per_s) {
    if (!(omega_rad_per_s > 0.0))
        throw std::domain_error("drude eps'' diverges at zero frequency");
    const double wp = params.plasma_frequency.rad_per_s();
    const double g = params.relaxation_rate.rad_per_s();
    const double w = omega_rad_per_s;
    return wp * wp * g / (w * (w * w + g * g));
}

// ---------------------------------------------------------------------------
// TailRule
// ---------------------------------------------------------------------------

double TailRule::effective_exponent() const {
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::InverseFrequency: return -1.0;
    case Kind::LinearToZero: return 1.0;
    case Kind::PowerLaw: return exponent;
    }
    return 0.0;
}

std::string TailRule::name() const {
    switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::InverseFrequency: return "drude";
    case Kind::LinearToZero: return "linear";
    case Kind::PowerLaw: return "power:" + std::to_string(exponent);
    }
    return "?";
}

// ---------------------------------------------------------------------------
// AbsorptionTable
// ---------------------------------------------------------------------------

AbsorptionTable::AbsorptionTable(std::vector<AbsorptionSample> samples, TailRule low_tail,
                                 TailRule high_tail)
    : samples_(std::move(samples)), low_(low_tail), high_(high_tail) {
    if (samples_.size() < 2)
        throw ConfigError("absorption table needs at least 2 samples");
    if (!(samples_.front().omega_rad_per_s > 0.0))
        throw ConfigError("absorption table frequencies must be > 0");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.omega_rad_per_s) || !std::isfinite(s.eps_imag))
            throw ConfigError("absorption table contains non-finite entries");
        if (s.eps_imag < 0.0)
            throw ConfigError("absorption table eps'' must be >= 0");
        if (i > 0 && !(s.omega_rad_per_s > samples_[i - 1].omega_rad_per_s))
            throw ConfigError("absorption table frequencies must be strictly increasing");
    }
    if (!low_.is_zero()) {
        const double p = low_.effective_exponent();
        if (!(p > -2.0) || p > 8.0)
            throw ConfigError("low tail exponent must lie in (-2, 8]: the kernel integral "
                              "diverges at zero frequency otherwise");
    }
    if (!high_.is_zero()) {
        const double p = high_.effective_exponent();
        if (!(p < -2.0) || p < -64.0)
            throw ConfigError(
                "high tail must decay faster than omega^-2 (exponent < -2); the "
                "kernel integral does not converge otherwise");
    }
}

AbsorptionTable AbsorptionTable::with_default_tails(std::vector<AbsorptionSample> samples) {
    if (samples.size() < 2)
        throw ConfigError("absorption table needs at least 2 samples");
    // Rising eps'' toward zero frequency marks metallic (free-carrier)
    // absorption; falling marks bound-electron behaviour.
    const bool metallic = samples[0].eps_imag > samples[1].eps_imag;
    return AbsorptionTable(std::move(samples),
                           metallic ? TailRule::inverse_frequency() : TailRule::linear_to_zero(),
                           TailRule::power_law(-3.0));
}

double AbsorptionTable::eps_imag_at(double omega) const {
    if (!(omega > 0.0)) throw std::domain_error("eps'' lookup requires omega > 0");
    const double w1 = omega_min();
    const double wN = omega_max();
    if (omega < w1) {
        if (low_.is_zero()) return 0.0;
        return samples_.front().eps_imag * std::pow(omega / w1, low_.effective_exponent());
    }
    if (omega > wN) {
        if (high_.is_zero()) return 0.0;
        return samples_.back().eps_imag * std::pow(omega / wN, high_.effective_exponent());
    }
    auto it = std::lower_bound(samples_.begin(), samples_.end(), omega,
                               [](const AbsorptionSample& s, double w) {
                                   return s.omega_rad_per_s < w;
                               });
    if (it == samples_.begin()) return it->eps_imag;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double f = (omega - lo.omega_rad_per_s) / (hi.omega_rad_per_s - lo.omega_rad_per_s);
    return lo.eps_imag + f * (hi.eps_imag - lo.eps_imag);
}

double AbsorptionTable::kernel_integral(double xi, double lo, double hi) const {
    if (!(xi > 0.0)) throw std::domain_error("kernel integral requires xi > 0");
    if (!(lo >= 0.0) || !(hi >= lo))
        throw std::invalid_argument("kernel integral needs 0 <= lo <= hi");
    if (lo == hi) return 0.0;

    const double w1 = omega_min();
    const double wN = omega_max();
    double total = 0.0;

    if (lo < w1 && !low_.is_zero()) {
        const double b = std::min(hi, w1);
        if (b > lo)
            total += power_kernel_integral(samples_.front().eps_imag, w1,
                                           low_.effective_exponent(), lo, b, xi);
    }

    const double sa = std::max(lo, w1);
    const double sb = std::min(hi, wN);
    if (sb > sa) {
        auto it = std::upper_bound(samples_.begin(), samples_.end(), sa,
                                   [](double w, const AbsorptionSample& s) {
                                       return w < s.omega_rad_per_s;
                                   });
        std::size_t i = static_cast<std::size_t>(std::distance(samples_.begin(), it));
        if (i == 0) i = 1;
        for (; i < samples_.size(); ++i) {
            const auto& left = samples_[i - 1];
            const auto& right = samples_[i];
            if (left.omega_rad_per_s >= sb) break;
            const double a = std::max(sa, left.omega_rad_per_s);
            const double b = std::min(sb, right.omega_rad_per_s);
            if (b > a)
                total += panel_kernel_integral(a, b, left.omega_rad_per_s, left.eps_imag,
                                               right.omega_rad_per_s, right.eps_imag, xi);
        }
    }

    if (hi > wN && !high_.is_zero()) {
        const double a = std::max(lo, wN);
        total += power_kernel_integral(samples_.back().eps_imag, wN, high_.effective_exponent(),
                                       a, hi, xi);
    }
    return total;
}

double eps_imag_axis_kk(const AbsorptionTable& table, AngularFrequency xi) {
    const double x = xi.rad_per_s();
    if (x <= 0.0)
        throw std::domain_error("eps(i*xi) diverges at zero imaginary frequency");
    return clamp_eps_floor(1.0 + (2.0 / kPi) * table.kernel_integral(x));
}

// ---------------------------------------------------------------------------
// TransparencyWindow
// ---------------------------------------------------------------------------

TransparencyWindow::TransparencyWindow(double lambda_min_meters, double lambda_max_meters)
    : lambda_min_m(lambda_min_meters), lambda_max_m(lambda_max_meters) {
    if (!(lambda_min_m > 0.0) || !(lambda_max_m > lambda_min_m))
        throw ConfigError("transparency window requires 0 < lambda_min < lambda_max");
}

double TransparencyWindow::omega_lo_rad_per_s() const {
    return 2.0 * kPi * constants::speed_of_light / lambda_max_m;
}

double TransparencyWindow::omega_hi_rad_per_s() const {
    return 2.0 * kPi * constants::speed_of_light / lambda_min_m;
}

// ---------------------------------------------------------------------------
// DielectricModel
// ---------------------------------------------------------------------------

struct DielectricModel::Impl {
    Kind kind = Kind::Vacuum;
    std::optional<DrudeParameters> drude;
    std::optional<AbsorptionTable> table;
    std::optional<TransparencyWindow> window;
    std::shared_ptr<const Impl> base; // windowed only
    std::optional<DielectricModel> base_model;
    bool cache_enabled = false;
    mutable std::shared_mutex cache_mutex;
    mutable std::unordered_map<double, double> cache;
};

DielectricModel DielectricModel::vacuum() {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::Vacuum;
    return DielectricModel(std::move(impl));
}

DielectricModel DielectricModel::ideal_metal() {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::IdealMetal;
    return DielectricModel(std::move(impl));
}

DielectricModel DielectricModel::drude(DrudeParameters params) {
    if (!(params.plasma_frequency.rad_per_s() > 0.0))
        throw ConfigError("drude plasma frequency must be > 0");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::Drude;
    impl->drude = params;
    return DielectricModel(std::move(impl));
}

DielectricModel DielectricModel::tabulated(AbsorptionTable table) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::Tabulated;
    impl->table = std::move(table);
    impl->cache_enabled = true;
    return DielectricModel(std::move(impl));
}

DielectricModel DielectricModel::windowed(const DielectricModel& base,
                                          TransparencyWindow window) {
    const Kind bk = base.kind();
    if (bk != Kind::Drude && bk != Kind::Tabulated)
        throw ConfigError("transparency window requires a drude or tabulated base model");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::Windowed;
    impl->window = window;
    impl->base = base.impl_;
    impl->base_model = base;
    impl->cache_enabled = true;
    return DielectricModel(std::move(impl));
}

DielectricModel::Kind DielectricModel::kind() const { return impl_->kind; }

std::string DielectricModel::kind_name() const {
    switch (impl_->kind) {
    case Kind::Vacuum: return "vacuum";
    case Kind::IdealMetal: return "ideal_metal";
    case Kind::Drude: return "drude";
    case Kind::Tabulated: return "tabulated";
    case Kind::Windowed: return "windowed";
    }
    return "?";
}

// eps(i*xi) for the finite variants. A windowed model integrates the kernel
// over the band's complement, so a window that removes nearly everything
// still evaluates without cancellation.
double DielectricModel::compute_impl(const Impl& impl, double xi) {
    switch (impl.kind) {
    case Kind::Vacuum: return 1.0;
    case Kind::Drude: {
        const auto& p = *impl.drude;
        const double wp = p.plasma_frequency.rad_per_s();
        const double g = p.relaxation_rate.rad_per_s();
        return 1.0 + (wp / xi) * (wp / (xi + g));
    }
    case Kind::Tabulated:
        return clamp_eps_floor(1.0 + (2.0 / kPi) * impl.table->kernel_integral(xi));
    case Kind::Windowed: {
        const double w_lo = impl.window->omega_lo_rad_per_s();
        const double w_hi = impl.window->omega_hi_rad_per_s();
        const auto& base = *impl.base;
        if (base.kind == Kind::Tabulated) {
            const auto& t = *base.table;
            const double below = t.kernel_integral(xi, 0.0, w_lo);
            const double above =
                t.kernel_integral(xi, w_hi, std::numeric_limits<double>::infinity());
            return clamp_eps_floor(1.0 + (2.0 / kPi) * (below + above));
        }
        // Drude base: closed forms on both complement pieces.
        const auto& p = *base.drude;
        const double wp = p.plasma_frequency.rad_per_s();
        const double g = p.relaxation_rate.rad_per_s();
        if (g == 0.0) {
            // Lossless plasma: all spectral weight sits at omega = 0, which no
            // window with lambda_max < infinity can remove.
            return 1.0 + (wp / xi) * (wp / xi);
        }
        const double scale = wp * wp * g;
        const double below = scale * double_pole_integral(0.0, w_lo, g, xi);
        const double above =
            scale * double_pole_integral(w_hi, std::numeric_limits<double>::infinity(), g, xi);
        return clamp_eps_floor(1.0 + (2.0 / kPi) * (below + above));
    }
    case Kind::IdealMetal: break;
    }
    throw std::logic_error("compute_impl: unexpected model kind");
}

EpsValue DielectricModel::evaluate(AngularFrequency xi) const {
    const double x = xi.rad_per_s();
    if (x <= 0.0) {
        if (impl_->kind == Kind::Drude ||
            (impl_->kind == Kind::Windowed && impl_->base->kind == Kind::Drude))
            throw std::domain_error("drude eps(i*xi) diverges at zero imaginary frequency");
        throw std::domain_error("dielectric model evaluation requires xi > 0");
    }
    if (impl_->kind == Kind::IdealMetal)
        return EpsValue{std::numeric_limits<double>::infinity(), true};

    if (!impl_->cache_enabled) return EpsValue{compute_impl(*impl_, x), false};

    {
        std::shared_lock lock(impl_->cache_mutex);
        auto it = impl_->cache.find(x);
        if (it != impl_->cache.end()) return EpsValue{it->second, false};
    }
    const double v = compute_impl(*impl_, x);
    {
        std::unique_lock lock(impl_->cache_mutex);
        impl_->cache.emplace(x, v);
    }
    return EpsValue{v, false};
}

double DielectricModel::evaluate_finite(AngularFrequency xi) const {
    const EpsValue v = evaluate(xi);
    if (v.is_infinite)
        throw std::domain_error("ideal metal permittivity is symbolic infinity");
    return v.value;
}

const DrudeParameters* DielectricModel::drude_parameters() const {
    return impl_->drude ? &*impl_->drude : nullptr;
}

const AbsorptionTable* DielectricModel::absorption_table() const {
    return impl_->table ? &*impl_->table : nullptr;
}

const TransparencyWindow* DielectricModel::window() const {
    return impl_->window ? &*impl_->window : nullptr;
}

const DielectricModel* DielectricModel::windowed_base() const {
    return impl_->base_model ? &*impl_->base_model : nullptr;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

DielectricModel preset_gold_drude() { return DielectricModel::drude(make_drude(1.37e16, 5.3e13)); }

std::vector<PresetInfo> builtin_presets() {
    return {
        {"gold_drude",
         "gold-like Drude metal (wp=1.37e16 rad/s, gamma=5.3e13 rad/s); a configurable "
         "stand-in, not measured optical data"},
        {"ideal_metal", "perfect reflector (infinite plasma frequency limit)"},
        {"vacuum", "eps(i*xi) = 1"},
    };
}

bool is_builtin_preset(const std::string& name) {
    return name == "gold_drude" || name == "ideal_metal" || name == "vacuum";
}

DielectricModel model_from_preset(const std::string& name) {
    if (name == "gold_drude") return preset_gold_drude();
    if (name == "ideal_metal") return DielectricModel::ideal_metal();
    if (name == "vacuum") return DielectricModel::vacuum();
    throw ConfigError("unknown model preset: " + name);
}

} // namespace casforce
