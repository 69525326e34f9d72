#include "casforce/lifshitz.hpp"

#include <cmath>

#include "casforce/constants.hpp"
#include "casforce/quadrature.hpp"

namespace casforce {

namespace {

using constants::hbar;
using constants::pi;
using constants::speed_of_light;

struct Surface {
    bool ideal = false;
    double eps = 1.0;
};

Surface make_surface(const DielectricModel& m, double xi) {
    if (m.is_ideal_metal()) return {true, 0.0};
    const EpsValue v = m.evaluate(AngularFrequency(xi));
    if (v.is_infinite || !(v.value < 1e290)) return {true, 0.0};
    return {false, v.value};
}

// Reflection coefficients at imaginary frequency in the transformed
// transverse variable p, written so the eps -> 1 limit cancels exactly:
//   s = sqrt(eps - 1 + p^2)
//   r_te = (s - p)/(s + p)         = (eps-1) / (s+p)^2
//   r_tm = (s - p*eps)/(s + p*eps) = (eps-1)(1 - p^2 - p*s) / ((s+p)(s+p*eps))
// An ideal metal takes the eps -> infinity limits r_te -> 1, r_tm -> -1.
void reflection_coefficients(const Surface& m, double p, double& r_te, double& r_tm) {
    if (m.ideal) {
        r_te = 1.0;
        r_tm = -1.0;
        return;
    }
    const double e = m.eps;
    const double em1 = e - 1.0;
    if (em1 == 0.0) {
        r_te = 0.0;
        r_tm = 0.0;
        return;
    }
    if (p > 1e120) {
        r_te = 0.0;
        r_tm = (1.0 - e) / (1.0 + e);
        return;
    }
    const double s = std::sqrt(em1 + p * p);
    const double u = 1.0 / (s + p);
    r_te = em1 * u * u;
    r_tm = (em1 * u) * ((1.0 - p * p - p * s) / (s + p * e));
}

} // namespace

Geometry::Geometry(double sphere_radius_meters, double separation_meters)
    : sphere_radius_m(sphere_radius_meters), separation_m(separation_meters) {
    if (!(sphere_radius_m > 0.0) || !std::isfinite(sphere_radius_m))
        throw ConfigError("sphere radius must be finite and > 0");
    if (!(separation_m > 0.0) || !std::isfinite(separation_m))
        throw ConfigError("separation must be finite and > 0");
}

void QuadratureSettings::validate() const {
    if (!(rel_tol > 0.0) || rel_tol > 1e-2)
        throw ConfigError("rel_tol must lie in (0, 1e-2]");
    if (!(abs_tol_newtons >= 0.0))
        throw ConfigError("abs_tol must be >= 0");
    if (max_subdivisions < 16)
        throw ConfigError("max_subdivisions must be >= 16");
    if (!(p_cutoff_decay >= 20.0))
        throw ConfigError("p_cutoff_decay must be >= 20");
}

double ideal_plate_pressure(double separation_m) {
    if (!(separation_m > 0.0)) throw ConfigError("separation must be > 0");
    const double d = separation_m;
    return pi * pi * hbar * speed_of_light / (240.0 * d * d * d * d);
}

double ideal_plate_energy_per_area(double separation_m) {
    if (!(separation_m > 0.0)) throw ConfigError("separation must be > 0");
    const double d = separation_m;
    return pi * pi * hbar * speed_of_light / (720.0 * d * d * d);
}

double derjaguin_sphere_plate(double sphere_radius_m,
                              const std::function<double(double)>& plate_energy_per_area,
                              double separation_m) {
    if (!(sphere_radius_m > 0.0) || !(separation_m > 0.0))
        throw ConfigError("derjaguin conversion requires positive radius and separation");
    return 2.0 * pi * sphere_radius_m * std::abs(plate_energy_per_area(separation_m));
}

double derjaguin_effective_radius(double r1_m, double r2_m) {
    if (!(r1_m > 0.0) || !(r2_m > 0.0)) throw ConfigError("radii must be > 0");
    return r1_m * r2_m / (r1_m + r2_m);
}

// The double integral is evaluated in scaled variables. With
// t = 2*d*xi/c and x = 2*p*d*xi/c the force becomes
//   F = -hbar*R*c/(16*pi*d^3) * Integral_0^inf dt Integral_t^inf dx
//         x * { ln(1 - r_te1*r_te2*e^-x) + ln(1 - r_tm1*r_tm2*e^-x) }
// where the coefficients are evaluated at xi = c*t/(2d), p = x/t. Both
// integrals live on the same O(1) scale set by the exponential, and the
// x^2 growth of the raw frequency integrand cancels identically, so no
// special handling is needed at the zero-frequency edge. Both are
// truncated after p_cutoff_decay e-foldings.
ForceResult lifshitz_sphere_plate(const ForceQuery& query) {
    query.settings.validate();
    const Geometry& geom = query.geometry;

    // eps identically 1 reflects nothing.
    if (query.material_sphere.is_vacuum() || query.material_plate.is_vacuum())
        return ForceResult{0.0, 0.0, 0};

    const double d = geom.separation_m;
    const double X = query.settings.p_cutoff_decay;
    const double rel = query.settings.rel_tol;
    const int max_subdiv = query.settings.max_subdivisions;
    const double prefactor =
        hbar * geom.sphere_radius_m * speed_of_light / (16.0 * pi * d * d * d);
    const double abs_tol_j = query.settings.abs_tol_newtons / prefactor;
    const double inner_abs = 0.5 * abs_tol_j / X;

    long nodes = 0;
    bool inner_converged = true;

    auto outer = [&](double t) -> quad::Sample {
        if (!(t > 0.0) || t >= X) return {0.0, 0.0};
        const double xi = speed_of_light * t / (2.0 * d);
        const Surface sphere = make_surface(query.material_sphere, xi);
        const Surface plate = make_surface(query.material_plate, xi);

        auto integrand = [&](double x) {
            const double p = x / t;
            double te1, tm1, te2, tm2;
            reflection_coefficients(sphere, p, te1, tm1);
            reflection_coefficients(plate, p, te2, tm2);
            const double decay = std::exp(-x);
            const double a_te = te1 * te2 * decay;
            const double a_tm = tm1 * tm2 * decay;
            return x * (std::log1p(-a_te) + std::log1p(-a_tm));
        };

        const auto breakpoints = quad::geometric_breakpoints(t, X, 0.5);
        auto inner = quad::integrate(integrand,
                                     std::span<const double>(breakpoints.data(),
                                                             breakpoints.size()),
                                     inner_abs, 0.25 * rel, max_subdiv);
        nodes += inner.nodes;
        inner_converged = inner_converged && inner.converged;
        return {inner.value, inner.error};
    };

    const auto outer_breakpoints = quad::geometric_breakpoints(0.0, X, 0.25);
    auto result = quad::integrate(outer,
                                  std::span<const double>(outer_breakpoints.data(),
                                                          outer_breakpoints.size()),
                                  0.5 * abs_tol_j, 0.5 * rel, max_subdiv);

    // Bound on the mass discarded beyond the exponential cutoff.
    const double truncation = 2.04 * std::exp(-X) * (X * X + 2.0 * X + 2.0);

    ForceResult out;
    out.force_newtons = std::max(0.0, -prefactor * result.value);
    out.est_error_newtons = prefactor * (result.error + result.aux + truncation);
    out.node_count = nodes;

    if (!result.converged || !inner_converged)
        throw ConvergenceError("force quadrature did not converge within " +
                                   std::to_string(max_subdiv) + " subdivisions",
                               out);
    return out;
}

WindowedRatio force_ratio_windowed(const DielectricModel& base, const TransparencyWindow& window,
                                   const Geometry& geometry,
                                   const QuadratureSettings& settings) {
    const DielectricModel windowed = DielectricModel::windowed(base, window);
    const ForceResult base_force =
        lifshitz_sphere_plate(ForceQuery{geometry, base, base, settings});
    const ForceResult windowed_force =
        lifshitz_sphere_plate(ForceQuery{geometry, windowed, windowed, settings});
    if (!(base_force.force_newtons > 0.0))
        throw ConfigError("windowed force ratio undefined: base force is zero");

    WindowedRatio out;
    out.ratio = windowed_force.force_newtons / base_force.force_newtons;
    const double rb = base_force.est_error_newtons / base_force.force_newtons;
    const double rw = windowed_force.force_newtons > 0.0
                          ? windowed_force.est_error_newtons / windowed_force.force_newtons
                          : 0.0;
    out.err = out.ratio * std::sqrt(rb * rb + rw * rw);
    return out;
}

double electrostatic_sphere_plate(double sphere_radius_m, double gap_m, double v_bias,
                                  double v_residual) {
    if (!(sphere_radius_m > 0.0)) throw ConfigError("sphere radius must be > 0");
    if (!(gap_m > 0.0)) throw ConfigError("gap must be > 0");
    const double v = v_bias + v_residual;
    return constants::vacuum_permittivity * pi * sphere_radius_m * v * v / gap_m;
}

} // namespace casforce
