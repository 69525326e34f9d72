#pragma once

#include <functional>
#include <stdexcept>

#include "casforce/dielectric.hpp"
#include "casforce/errors.hpp"

namespace casforce {

struct Geometry {
    Geometry(double sphere_radius_meters, double separation_meters);
    double sphere_radius_m;
    double separation_m;

    /// The sphere-plate force formula assumes separation much smaller than
    /// the radius of curvature; flag geometries where that starts to fail.
    bool proximity_warning() const { return separation_m / sphere_radius_m > 0.01; }
};

struct QuadratureSettings {
    double rel_tol = 1e-6;
    double abs_tol_newtons = 1e-18;
    int max_subdivisions = 4000;
    /// e-foldings of exp(-2*p*d*xi/c) before the p integral is truncated;
    /// also bounds the frequency integral, whose integrand decays on the
    /// same scale.
    double p_cutoff_decay = 40.0;

    void validate() const;
};

struct ForceQuery {
    Geometry geometry;
    DielectricModel material_sphere;
    DielectricModel material_plate;
    QuadratureSettings settings{};
};

struct ForceResult {
    double force_newtons = 0.0;     // attraction magnitude
    double est_error_newtons = 0.0; // absolute error estimate
    long node_count = 0;            // integrand evaluations
};

/// Quadrature failed to meet its tolerance inside the subdivision budget.
/// Carries the best available estimate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, ForceResult best)
        : std::runtime_error(what), best_(best) {}
    const ForceResult& best_estimate() const { return best_; }

private:
    ForceResult best_;
};

/// Attraction per unit area between two perfectly reflecting parallel
/// plates: pi^2 hbar c / (240 d^4).
double ideal_plate_pressure(double separation_m);

/// Magnitude of the corresponding interaction energy per unit area,
/// pi^2 hbar c / (720 d^3).
double ideal_plate_energy_per_area(double separation_m);

/// Proximity-force conversion of a plate-plate energy per area into a
/// sphere-plate force: F = 2*pi*R*|u(d)|.
double derjaguin_sphere_plate(double sphere_radius_m,
                              const std::function<double(double)>& plate_energy_per_area,
                              double separation_m);

/// R1*R2/(R1+R2): two spheres reduce to an effective sphere-plate radius.
double derjaguin_effective_radius(double r1_m, double r2_m);

/// Zero-temperature dispersion force between a sphere and a plate with
/// arbitrary (possibly different) dielectric models, from the double
/// integral over imaginary frequency and the transformed transverse
/// variable. Returns the attraction magnitude. Throws ConvergenceError
/// (carrying the best estimate) if the adaptive quadrature cannot meet
/// the requested tolerance.
ForceResult lifshitz_sphere_plate(const ForceQuery& query);

struct WindowedRatio {
    double ratio = 1.0;
    double err = 0.0;
};

/// F(windowed base) / F(base) with both surfaces assigned the same model.
WindowedRatio force_ratio_windowed(const DielectricModel& base, const TransparencyWindow& window,
                                   const Geometry& geometry,
                                   const QuadratureSettings& settings = {});

/// eps0*pi*R*(v_bias + v_residual)^2 / gap, the sphere-plate electrostatic
/// attraction in the proximity regime.
double electrostatic_sphere_plate(double sphere_radius_m, double gap_m, double v_bias,
                                  double v_residual);

} // namespace casforce
