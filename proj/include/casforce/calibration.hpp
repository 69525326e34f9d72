#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "casforce/errors.hpp"

namespace casforce {

/// Parameters of the simulated apparatus: the unknown instrument scale k
/// (output units per newton), the rest gap d0, the residual voltage, and
/// the true force-distance relation being measured.
struct GroundTruth {
    double k = 0.0;
    double d0_m = 0.0;
    double v0_V = 0.0;
    double sphere_radius_m = 0.0;
    std::function<double(double)> force_curve; // separation (m) -> attraction (N)

    void validate() const;
};

struct ScanPlan {
    std::vector<double> dpz_m;    // piezo extensions, strictly increasing
    std::vector<double> vbias_V;  // bias sweep per extension
    double noise_sigma = 0.0;     // additive Gaussian noise on the output
    std::uint64_t rng_seed = 0;

    void validate_against(const GroundTruth& truth) const;
};

struct LockInRecord {
    double d_pz_m = 0.0;
    double v_bias_V = 0.0;
    double amplitude = 0.0;
};

/// Per-extension quadratic fit y = alpha*(x + x0)^2 + beta with covariance
/// in the (alpha, x0, beta) order.
struct ParabolaFit {
    double d_pz_m = 0.0;
    double alpha = 0.0;
    double x0_V = 0.0;
    double beta = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    bool physical = true; // alpha > 0

    double sigma_alpha() const { return std::sqrt(std::max(0.0, covariance(0, 0))); }
    double sigma_x0() const { return std::sqrt(std::max(0.0, covariance(1, 1))); }
    double sigma_beta() const { return std::sqrt(std::max(0.0, covariance(2, 2))); }
};

struct ValueWithSigma {
    double value = 0.0;
    double sigma = 0.0;
};

struct CalibrationFitOptions {
    bool inverse_variance_weights = true;
    int max_iterations = 200;
};

struct CalibrationScaleFit {
    ValueWithSigma k;
    ValueWithSigma d0_m;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero(); // (k, d0)
    int iterations = 0;
};

struct CasimirPoint {
    double separation_m = 0.0;
    double sigma_separation_m = 0.0;
    double force_newtons = 0.0;
    double sigma_force_newtons = 0.0;
    bool flagged_negative = false;
};

struct CalibrationResult {
    ValueWithSigma k;
    ValueWithSigma d0_m;
    ValueWithSigma v0_V;
    std::vector<CasimirPoint> casimir_points;
    /// Full covariance of the extracted forces. The shared k uncertainty
    /// correlates all points; the per-point sigmas ignore that correlation,
    /// this matrix keeps it.
    Eigen::MatrixXd force_covariance;
};

struct PipelineOutput {
    std::vector<LockInRecord> records;
    std::vector<ParabolaFit> parabolas;
    CalibrationScaleFit scale;
    CalibrationResult result;
};

/// A pipeline stage failed; partial products up to the failure are kept.
class PipelineError : public FitError {
public:
    PipelineError(const std::string& what, std::string diagnostics, PipelineOutput partial)
        : FitError(what, std::move(diagnostics)), partial_(std::move(partial)) {}
    const PipelineOutput& partial() const { return partial_; }

private:
    PipelineOutput partial_;
};

/// Synthesize lock-in records over the scan grid:
///   A = k * [ eps0*pi*R*(V + V0)^2 / (d0 - d_pz) + |F(d0 - d_pz)| ] + noise.
/// Noise is drawn from a counter-based stream keyed by (seed, record index),
/// so generation is deterministic regardless of evaluation order.
std::vector<LockInRecord> generate_scan(const GroundTruth& truth, const ScanPlan& plan);

/// Least squares in the monomial basis a*x^2 + b*x + c, converted exactly to
/// (alpha, x0, beta) = (a, b/2a, c - b^2/4a) with the covariance mapped
/// through the conversion Jacobian.
ParabolaFit fit_parabola(std::span<const LockInRecord> records_at_one_dpz);

/// Weighted nonlinear least squares of alpha(d_pz) = k*eps0*pi*R/(d0 - d_pz).
/// Initialized from the exactly linear relation 1/alpha vs d_pz.
CalibrationScaleFit fit_calibration(std::span<const ParabolaFit> parabolas,
                                    double sphere_radius_m,
                                    const CalibrationFitOptions& options = {});

/// Per parabola: F = beta/k at separation d0 - d_pz, with first-order error
/// propagation treating sigma_beta and sigma_k as independent. The residual
/// voltage is the inverse-variance pooled mean of the per-parabola x0.
CalibrationResult extract_casimir(std::span<const ParabolaFit> parabolas, ValueWithSigma k,
                                  ValueWithSigma d0_m);

/// generate_scan -> fit_parabola (per extension) -> fit_calibration ->
/// extract_casimir.
PipelineOutput run_pipeline(const GroundTruth& truth, const ScanPlan& plan,
                            const CalibrationFitOptions& options = {});

/// Deterministic standard normal draw for (seed, index); the generator
/// behind the scan noise, exposed for tests.
double gaussian_draw(std::uint64_t seed, std::uint64_t index);

} // namespace casforce
