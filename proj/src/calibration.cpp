#include "casforce/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "casforce/constants.hpp"
#include "casforce/lifshitz.hpp"

namespace casforce {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; // (0, 1)
}

} // namespace

double gaussian_draw(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
    const double u1 = to_unit_open(splitmix64(state));
    const double u2 = to_unit_open(splitmix64(state));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * constants::pi * u2);
}

void GroundTruth::validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("ground truth k must be > 0");
    if (!(d0_m > 0.0) || !std::isfinite(d0_m)) throw ConfigError("ground truth d0 must be > 0");
    if (!std::isfinite(v0_V)) throw ConfigError("ground truth v0 must be finite");
    if (!(sphere_radius_m > 0.0)) throw ConfigError("ground truth sphere radius must be > 0");
    if (!force_curve) throw ConfigError("ground truth force curve is not set");
}

void ScanPlan::validate_against(const GroundTruth& truth) const {
    if (dpz_m.size() < 5) throw ConfigError("scan plan needs at least 5 piezo extensions");
    for (std::size_t i = 0; i < dpz_m.size(); ++i) {
        if (i > 0 && !(dpz_m[i] > dpz_m[i - 1]))
            throw ConfigError("piezo extensions must be strictly increasing");
        if (dpz_m[i] >= truth.d0_m)
            throw std::domain_error("sphere-plate contact: d_pz >= d0");
    }
    if (vbias_V.size() < 7) throw ConfigError("scan plan needs at least 7 bias values");
    double lo = vbias_V.front() + truth.v0_V;
    double hi = lo;
    for (double v : vbias_V) {
        lo = std::min(lo, v + truth.v0_V);
        hi = std::max(hi, v + truth.v0_V);
    }
    if (!(lo < 0.0 && hi > 0.0))
        throw ConfigError("bias grid must span both signs of (v_bias + v0)");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
}

std::vector<LockInRecord> generate_scan(const GroundTruth& truth, const ScanPlan& plan) {
    truth.validate();
    plan.validate_against(truth);

    std::vector<LockInRecord> records;
    records.reserve(plan.dpz_m.size() * plan.vbias_V.size());
    std::uint64_t index = 0;
    for (double dpz : plan.dpz_m) {
        const double gap = truth.d0_m - dpz;
        const double casimir = std::abs(truth.force_curve(gap));
        for (double v : plan.vbias_V) {
            const double electrostatic =
                electrostatic_sphere_plate(truth.sphere_radius_m, gap, v, truth.v0_V);
            double amplitude = truth.k * (electrostatic + casimir);
            if (plan.noise_sigma > 0.0)
                amplitude += plan.noise_sigma * gaussian_draw(plan.rng_seed, index);
            records.push_back({dpz, v, amplitude});
            ++index;
        }
    }
    return records;
}

ParabolaFit fit_parabola(std::span<const LockInRecord> records) {
    const auto n = static_cast<Eigen::Index>(records.size());
    if (n < 4) throw FitError("parabola fit needs at least 4 records");

    std::set<double> distinct;
    for (const auto& r : records) distinct.insert(r.v_bias_V);
    if (distinct.size() < 3)
        throw FitError("parabola fit needs at least 3 distinct bias values");

    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = records[static_cast<std::size_t>(i)].v_bias_V;
        design(i, 0) = x * x;
        design(i, 1) = x;
        design(i, 2) = 1.0;
        y(i) = records[static_cast<std::size_t>(i)].amplitude;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw FitError("degenerate parabola design matrix");
    const Eigen::Vector3d coeff = qr.solve(y);
    const double a = coeff(0), b = coeff(1), c = coeff(2);

    const double rss = (design * coeff - y).squaredNorm();
    const double dof = static_cast<double>(n - 3);
    const double sigma2 = dof > 0.0 ? rss / dof : 0.0;
    const Eigen::Matrix3d normal = design.transpose() * design;
    const Eigen::Matrix3d cov_monomial = sigma2 * normal.inverse();

    ParabolaFit fit;
    fit.d_pz_m = records.front().d_pz_m;
    fit.alpha = a;
    fit.physical = a > 0.0;
    if (a != 0.0) {
        fit.x0_V = b / (2.0 * a);
        fit.beta = c - b * b / (4.0 * a);
        Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
        jac(0, 0) = 1.0;
        jac(1, 0) = -b / (2.0 * a * a);
        jac(1, 1) = 1.0 / (2.0 * a);
        jac(2, 0) = b * b / (4.0 * a * a);
        jac(2, 1) = -b / (2.0 * a);
        jac(2, 2) = 1.0;
        Eigen::Matrix3d cov = jac * cov_monomial * jac.transpose();
        fit.covariance = 0.5 * (cov + cov.transpose());
    } else {
        fit.x0_V = 0.0;
        fit.beta = c;
        fit.covariance = cov_monomial;
    }
    return fit;
}

CalibrationScaleFit fit_calibration(std::span<const ParabolaFit> parabolas,
                                    double sphere_radius_m,
                                    const CalibrationFitOptions& options) {
    const auto n = static_cast<Eigen::Index>(parabolas.size());
    if (n < 3) throw FitError("calibration fit needs at least 3 parabolas");
    std::set<double> distinct;
    for (const auto& p : parabolas) {
        if (!(p.alpha > 0.0))
            throw FitError("calibration fit requires alpha > 0 for every parabola");
        distinct.insert(p.d_pz_m);
    }
    if (distinct.size() != parabolas.size())
        throw FitError("calibration fit requires distinct piezo extensions");
    if (!(sphere_radius_m > 0.0)) throw ConfigError("sphere radius must be > 0");

    const double scale = constants::vacuum_permittivity * constants::pi * sphere_radius_m;

    // Weighted fits need every sigma_alpha; fall back to equal weights when a
    // parabola reports (numerically) zero uncertainty, as noiseless data does.
    bool weighted = options.inverse_variance_weights;
    for (const auto& p : parabolas) {
        if (!(p.sigma_alpha() > 1e-14 * std::abs(p.alpha))) weighted = false;
    }
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = parabolas[static_cast<std::size_t>(i)];
        w(i) = weighted ? 1.0 / (p.sigma_alpha() * p.sigma_alpha()) : 1.0;
    }

    // 1/alpha = (d0 - d_pz)/(k*scale) is exactly linear in d_pz: ordinary
    // regression gives the starting point in closed form.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : parabolas) {
        const double x = p.d_pz_m, yv = 1.0 / p.alpha;
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    if (denom == 0.0) throw FitError("calibration fit: degenerate extension grid");
    const double slope = (nn * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / nn;
    if (!(slope < 0.0))
        throw FitError("calibration fit: 1/alpha does not decrease with extension",
                       "slope=" + std::to_string(slope));
    double k = -1.0 / (slope * scale);
    double d0 = -intercept / slope;

    double max_dpz = parabolas.back().d_pz_m;
    for (const auto& p : parabolas) max_dpz = std::max(max_dpz, p.d_pz_m);
    if (!(d0 > max_dpz)) d0 = max_dpz * 1.5 + 1e-9;

    auto cost_of = [&](double kk, double dd) {
        double cost = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& p = parabolas[static_cast<std::size_t>(i)];
            const double r = p.alpha - kk * scale / (dd - p.d_pz_m);
            cost += w(i) * r * r;
        }
        return cost;
    };

    // Levenberg-Marquardt on (k, d0).
    double lambda = 1e-3;
    double cost = cost_of(k, d0);
    int iter = 0;
    bool converged = false;
    for (; iter < options.max_iterations; ++iter) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& p = parabolas[static_cast<std::size_t>(i)];
            const double gap = d0 - p.d_pz_m;
            const double sw = std::sqrt(w(i));
            const double r = sw * (p.alpha - k * scale / gap);
            Eigen::Vector2d grad; // d(residual)/d(k, d0)
            grad(0) = -sw * scale / gap;
            grad(1) = sw * k * scale / (gap * gap);
            jtj += grad * grad.transpose();
            jtr += grad * r;
        }
        bool stepped = false;
        for (int attempt = 0; attempt < 32; ++attempt) {
            Eigen::Matrix2d damped = jtj;
            damped(0, 0) *= 1.0 + lambda;
            damped(1, 1) *= 1.0 + lambda;
            const Eigen::Vector2d delta = damped.ldlt().solve(-jtr);
            const double k_new = k + delta(0);
            const double d0_new = d0 + delta(1);
            if (!(k_new > 0.0) || !(d0_new > max_dpz)) {
                lambda *= 10.0;
                continue;
            }
            const double cost_new = cost_of(k_new, d0_new);
            if (cost_new <= cost + 1e-14 * std::abs(cost)) {
                const bool small_step = std::abs(delta(0)) <= 1e-12 * std::abs(k) &&
                                        std::abs(delta(1)) <= 1e-12 * std::abs(d0);
                k = k_new;
                d0 = d0_new;
                const double drop = cost - cost_new;
                cost = cost_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (small_step || drop <= 1e-14 * std::max(cost, 1e-300)) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            converged = true; // stuck at a minimum the damping cannot improve
            break;
        }
        if (converged) break;
    }
    if (!converged) {
        std::ostringstream diag;
        diag << "iterations=" << iter << " cost=" << cost << " k=" << k << " d0=" << d0;
        throw FitError("calibration fit did not converge", diag.str());
    }
    if (!(d0 > max_dpz))
        throw FitError("calibration fit non-physical: d0 <= max(d_pz)");

    // Covariance at the optimum from the linearized normal equations.
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    double rss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = parabolas[static_cast<std::size_t>(i)];
        const double gap = d0 - p.d_pz_m;
        const double sw = std::sqrt(w(i));
        const double r = sw * (p.alpha - k * scale / gap);
        rss += r * r;
        Eigen::Vector2d grad;
        grad(0) = -sw * scale / gap;
        grad(1) = sw * k * scale / (gap * gap);
        jtj += grad * grad.transpose();
    }
    Eigen::Matrix2d cov = jtj.inverse();
    if (!weighted) {
        const double dof = static_cast<double>(n - 2);
        cov *= dof > 0.0 ? rss / dof : 0.0;
    }

    CalibrationScaleFit out;
    out.k = {k, std::sqrt(std::max(0.0, cov(0, 0)))};
    out.d0_m = {d0, std::sqrt(std::max(0.0, cov(1, 1)))};
    out.covariance = 0.5 * (cov + cov.transpose());
    out.iterations = iter + 1;
    return out;
}

CalibrationResult extract_casimir(std::span<const ParabolaFit> parabolas, ValueWithSigma k,
                                  ValueWithSigma d0_m) {
    if (!(k.value > 0.0)) throw std::invalid_argument("extract_casimir requires k > 0");

    CalibrationResult out;
    out.k = k;
    out.d0_m = d0_m;

    // Residual voltage: one physical constant estimated by every parabola.
    bool all_sigma = true;
    for (const auto& p : parabolas)
        if (!(p.sigma_x0() > 0.0)) all_sigma = false;
    if (parabolas.empty()) {
        out.v0_V = {0.0, 0.0};
    } else if (all_sigma) {
        double wsum = 0.0, acc = 0.0;
        for (const auto& p : parabolas) {
            const double wi = 1.0 / (p.sigma_x0() * p.sigma_x0());
            wsum += wi;
            acc += wi * p.x0_V;
        }
        out.v0_V = {acc / wsum, std::sqrt(1.0 / wsum)};
    } else {
        double acc = 0.0;
        for (const auto& p : parabolas) acc += p.x0_V;
        out.v0_V = {acc / static_cast<double>(parabolas.size()), 0.0};
    }

    const auto n = static_cast<Eigen::Index>(parabolas.size());
    out.force_covariance = Eigen::MatrixXd::Zero(n, n);
    out.casimir_points.reserve(parabolas.size());
    const double kk = k.value;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = parabolas[static_cast<std::size_t>(i)];
        CasimirPoint pt;
        pt.separation_m = d0_m.value - p.d_pz_m;
        pt.sigma_separation_m = d0_m.sigma;
        pt.force_newtons = p.beta / kk;
        const double from_beta = p.sigma_beta() / kk;
        const double from_k = p.beta * k.sigma / (kk * kk);
        pt.sigma_force_newtons = std::hypot(from_beta, from_k);
        pt.flagged_negative = p.beta < 0.0;
        out.casimir_points.push_back(pt);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& q = parabolas[static_cast<std::size_t>(j)];
            out.force_covariance(i, j) =
                p.beta * q.beta * k.sigma * k.sigma / (kk * kk * kk * kk);
        }
        out.force_covariance(i, i) += from_beta * from_beta;
    }
    return out;
}

PipelineOutput run_pipeline(const GroundTruth& truth, const ScanPlan& plan,
                            const CalibrationFitOptions& options) {
    PipelineOutput out;
    out.records = generate_scan(truth, plan);

    const std::size_t nv = plan.vbias_V.size();
    try {
        for (std::size_t i = 0; i < plan.dpz_m.size(); ++i) {
            std::span<const LockInRecord> group(out.records.data() + i * nv, nv);
            out.parabolas.push_back(fit_parabola(group));
        }
        out.scale = fit_calibration(out.parabolas, truth.sphere_radius_m, options);
        out.result = extract_casimir(out.parabolas, out.scale.k, out.scale.d0_m);
    } catch (const FitError& e) {
        throw PipelineError(e.what(), e.diagnostics(), std::move(out));
    }
    return out;
}

} // namespace casforce
