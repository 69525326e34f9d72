#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "casforce/constants.hpp"
#include "casforce/dielectric.hpp"
#include "casforce/quadrature.hpp"

using namespace casforce;

namespace {

AbsorptionTable drude_sampled_table(const DrudeParameters& p, double lo, double hi, int n) {
    std::vector<AbsorptionSample> samples;
    for (double w : quad::log_spaced(lo, hi, n)) samples.push_back({w, drude_eps_imag(p, w)});
    return AbsorptionTable(std::move(samples), TailRule::inverse_frequency(),
                           TailRule::power_law(-3.0));
}

// eps''(w) = f*g*w / ((w0^2 - w^2)^2 + g^2 w^2)  <->  eps(i*xi) = 1 + f/(w0^2 + xi^2 + g*xi)
struct Lorentz {
    double f = 1.0e32, w0 = 5e15, g = 1e15;
    double eps_imag(double w) const {
        const double num = f * g * w;
        const double d1 = w0 * w0 - w * w;
        return num / (d1 * d1 + g * g * w * w);
    }
    double eps_axis(double xi) const { return 1.0 + f / (w0 * w0 + xi * xi + g * xi); }
};

AbsorptionTable lorentz_table(const Lorentz& lor, double lo, double hi, int n) {
    std::vector<AbsorptionSample> samples;
    for (double w : quad::log_spaced(lo, hi, n)) samples.push_back({w, lor.eps_imag(w)});
    return AbsorptionTable::with_default_tails(std::move(samples));
}

} // namespace

TEST_CASE("angular frequency validation and wavelength round trip") {
    CHECK_THROWS_AS(AngularFrequency(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(AngularFrequency::from_wavelength(0.0), std::invalid_argument);

    for (double lambda : {0.2e-6, 0.5e-6, 2.5e-6, 200e-6}) {
        const auto w = AngularFrequency::from_wavelength(lambda);
        CHECK(w.wavelength_m() == doctest::Approx(lambda).epsilon(1e-14));
    }
}

TEST_CASE("drude closed form on the imaginary axis") {
    const auto gold = make_drude(1.37e16, 5.3e13);

    // Hand evaluation of 1 + wp^2/(xi*(xi+gamma)) at xi = 1e15.
    const double v = eps_imag_axis_drude(gold, AngularFrequency(1e15));
    CHECK(v == doctest::Approx(179.2431149).epsilon(1e-9));
    CHECK(std::abs(v - 179.24) < 0.01);

    // High-frequency transparency.
    CHECK(eps_imag_axis_drude(gold, AngularFrequency(1e20)) ==
          doctest::Approx(1.0).epsilon(1e-7));

    // Lossless plasma at xi = wp gives exactly 2.
    const auto plasma = make_drude(1e16, 0.0);
    CHECK(eps_imag_axis_drude(plasma, AngularFrequency(1e16)) ==
          doctest::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_WITH_AS(eps_imag_axis_drude(gold, AngularFrequency(0.0)),
                         doctest::Contains("diverges at zero imaginary frequency"),
                         std::domain_error);
}

TEST_CASE("drude parameter validation") {
    CHECK_THROWS_AS(make_drude(0.0, 1e13), ConfigError);
    CHECK_THROWS_AS(make_drude(-1e16, 1e13), ConfigError);
    CHECK_THROWS_AS(make_drude(1e16, -1.0), ConfigError);
}

TEST_CASE("numerical transform matches the drude closed form to 0.1%") {
    const auto gold = make_drude(1.37e16, 5.3e13);
    const auto table = drude_sampled_table(gold, 1e11, 1e19, 2000);

    double worst = 0.0;
    for (double xi : quad::log_spaced(1e13, 1e17, 50)) {
        const double numeric = eps_imag_axis_kk(table, AngularFrequency(xi));
        const double exact = eps_imag_axis_drude(gold, AngularFrequency(xi));
        worst = std::max(worst, std::abs(numeric - exact) / exact);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("zero absorption gives eps exactly 1") {
    AbsorptionTable table({{1e13, 0.0}, {1e15, 0.0}, {1e17, 0.0}},
                          TailRule::linear_to_zero(), TailRule::power_law(-3.0));
    CHECK(eps_imag_axis_kk(table, AngularFrequency(1e14)) == 1.0);
    CHECK(eps_imag_axis_kk(table, AngularFrequency(1e16)) == 1.0);
}

TEST_CASE("lorentz oscillator analytic oracle within 0.1%") {
    const Lorentz lor;
    const auto table = lorentz_table(lor, 1e13, 1e19, 3000);

    // Frozen closed-form values.
    CHECK(lor.eps_axis(1e14) == doctest::Approx(4.982477101).epsilon(1e-9));
    CHECK(lor.eps_axis(1e15) == doctest::Approx(4.703703704).epsilon(1e-9));
    CHECK(lor.eps_axis(1e16) == doctest::Approx(1.740740741).epsilon(1e-9));

    for (double xi : quad::log_spaced(1e13, 1e17, 30)) {
        const double numeric = eps_imag_axis_kk(table, AngularFrequency(xi));
        CHECK(numeric == doctest::Approx(lor.eps_axis(xi)).epsilon(1e-3));
    }
}

TEST_CASE("eps(i*xi) decays monotonically and stays >= 1 for every variant") {
    const auto gold = make_drude(1.37e16, 5.3e13);
    const Lorentz lor;
    const TransparencyWindow narrow(0.2e-6, 2.5e-6);

    std::vector<DielectricModel> models;
    models.push_back(DielectricModel::vacuum());
    models.push_back(DielectricModel::drude(gold));
    models.push_back(DielectricModel::tabulated(drude_sampled_table(gold, 1e11, 1e19, 800)));
    models.push_back(DielectricModel::tabulated(lorentz_table(lor, 1e13, 1e19, 800)));
    models.push_back(DielectricModel::windowed(DielectricModel::drude(gold), narrow));
    models.push_back(DielectricModel::windowed(
        DielectricModel::tabulated(drude_sampled_table(gold, 1e11, 1e19, 800)), narrow));

    const auto grid = quad::log_spaced(1e12, 1e18, 50);
    for (const auto& model : models) {
        double prev = std::numeric_limits<double>::infinity();
        for (double xi : grid) {
            const double v = model.evaluate(AngularFrequency(xi)).value;
            CHECK(v >= 1.0);
            CHECK(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
    }
}

TEST_CASE("windowing only removes spectral weight") {
    const auto base = preset_gold_drude();
    const TransparencyWindow narrow(0.2e-6, 2.5e-6);
    const TransparencyWindow wide(1e-6, 200e-6);
    const auto w_narrow = DielectricModel::windowed(base, narrow);
    const auto w_wide = DielectricModel::windowed(base, wide);

    for (double xi : quad::log_spaced(1e12, 1e18, 50)) {
        const AngularFrequency f(xi);
        const double e_base = base.evaluate(f).value;
        const double e_narrow = w_narrow.evaluate(f).value;
        const double e_wide = w_wide.evaluate(f).value;
        CHECK(e_narrow <= e_base);
        CHECK(e_wide <= e_base);
        CHECK(e_narrow >= 1.0);
        // The visible/near-infrared window removes strictly some weight.
        CHECK(e_narrow < e_base);
    }

    // The much wider window removes strictly more below its upper edge.
    const double edge = AngularFrequency::from_wavelength(1e-6).rad_per_s();
    for (double xi : quad::log_spaced(1e12, edge * 0.999, 25)) {
        const AngularFrequency f(xi);
        CHECK(w_wide.evaluate(f).value < w_narrow.evaluate(f).value);
    }
}

TEST_CASE("empty window reproduces the base model") {
    const auto base = preset_gold_drude();
    const TransparencyWindow empty(1.0e-6, 1.0e-6 * (1.0 + 1e-9));
    const auto w = DielectricModel::windowed(base, empty);
    for (double xi : quad::log_spaced(1e13, 1e17, 20)) {
        const AngularFrequency f(xi);
        CHECK(w.evaluate(f).value ==
              doctest::Approx(base.evaluate(f).value).epsilon(1e-9));
    }
}

TEST_CASE("windowed drude closed form agrees with the windowed table path") {
    const auto gold = make_drude(1.37e16, 5.3e13);
    const TransparencyWindow window(0.2e-6, 2.5e-6);
    const auto w_analytic = DielectricModel::windowed(DielectricModel::drude(gold), window);
    const auto w_table = DielectricModel::windowed(
        DielectricModel::tabulated(drude_sampled_table(gold, 1e11, 1e19, 2000)), window);

    // Including the degenerate point xi = gamma and its neighbourhood,
    // which exercises the equal-pole branch of the closed form.
    const double g = 5.3e13;
    std::vector<double> grid = quad::log_spaced(1e13, 1e17, 20);
    grid.push_back(g);
    grid.push_back(g * (1.0 + 1e-7));
    grid.push_back(g * (1.0 - 1e-7));
    for (double xi : grid) {
        const AngularFrequency f(xi);
        CHECK(w_analytic.evaluate(f).value ==
              doctest::Approx(w_table.evaluate(f).value).epsilon(1e-3));
    }
}

TEST_CASE("declared high tail converges: doubling its cutoff is inert") {
    const auto gold = make_drude(1.37e16, 5.3e13);
    const auto table = drude_sampled_table(gold, 1e11, 1e19, 500);
    const double cap = 4e19;

    for (double xi : quad::log_spaced(1e12, 1e18, 10)) {
        const double eps_cap = 1.0 + (2.0 / constants::pi) * table.kernel_integral(xi, 0.0, cap);
        const double eps_2cap =
            1.0 + (2.0 / constants::pi) * table.kernel_integral(xi, 0.0, 2.0 * cap);
        CHECK(std::abs(eps_2cap - eps_cap) / eps_cap < 1e-3);
    }
}

TEST_CASE("table validation rejects malformed input") {
    using S = std::vector<AbsorptionSample>;
    CHECK_THROWS_AS(AbsorptionTable(S{{1e14, 1.0}}, TailRule::zero(), TailRule::zero()),
                    ConfigError);
    CHECK_THROWS_AS(
        AbsorptionTable(S{{1e15, 1.0}, {1e14, 2.0}}, TailRule::zero(), TailRule::zero()),
        ConfigError);
    CHECK_THROWS_AS(
        AbsorptionTable(S{{1e14, 1.0}, {1e15, -0.5}}, TailRule::zero(), TailRule::zero()),
        ConfigError);
    CHECK_THROWS_AS(
        AbsorptionTable(S{{0.0, 1.0}, {1e15, 0.5}}, TailRule::zero(), TailRule::zero()),
        ConfigError);
}

TEST_CASE("non-convergent tail rules fail before any evaluation") {
    std::vector<AbsorptionSample> s{{1e14, 1.0}, {1e15, 0.5}};

    // High tail must decay faster than omega^-2.
    CHECK_THROWS_AS(AbsorptionTable(s, TailRule::zero(), TailRule::power_law(-2.0)),
                    ConfigError);
    CHECK_THROWS_AS(AbsorptionTable(s, TailRule::zero(), TailRule::power_law(-1.5)),
                    ConfigError);
    CHECK_THROWS_AS(AbsorptionTable(s, TailRule::zero(), TailRule::inverse_frequency()),
                    ConfigError);
    // Low tail must stay integrable against omega at zero.
    CHECK_THROWS_AS(AbsorptionTable(s, TailRule::power_law(-2.0), TailRule::zero()),
                    ConfigError);
    CHECK_NOTHROW(AbsorptionTable(s, TailRule::power_law(-1.5), TailRule::power_law(-2.5)));
}

TEST_CASE("general power tails agree with direct quadrature") {
    std::vector<AbsorptionSample> s{{1e14, 2.0}, {1e15, 1.0}};
    AbsorptionTable table(s, TailRule::power_law(-0.5), TailRule::power_law(-2.7));

    // Low tail piece vs brute adaptive integration of eps''(w)*w/(w^2+xi^2).
    const double xi = 3e14;
    const double direct = table.kernel_integral(xi, 0.0, 1e14);
    auto f = [&](double w) {
        return table.eps_imag_at(w) * w / (w * w + xi * xi);
    };
    auto ref = quad::integrate(f, 1e4, 1e14, 0.0, 1e-10, 4000);
    CHECK(direct == doctest::Approx(ref.value).epsilon(1e-6));

    // High tail piece on a finite interval.
    const double direct_hi = table.kernel_integral(xi, 1e15, 1e17);
    auto ref_hi = quad::integrate(f, 1e15, 1e17, 0.0, 1e-10, 4000);
    CHECK(direct_hi == doctest::Approx(ref_hi.value).epsilon(1e-8));
}

TEST_CASE("model variant dispatch") {
    const auto vac = DielectricModel::vacuum();
    CHECK(vac.evaluate(AngularFrequency(1e15)).value == 1.0);
    CHECK_FALSE(vac.evaluate(AngularFrequency(1e15)).is_infinite);

    const auto metal = DielectricModel::ideal_metal();
    CHECK(metal.evaluate(AngularFrequency(1e15)).is_infinite);
    CHECK_THROWS_AS(metal.evaluate_finite(AngularFrequency(1e15)), std::domain_error);

    const auto gold = preset_gold_drude();
    CHECK(gold.evaluate(AngularFrequency(1e15)).value ==
          doctest::Approx(179.2431149).epsilon(1e-9));

    CHECK_THROWS_AS(gold.evaluate(AngularFrequency(0.0)), std::domain_error);
    CHECK_THROWS_AS(vac.evaluate(AngularFrequency(0.0)), std::domain_error);
}

TEST_CASE("window wrapping rules") {
    const TransparencyWindow w(0.2e-6, 2.5e-6);
    CHECK_THROWS_AS(DielectricModel::windowed(DielectricModel::vacuum(), w), ConfigError);
    CHECK_THROWS_AS(DielectricModel::windowed(DielectricModel::ideal_metal(), w), ConfigError);
    const auto once = DielectricModel::windowed(preset_gold_drude(), w);
    CHECK_THROWS_AS(DielectricModel::windowed(once, w), ConfigError);
    CHECK_THROWS_AS(TransparencyWindow(2.5e-6, 0.2e-6), ConfigError);
    CHECK_THROWS_AS(TransparencyWindow(1e-6, 1e-6), ConfigError);
}

TEST_CASE("concurrent cached evaluation agrees with serial") {
    const auto gold = make_drude(1.37e16, 5.3e13);
    const auto model = DielectricModel::tabulated(drude_sampled_table(gold, 1e11, 1e19, 400));
    const auto grid = quad::log_spaced(1e13, 1e17, 200);

    std::vector<double> serial;
    for (double xi : grid) serial.push_back(model.evaluate(AngularFrequency(xi)).value);

    // Fresh copy sharing nothing evaluated yet.
    const auto shared = DielectricModel::tabulated(drude_sampled_table(gold, 1e11, 1e19, 400));
    std::vector<std::vector<double>> results(8, std::vector<double>(grid.size()));
    std::vector<std::thread> workers;
    for (int w = 0; w < 8; ++w) {
        workers.emplace_back([&, w] {
            for (std::size_t i = 0; i < grid.size(); ++i)
                results[static_cast<std::size_t>(w)][i] =
                    shared.evaluate(AngularFrequency(grid[i])).value;
        });
    }
    for (auto& t : workers) t.join();

    for (const auto& row : results)
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(row[i] == doctest::Approx(serial[i]).epsilon(1e-12));
}
