#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace casforce::quad {

/// One integrand evaluation. `aux` rides along with the same quadrature
/// weights as `value` (absolute values); used to propagate the error
/// estimate of a nested inner integral through the outer one.
struct Sample {
    double value = 0.0;
    double aux = 0.0;
};

struct Result {
    double value = 0.0;
    double error = 0.0; // absolute error estimate for `value`
    double aux = 0.0;   // weighted integral of |aux|
    long nodes = 0;     // integrand evaluations
    int subdivisions = 0;
    bool converged = false;
};

namespace detail {

// Gauss-Kronrod 15/7 abscissae and weights on [-1, 1].
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
Sample eval(F& f, double x) {
    if constexpr (std::is_same_v<std::invoke_result_t<F&, double>, double>) {
        return Sample{f(x), 0.0};
    } else {
        return f(x);
    }
}

struct Panel {
    double a = 0.0, b = 0.0;
    double value = 0.0, error = 0.0, aux = 0.0;
    bool refinable = true;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename F>
Panel gk15(F& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double center = 0.5 * (a + b);

    Sample fc = eval(f, center);
    double resk = gk_wk[7] * fc.value;
    double resg = gk_wg[3] * fc.value;
    double raux = gk_wk[7] * std::abs(fc.aux);
    for (int j = 0; j < 7; ++j) {
        const double dx = half * gk_x[j];
        Sample f1 = eval(f, center - dx);
        Sample f2 = eval(f, center + dx);
        const double fsum = f1.value + f2.value;
        resk += gk_wk[j] * fsum;
        if (j % 2 == 1) resg += gk_wg[(j - 1) / 2] * fsum;
        raux += gk_wk[j] * (std::abs(f1.aux) + std::abs(f2.aux));
    }

    Panel p;
    p.a = a;
    p.b = b;
    p.value = resk * half;
    p.error = std::abs((resk - resg) * half);
    p.aux = raux * half;
    p.refinable = (b - a) > 8.0 * std::numeric_limits<double>::epsilon() *
                                std::max({std::abs(a), std::abs(b), 1e-300});
    return p;
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration over the panels defined by
/// `breakpoints` (strictly increasing, at least two entries). The worst
/// panel is bisected until the summed error estimate meets
/// max(abs_tol, rel_tol*|integral|) or the subdivision budget runs out.
template <typename F>
Result integrate(F&& f, std::span<const double> breakpoints, double abs_tol, double rel_tol,
                 int max_subdivisions) {
    if (breakpoints.size() < 2)
        throw std::invalid_argument("integrate: need at least two breakpoints");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw std::invalid_argument("integrate: breakpoints must be strictly increasing");

    Result out;
    std::priority_queue<detail::Panel> active;
    std::vector<detail::Panel> settled;
    double value = 0.0, error = 0.0;

    auto push = [&](detail::Panel&& p) {
        value += p.value;
        error += p.error;
        if (p.refinable)
            active.push(std::move(p));
        else
            settled.push_back(std::move(p));
    };

    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        push(detail::gk15(f, breakpoints[i - 1], breakpoints[i]));
        out.nodes += 15;
    }

    auto tolerance = [&] { return std::max(abs_tol, rel_tol * std::abs(value)); };

    while (error > tolerance() && !active.empty() && out.subdivisions < max_subdivisions) {
        detail::Panel worst = active.top();
        active.pop();
        value -= worst.value;
        error -= worst.error;
        const double mid = 0.5 * (worst.a + worst.b);
        push(detail::gk15(f, worst.a, mid));
        push(detail::gk15(f, mid, worst.b));
        out.nodes += 30;
        ++out.subdivisions;
    }

    // Recompute the totals from the surviving panels; the incremental
    // updates above accumulate cancellation over many refinements.
    double v = 0.0, e = 0.0, x = 0.0;
    for (const auto& p : settled) {
        v += p.value;
        e += p.error;
        x += p.aux;
    }
    while (!active.empty()) {
        const auto& p = active.top();
        v += p.value;
        e += p.error;
        x += p.aux;
        active.pop();
    }
    out.value = v;
    out.error = e;
    out.aux = x;
    out.converged = e <= std::max(abs_tol, rel_tol * std::abs(v));
    return out;
}

template <typename F>
Result integrate(F&& f, double a, double b, double abs_tol, double rel_tol,
                 int max_subdivisions) {
    const double pts[2] = {a, b};
    return integrate(std::forward<F>(f), std::span<const double>(pts, 2), abs_tol, rel_tol,
                     max_subdivisions);
}

/// Breakpoints {a, a+w, a+2w, a+4w, ...} doubling until `b` is reached.
std::vector<double> geometric_breakpoints(double a, double b, double first_width);

/// n log-spaced values from lo to hi inclusive (lo, hi > 0, n >= 2).
std::vector<double> log_spaced(double lo, double hi, int n);

} // namespace casforce::quad
