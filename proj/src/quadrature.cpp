#include "casforce/quadrature.hpp"

#include <cmath>

namespace casforce::quad {

std::vector<double> geometric_breakpoints(double a, double b, double first_width) {
    if (!(b > a)) throw std::invalid_argument("geometric_breakpoints: need b > a");
    if (!(first_width > 0.0)) throw std::invalid_argument("geometric_breakpoints: width <= 0");
    std::vector<double> pts{a};
    double w = first_width;
    double x = a;
    while (x + w < b) {
        x += w;
        pts.push_back(x);
        w *= 2.0;
    }
    pts.push_back(b);
    if (pts.size() < 2 || !(pts[pts.size() - 2] < b)) {
        // degenerate: first step already overshot
        pts.assign({a, b});
    }
    return pts;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_spaced: need 0 < lo < hi");
    if (n < 2) throw std::invalid_argument("log_spaced: need n >= 2");
    std::vector<double> out(static_cast<std::size_t>(n));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

} // namespace casforce::quad
