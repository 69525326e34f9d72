#pragma once

#include <cmath>
#include <compare>
#include <stdexcept>

#include "casforce/constants.hpp"

namespace casforce {

/// Angular frequency in rad/s, restricted to the non-negative axis.
/// Also represents the imaginary-axis variable xi where eps(i*xi) is evaluated.
class AngularFrequency {
public:
    AngularFrequency() = default;

    explicit AngularFrequency(double rad_per_s) : value_(rad_per_s) {
        if (!(rad_per_s >= 0.0))
            throw std::invalid_argument("angular frequency must be finite and >= 0");
    }

    /// omega = 2*pi*c / lambda
    static AngularFrequency from_wavelength(double wavelength_m) {
        if (!(wavelength_m > 0.0))
            throw std::invalid_argument("wavelength must be > 0");
        return AngularFrequency(2.0 * constants::pi * constants::speed_of_light / wavelength_m);
    }

    double rad_per_s() const { return value_; }

    double wavelength_m() const {
        if (value_ <= 0.0)
            throw std::domain_error("zero frequency has no finite wavelength");
        return 2.0 * constants::pi * constants::speed_of_light / value_;
    }

    auto operator<=>(const AngularFrequency&) const = default;

private:
    double value_ = 0.0;
};

} // namespace casforce
