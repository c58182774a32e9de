#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "stage/capture/device_frame.hpp"

namespace stage::capture {

inline constexpr double kDefaultSmoothAlpha = 0.8;

// Per-channel exponential smoothing: every channel moves a fraction `alpha`
// of the way from its previous estimate towards the incoming sample.
// alpha = 1 passes frames through untouched, alpha = 0 freezes the estimate.
struct SmootherState {
    std::vector<Quat> rotations;
    Vec3 root;
    double alpha = kDefaultSmoothAlpha;
};

class SmootherError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Seeds the estimate with `first`. Throws SmootherError when alpha is outside [0, 1].
SmootherState make_smoother(const DeviceFrame& first, double alpha);

std::pair<SmootherState, DeviceFrame> smooth(SmootherState state, const DeviceFrame& frame);

}  // namespace stage::capture
