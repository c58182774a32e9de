#include "stage/capture/smoother.hpp"

#include <string>

namespace stage::capture {

SmootherState make_smoother(const DeviceFrame& first, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw SmootherError("smoothing alpha " + std::to_string(alpha) + " outside [0, 1]");
    return {first.local_rotations, first.root_translation, alpha};
}

std::pair<SmootherState, DeviceFrame> smooth(SmootherState state, const DeviceFrame& frame) {
    if (state.rotations.size() != frame.joint_count()) {
        throw SmootherError("smoother tracks " + std::to_string(state.rotations.size()) + " channels, frame has " +
                            std::to_string(frame.joint_count()));
    }
    const double a = state.alpha;
    DeviceFrame out = frame;
    for (std::size_t j = 0; j < frame.joint_count(); ++j) {
        out.local_rotations[j] = slerp(state.rotations[j], frame.local_rotations[j], a);
    }
    // written as a weighted sum so that alpha = 0 and alpha = 1 are exact
    out.root_translation = (1.0 - a) * state.root + a * frame.root_translation;
    state.rotations = out.local_rotations;
    state.root = out.root_translation;
    return {std::move(state), std::move(out)};
}

}  // namespace stage::capture
