#pragma once

#include <cstdint>
#include <mutex>
#include <optional>

#include "stage/capture/device_frame.hpp"

namespace stage::capture {

// Single-slot, latest-wins handoff between one stream producer and the tick loop.
// Frames whose sequence is not above the last accepted one are counted and dropped.
class FrameMailbox {
public:
    struct Snapshot {
        std::optional<DeviceFrame> frame;  // newest frame ever accepted
        bool fresh = false;                // accepted since the previous snapshot
    };

    // Returns false when the frame was dropped as late or duplicate.
    bool offer(DeviceFrame frame) {
        std::lock_guard lock(mutex_);
        if (latest_ && frame.sequence <= latest_->sequence) {
            ++dropped_;
            return false;
        }
        latest_ = std::move(frame);
        fresh_ = true;
        ++accepted_;
        return true;
    }

    Snapshot snapshot() {
        std::lock_guard lock(mutex_);
        Snapshot s{latest_, fresh_};
        fresh_ = false;
        return s;
    }

    std::uint64_t dropped() const {
        std::lock_guard lock(mutex_);
        return dropped_;
    }

    std::uint64_t accepted() const {
        std::lock_guard lock(mutex_);
        return accepted_;
    }

private:
    mutable std::mutex mutex_;
    std::optional<DeviceFrame> latest_;
    bool fresh_ = false;
    std::uint64_t dropped_ = 0;
    std::uint64_t accepted_ = 0;
};

}  // namespace stage::capture
