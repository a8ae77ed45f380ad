#pragma once

#include <stdexcept>
#include <string>

namespace deskpilot {

enum class FrameSource { center, left, right };

enum class BehaviorTag { simplistic, rigorous, collision };

inline std::string to_string(BehaviorTag t) {
    switch (t) {
        case BehaviorTag::simplistic: return "simplistic";
        case BehaviorTag::rigorous: return "rigorous";
        case BehaviorTag::collision: return "collision";
    }
    return "simplistic";
}

inline BehaviorTag behavior_from_string(const std::string& s) {
    if (s == "simplistic") return BehaviorTag::simplistic;
    if (s == "rigorous") return BehaviorTag::rigorous;
    if (s == "collision") return BehaviorTag::collision;
    throw std::invalid_argument("unknown behavior: " + s);
}

// One timestamped demonstration record. Frame fields are file references
// (empty string = absent frame); the center frame is always present.
struct DrivingSample {
    double timestamp = 0.0;        // seconds
    std::string center;
    std::string left;
    std::string right;
    double steering = 0.0;         // normalized, [-1, 1]
    double throttle = 0.0;         // [0, 1]
    double brake = 0.0;            // [0, 1]
    double speed = 0.0;            // km/h

    const std::string& frame_ref(FrameSource s) const {
        switch (s) {
            case FrameSource::left: return left;
            case FrameSource::right: return right;
            default: return center;
        }
    }
};

}  // namespace deskpilot
