#pragma once

#include "deskpilot/augment.hpp"
#include "deskpilot/dataset.hpp"
#include "deskpilot/driving_sample.hpp"

namespace deskpilot {

// Per-behavior training recipe: how hard to thin zero-steering rows, which
// augmentations to gate on, and how long to train.
struct BehaviorPreset {
    BehaviorTag tag = BehaviorTag::simplistic;
    double zero_steer_deletion_rate = 0.7;
    AugmentationProbabilities probs = AugmentationProbabilities::simplistic_preset();
    int epochs = 5;
    int batch_size = 256;
    int augmentation_loops = 64;
    double learning_rate = 1e-3;
    double split_ratio = 0.8;
};

inline BehaviorPreset preset_for_behavior(BehaviorTag tag) {
    BehaviorPreset p;
    p.tag = tag;
    p.probs = AugmentationProbabilities::preset_for(tag);
    switch (tag) {
        case BehaviorTag::simplistic:
            p.zero_steer_deletion_rate = 0.7;
            p.epochs = 5;
            break;
        case BehaviorTag::rigorous:
            p.zero_steer_deletion_rate = 0.8;
            p.epochs = 10;
            break;
        case BehaviorTag::collision:
            p.zero_steer_deletion_rate = 0.8;
            p.epochs = 5;
            break;
    }
    return p;
}

}  // namespace deskpilot
