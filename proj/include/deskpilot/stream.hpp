#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deskpilot/augment.hpp"
#include "deskpilot/dataset.hpp"
#include "deskpilot/image.hpp"
#include "deskpilot/image_io.hpp"

namespace deskpilot {

// Keeps decoded frames in memory; datasets here are small enough that the
// whole frame set fits comfortably.
class FrameCache {
  public:
    explicit FrameCache(std::filesystem::path root) : root_(std::move(root)) {}

    const ImageU8& get(const std::string& ref) {
        auto it = cache_.find(ref);
        if (it != cache_.end()) return it->second;
        auto [pos, inserted] = cache_.emplace(ref, read_ppm(root_ / ref));
        return pos->second;
    }

    // Loader view for augment_sample; the cache must outlive the loader.
    FrameLoader loader() {
        return [this](const std::string& ref) { return get(ref); };
    }

    std::size_t size() const { return cache_.size(); }

  private:
    std::filesystem::path root_;
    std::unordered_map<std::string, ImageU8> cache_;
};

// One training or validation batch: preprocessed frames and their
// normalized steering labels, index-aligned.
struct Batch {
    std::vector<ImageF32> inputs;
    std::vector<float> labels;

    std::size_t size() const { return labels.size(); }
};

struct TrainStreamConfig {
    int batch_size = 256;
    int augmentation_loops = 64;
    AugmentationProbabilities probs;
    BalanceConfig balance;
    PerspectiveShiftConfig shift;
    std::uint64_t seed = 0;
    int input_width = 64;
    int input_height = 64;

    void validate() const {
        if (batch_size < 1) throw std::invalid_argument("TrainStreamConfig: batch_size >= 1");
        if (augmentation_loops < 1)
            throw std::invalid_argument("TrainStreamConfig: augmentation_loops >= 1");
        if (input_width < 1 || input_height < 1)
            throw std::invalid_argument("TrainStreamConfig: input dims >= 1");
        probs.validate();
        balance.validate();
    }
};

// Endless stream of augmented, preprocessed training batches. Every pass
// over the data re-applies the zero-steer balancing on a freshly drawn
// random subset and reshuffles; one epoch is steps_per_epoch() batches.
//
// Determinism contract: the pass structure (balancing + shuffle) is driven
// by one master generator, while each emitted sample augments under a
// generator derived statelessly from (seed, emission index). A prefetching
// implementation could therefore augment out of order and still reproduce
// this exact byte sequence; this one is sequential.
class BatchStream {
  public:
    BatchStream(Dataset train, TrainStreamConfig cfg, FrameLoader loader)
        : base_(std::move(train)), cfg_(cfg), load_(std::move(loader)), master_(cfg.seed) {
        cfg_.validate();
        if (base_.empty()) throw std::invalid_argument("BatchStream: empty dataset");
        steps_ = train_steps(static_cast<long long>(base_.size()), cfg_.batch_size,
                             cfg_.augmentation_loops);
    }

    long long steps_per_epoch() const { return steps_; }
    std::uint64_t samples_emitted() const { return emitted_; }

    Batch next() {
        Batch batch;
        batch.inputs.reserve(cfg_.batch_size);
        batch.labels.reserve(cfg_.batch_size);
        for (int i = 0; i < cfg_.batch_size; ++i) {
            if (queue_.empty()) refill();
            const std::size_t idx = queue_.back();
            queue_.pop_back();
            const DrivingSample& s = pass_.samples[idx];
            Rng sample_rng = Rng::derive(cfg_.seed, emitted_);
            auto [img, steering] = augment_sample(s, cfg_.probs, cfg_.shift, load_, sample_rng);
            batch.inputs.push_back(preprocess(img, cfg_.input_width, cfg_.input_height));
            batch.labels.push_back(static_cast<float>(steering));
            ++emitted_;
        }
        return batch;
    }

  private:
    void refill() {
        pass_ = balance_zero_steer(base_, cfg_.balance, master_);
        if (pass_.empty())
            throw std::runtime_error("BatchStream: balancing removed every sample");
        queue_.resize(pass_.size());
        for (std::size_t i = 0; i < queue_.size(); ++i) queue_[i] = i;
        for (std::size_t i = queue_.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                master_.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(queue_[i - 1], queue_[j]);
        }
    }

    Dataset base_;
    Dataset pass_;
    TrainStreamConfig cfg_;
    FrameLoader load_;
    Rng master_;
    std::vector<std::size_t> queue_;
    long long steps_ = 0;
    std::uint64_t emitted_ = 0;
};

// Ordered, non-augmented pass over a validation set: center frames only,
// preprocessed the same way as training inputs. The final batch may be
// partial; steps() of them cover the whole set.
class ValidationStream {
  public:
    ValidationStream(Dataset val, int batch_size, FrameLoader loader, int input_width = 64,
                     int input_height = 64)
        : ds_(std::move(val)),
          batch_size_(batch_size),
          load_(std::move(loader)),
          w_(input_width),
          h_(input_height) {
        if (batch_size_ < 1) throw std::invalid_argument("ValidationStream: batch_size >= 1");
        if (ds_.empty()) throw std::invalid_argument("ValidationStream: empty dataset");
    }

    long long steps() const {
        return validation_steps(static_cast<long long>(ds_.size()), batch_size_);
    }

    bool done() const { return pos_ >= ds_.size(); }
    void reset() { pos_ = 0; }

    Batch next() {
        if (done()) throw std::runtime_error("ValidationStream: exhausted");
        Batch batch;
        const std::size_t end = std::min(ds_.size(), pos_ + static_cast<std::size_t>(batch_size_));
        batch.inputs.reserve(end - pos_);
        batch.labels.reserve(end - pos_);
        for (; pos_ < end; ++pos_) {
            const DrivingSample& s = ds_.samples[pos_];
            if (s.center.empty())
                throw std::runtime_error("ValidationStream: sample at t=" +
                                         std::to_string(s.timestamp) + " has no center frame");
            batch.inputs.push_back(preprocess(load_(s.center), w_, h_));
            batch.labels.push_back(static_cast<float>(s.steering));
        }
        return batch;
    }

  private:
    Dataset ds_;
    int batch_size_;
    FrameLoader load_;
    int w_;
    int h_;
    std::size_t pos_ = 0;
};

}  // namespace deskpilot
