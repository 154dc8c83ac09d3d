#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csla/centers.hpp"
#include "csla/encoder.hpp"
#include "csla/generator.hpp"
#include "csla/mappers.hpp"
#include "csla/objective.hpp"
#include "csla/rng.hpp"

namespace csla {

struct TrainConfig {
    std::int64_t iterations = 20000;
    double lr_init = 1e-2;
    double poly_power = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 1;

    bool trc_enabled = true;
    std::int64_t trc_capacity = 4096;
    // Below this fill the single average center is used.
    std::int64_t trc_min_fill = 64;
    // Cap on center pairs sampled per step.
    std::int64_t trc_max_pairs = 256;
    // Keep the bank contents fixed (no pushes); used for ablations.
    bool trc_freeze_bank = false;

    CenterMode center_mode = CenterMode::average;
    std::string text_class = "person";
    double ema_decay = 0.999;
    int average_samples = kDefaultAverageSamples;

    std::uint64_t seed = 0;
    std::int64_t log_every = 100;
    std::int64_t checkpoint_every = 0;

    static TrainConfig toy() { return {}; }
    static TrainConfig full_scale();
    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Poly schedule: lr_init * (1 - iteration / iterations)^power.
double lr_at(std::int64_t iteration, const TrainConfig& config);

struct AdamState {
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;
    std::int64_t step = 0;

    bool operator==(const AdamState&) const = default;
};

// Everything needed to continue training bit-exactly.
struct TrainState {
    GeneratorConfig generator;
    EncoderConfig encoder;
    MapperConfig mapper_config;
    TrainConfig train;
    LossWeights weights;

    MapperStack mappers;
    AdamState adam;
    CenterSet centers;
    CenterBank bank{1};
    Rng z_rng;
    Rng trc_rng;
    std::int64_t iteration = 0;
    std::int64_t degenerate_norms = 0;
};

struct TrainingAborted : std::runtime_error {
    TrainingAborted(const std::string& what, std::int64_t iteration, LossReport report)
        : std::runtime_error(what), iteration(iteration), report(report) {}
    std::int64_t iteration;
    LossReport report;
};

// Builds a fresh state: centers per the configured mode, freshly initialized
// mappers and optimizer, empty bank.
TrainState initialize_training(const GeneratorAdapter& gen, const EncoderAdapter& enc, const TrainConfig& train,
                               MapperConfig mapper_config = {}, LossWeights weights = {});

/// Data-free latent distillation loop. Each step samples one latent per batch
/// element from the frozen generator, encodes its image once, and fits the
/// mappers to the residual targets.
class Trainer {
public:
    Trainer(std::shared_ptr<const GeneratorAdapter> gen, std::shared_ptr<const EncoderAdapter> enc, TrainState state);

    LossReport step();

    using StepCallback = std::function<void(const TrainState&, const LossReport&)>;
    // Runs until `state().iteration == until` (defaults to the configured total).
    void run(std::int64_t until = -1, const StepCallback& on_step = {});

    const TrainState& state() const { return state_; }
    TrainState& mutable_state() { return state_; }

private:
    void adam_update(const MapperStack& grad, double lr);

    std::shared_ptr<const GeneratorAdapter> gen_;
    std::shared_ptr<const EncoderAdapter> enc_;
    TrainState state_;
};

/// One newline-delimited JSON record per logged iteration.
class TrainingLog {
public:
    explicit TrainingLog(std::ostream& out) : out_(out), start_(std::chrono::steady_clock::now()) {}
    void record(std::int64_t iteration, double lr, const LossReport& report, std::int64_t degenerate_total);

private:
    std::ostream& out_;
    std::chrono::steady_clock::time_point start_;
};

struct RunOptions {
    std::filesystem::path checkpoint_path;  // final checkpoint; empty to skip
    std::filesystem::path log_path;         // empty to skip
    std::ostream* progress = nullptr;
};

// Trains to completion with periodic logging and checkpointing. On a
// non-finite loss a diagnostic checkpoint is written next to the target
// path (suffix ".abort") before the error propagates.
TrainState run_training(std::shared_ptr<const GeneratorAdapter> gen, std::shared_ptr<const EncoderAdapter> enc,
                        TrainState state, const RunOptions& options);

} // namespace csla
