#pragma once

#include "cesagan/config.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cesagan/bootstrap.hpp"
#include "cesagan/nn.hpp"
#include "cesagan/tensor.hpp"

CESAGAN_NAMESPACE_BEGIN

struct TrainConfig {
    std::size_t batch_size = 32;
    double learning_rate = 1e-4;
    std::size_t total_iterations = 10'000;
    double rmsprop_decay = 0.99;
    double rmsprop_epsilon = 1e-8;
    std::size_t d_steps_per_g_step = 1;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 1'000;  // 0 disables periodic checkpoints

    void validate() const;  // BadConfig
};


/// Hinge loss for D: mean(max(0, 1 - real)) + mean(max(0, 1 + fake)).
ad::Tensor discriminator_loss(const ad::Tensor& real_scores, const ad::Tensor& fake_scores);
/// -mean(fake).
ad::Tensor generator_loss(const ad::Tensor& fake_scores);

/// Running mean-square of gradients, one buffer per parameter.
struct OptimizerState {
    std::vector<std::vector<Real>> mean_square;
};

/// acc = decay * acc + (1 - decay) * g^2;  p -= lr * g / (sqrt(acc) + eps).
/// Parameters without a gradient are treated as having a zero gradient.
void rmsprop_step(std::span<ad::Tensor> params, OptimizerState& state, const TrainConfig& config);

struct IterationRecord {
    std::size_t iteration = 0;
    double loss_d = 0.0;
    double loss_g = 0.0;
    double real_score = 0.0;  // mean D score on the real batch
    double fake_score = 0.0;  // mean D score on the fake batch
    std::size_t corpus_size = 0;  // training-set size used for this iteration
};

class TrainObserver {
public:
    virtual ~TrainObserver() = default;
    virtual void on_iteration(const IterationRecord&) {}
    virtual void on_round(const RoundReport&) {}
    virtual void on_checkpoint(std::size_t /*iteration*/, nn::NetworkParams&, const CorpusState&) {}
};

/// Alternating hinge-loss GAN training. Owns networks, optimizer state and corpus.
class Trainer {
public:
    /// Throws EmptyCorpus / MixedDimensions / BadConfig.
    Trainer(std::vector<LevelGrid> corpus, const TrainConfig& config, const nn::ArchConfig& arch,
            std::optional<BootstrapConfig> bootstrap = std::nullopt);

    /// One G update preceded by d_steps_per_g_step D updates, then the bootstrap hook when due.
    IterationRecord step();
    void run(TrainObserver* observer = nullptr);
    void set_observer(TrainObserver* observer) noexcept { observer_ = observer; }

    std::size_t iteration() const noexcept { return iteration_; }
    nn::NetworkParams& params() noexcept { return params_; }
    const CorpusState& corpus() const noexcept { return corpus_; }
    const std::vector<IterationRecord>& log() const noexcept { return log_; }
    const std::vector<RoundReport>& rounds() const noexcept { return rounds_; }

private:
    struct Batch {
        ad::Tensor real;
        ad::Tensor u;
    };
    Batch sample_batch();

    TrainConfig config_;
    std::optional<BootstrapConfig> bootstrap_;
    Rng rng_;
    Rng bootstrap_rng_;
    nn::NetworkParams params_;
    CorpusState corpus_;
    std::vector<ad::Tensor> g_params_;
    std::vector<ad::Tensor> d_params_;
    OptimizerState g_opt_;
    OptimizerState d_opt_;
    std::size_t iteration_ = 0;
    std::vector<IterationRecord> log_;
    std::vector<RoundReport> rounds_;
    TrainObserver* observer_ = nullptr;
};

struct TrainResult {
    nn::NetworkParams params;
    CorpusState corpus;
    std::vector<IterationRecord> log;
    std::vector<RoundReport> rounds;
};

TrainResult train(std::vector<LevelGrid> corpus, const TrainConfig& config, const nn::ArchConfig& arch,
                  std::optional<BootstrapConfig> bootstrap = std::nullopt, TrainObserver* observer = nullptr);

CESAGAN_NAMESPACE_END
