#include "cesagan/train.hpp"

#include <cmath>

#include "cesagan/error.hpp"

CESAGAN_NAMESPACE_BEGIN

using ad::Tensor;

void TrainConfig::validate() const {
    if (batch_size < 1) throw BadConfig("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw BadConfig("learning_rate must be > 0");
    if (total_iterations < 1) throw BadConfig("total_iterations must be >= 1");
    if (d_steps_per_g_step < 1) throw BadConfig("d_steps_per_g_step must be >= 1");
    if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) throw BadConfig("rmsprop_decay must be in [0, 1)");
    if (!(rmsprop_epsilon > 0.0)) throw BadConfig("rmsprop_epsilon must be > 0");
}

Tensor discriminator_loss(const Tensor& real_scores, const Tensor& fake_scores) {
    if (real_scores.numel() != fake_scores.numel() || real_scores.numel() == 0)
        throw ShapeMismatch("discriminator_loss: real and fake batches differ in size");
    const std::size_t b = real_scores.numel();
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        total += std::max(0.0, 1.0 - static_cast<double>(real_scores[i]));
        total += std::max(0.0, 1.0 + static_cast<double>(fake_scores[i]));
    }
    const double inv_b = 1.0 / static_cast<double>(b);
    return ad::make_result({1}, {static_cast<Real>(total * inv_b)}, {&real_scores, &fake_scores},
                           [real_scores, fake_scores, b, inv_b](std::span<const Real> og) mutable {
                               const Real step = static_cast<Real>(og[0] * inv_b);
                               if (real_scores.requires_grad()) {
                                   auto g = real_scores.grad_buffer();
                                   for (std::size_t i = 0; i < b; ++i)
                                       if (real_scores[i] < Real(1)) g[i] -= step;
                               }
                               if (fake_scores.requires_grad()) {
                                   auto g = fake_scores.grad_buffer();
                                   for (std::size_t i = 0; i < b; ++i)
                                       if (fake_scores[i] > Real(-1)) g[i] += step;
                               }
                           });
}

Tensor generator_loss(const Tensor& fake_scores) {
    if (fake_scores.numel() == 0) throw ShapeMismatch("generator_loss: empty batch");
    const std::size_t b = fake_scores.numel();
    double total = 0.0;
    for (Real v : fake_scores.data()) total += v;
    const double inv_b = 1.0 / static_cast<double>(b);
    return ad::make_result({1}, {static_cast<Real>(-total * inv_b)}, {&fake_scores},
                           [fake_scores, inv_b](std::span<const Real> og) mutable {
                               const Real step = static_cast<Real>(og[0] * inv_b);
                               for (auto& g : fake_scores.grad_buffer()) g -= step;
                           });
}

void rmsprop_step(std::span<Tensor> params, OptimizerState& state, const TrainConfig& config) {
    if (state.mean_square.empty()) {
        for (const auto& p : params) state.mean_square.emplace_back(p.numel(), Real(0));
    }
    if (state.mean_square.size() != params.size()) throw ShapeMismatch("rmsprop: parameter count changed");
    const double decay = config.rmsprop_decay, lr = config.learning_rate, eps = config.rmsprop_epsilon;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& acc = state.mean_square[k];
        Tensor& p = params[k];
        if (acc.size() != p.numel()) throw ShapeMismatch("rmsprop: accumulator shape differs from parameter");
        auto data = p.mutable_data();
        const auto grad = p.grad();
        for (std::size_t i = 0; i < acc.size(); ++i) {
            const double g = grad.empty() ? 0.0 : static_cast<double>(grad[i]);
            const double a = decay * acc[i] + (1.0 - decay) * g * g;
            acc[i] = static_cast<Real>(a);
            data[i] = static_cast<Real>(data[i] - lr * g / (std::sqrt(a) + eps));
        }
    }
}

namespace {

std::vector<LevelGrid> checked_corpus(std::vector<LevelGrid> corpus) {
    if (corpus.empty()) throw EmptyCorpus("training corpus is empty");
    for (const auto& lvl : corpus)
        if (!lvl.same_shape(corpus.front())) throw MixedDimensions("training levels do not share one size");
    return corpus;
}

nn::ArchConfig fit_arch(nn::ArchConfig arch, const LevelGrid& sample) {
    if (arch.height != sample.height() || arch.width != sample.width())
        throw BadConfig("architecture is " + std::to_string(arch.height) + "x" + std::to_string(arch.width) +
                        " but corpus levels are " + std::to_string(sample.height()) + "x" +
                        std::to_string(sample.width()));
    return arch;
}

std::vector<Tensor> tensors_of(std::vector<ad::NamedTensor> named) {
    std::vector<Tensor> out;
    for (auto& n : named) out.push_back(n.tensor);
    return out;
}

void zero_grads(std::span<Tensor> ts) {
    for (auto& t : ts) t.zero_grad();
}

double mean_of(const Tensor& t) {
    double s = 0.0;
    for (Real v : t.data()) s += v;
    return s / static_cast<double>(t.numel());
}

}  // namespace

Trainer::Trainer(std::vector<LevelGrid> corpus, const TrainConfig& config, const nn::ArchConfig& arch,
                 std::optional<BootstrapConfig> bootstrap)
    : config_((config.validate(), config)),
      bootstrap_(bootstrap),
      rng_(config.seed),
      bootstrap_rng_(derive_seed(config.seed, 1)),
      params_(fit_arch(arch, checked_corpus(corpus).front()), rng_),
      corpus_(std::move(corpus)),
      g_params_(tensors_of(params_.generator.parameters())),
      d_params_(tensors_of(params_.discriminator.parameters())) {
    if (bootstrap_) bootstrap_->validate();
}

Trainer::Batch Trainer::sample_batch() {
    std::vector<LevelGrid> levels;
    std::vector<FeatureVector> feats;
    levels.reserve(config_.batch_size);
    for (std::size_t i = 0; i < config_.batch_size; ++i) {
        const LevelGrid& lvl = corpus_.level(uniform_index(rng_, corpus_.size()));
        levels.push_back(lvl);
        feats.push_back(extract_features(lvl));
    }
    return {nn::levels_tensor(levels), nn::features_tensor(feats, params_.arch.cells())};
}

IterationRecord Trainer::step() {
    auto& G = params_.generator;
    auto& D = params_.discriminator;
    const std::size_t b = config_.batch_size, latent = params_.arch.latent_dim;
    IterationRecord rec;
    rec.iteration = iteration_ + 1;

    Tensor u;
    for (std::size_t k = 0; k < config_.d_steps_per_g_step; ++k) {
        Batch batch = sample_batch();
        u = batch.u;
        Tensor z = nn::sample_latent(rng_, b, latent);
        Tensor fake;
        {
            ad::TapeScope no_grad(nullptr);
            fake = ad::softmax_channels(G.forward(z, u, ad::Mode::Train)).detach();
        }
        ad::Tape tape;
        ad::TapeScope scope(&tape);
        Tensor real_scores = D.forward(batch.real, u, ad::Mode::Train);
        Tensor fake_scores = D.forward(fake, u, ad::Mode::Train);
        Tensor loss = discriminator_loss(real_scores, fake_scores);
        zero_grads(d_params_);
        tape.backward(loss);
        rmsprop_step(d_params_, d_opt_, config_);
        rec.loss_d = loss.item();
        rec.real_score = mean_of(real_scores);
        rec.fake_score = mean_of(fake_scores);
    }

    {
        Tensor z = nn::sample_latent(rng_, b, latent);
        ad::Tape tape;
        ad::TapeScope scope(&tape);
        Tensor probs = ad::softmax_channels(G.forward(z, u, ad::Mode::Train));
        Tensor loss = generator_loss(D.forward(probs, u, ad::Mode::Train));
        zero_grads(g_params_);
        tape.backward(loss);
        rmsprop_step(g_params_, g_opt_, config_);
        zero_grads(d_params_);
        rec.loss_g = loss.item();
    }

    ++iteration_;
    rec.corpus_size = corpus_.size();
    log_.push_back(rec);
    if (observer_) observer_->on_iteration(rec);
    if (bootstrap_ && iteration_ % bootstrap_->cadence == 0) {
        rounds_.push_back(bootstrap_round(params_, corpus_, *bootstrap_, rounds_.size() + 1, bootstrap_rng_));
        if (observer_) observer_->on_round(rounds_.back());
    }
    return rec;
}

void Trainer::run(TrainObserver* observer) {
    if (observer) observer_ = observer;
    while (iteration_ < config_.total_iterations) {
        step();
        if (observer_ && config_.checkpoint_every != 0 && iteration_ % config_.checkpoint_every == 0)
            observer_->on_checkpoint(iteration_, params_, corpus_);
    }
}

TrainResult train(std::vector<LevelGrid> corpus, const TrainConfig& config, const nn::ArchConfig& arch,
                  std::optional<BootstrapConfig> bootstrap, TrainObserver* observer) {
    Trainer trainer(std::move(corpus), config, arch, bootstrap);
    trainer.run(observer);
    return {trainer.params(), trainer.corpus(), trainer.log(), trainer.rounds()};
}

CESAGAN_NAMESPACE_END
