#include "cesagan/bootstrap.hpp"

#include <algorithm>
#include <limits>

#include "cesagan/error.hpp"
#include "cesagan/playability.hpp"

CESAGAN_NAMESPACE_BEGIN

void BootstrapConfig::validate() const {
    if (cadence < 1) throw BadConfig("bootstrap cadence must be >= 1");
    if (candidates_per_round < 1) throw BadConfig("bootstrap candidates_per_round must be >= 1");
    if (min_hamming_to_corpus < 1) throw BadConfig("bootstrap min_hamming_to_corpus must be >= 1");
}

CorpusState::CorpusState(std::vector<LevelGrid> human) {
    if (human.empty()) throw EmptyCorpus("training corpus is empty");
    for (auto& lvl : human) {
        if (!lvl.same_shape(human.front())) throw MixedDimensions("training levels do not share one size");
        if (hashes_.contains(lvl)) {
            ++skipped_duplicates_;
            continue;
        }
        hashes_.insert(lvl);
        human_features_.push_back(extract_features(lvl));
        entries_.push_back({std::move(lvl), Origin::Human, 0});
    }
    human_count_ = entries_.size();
}

std::vector<LevelGrid> CorpusState::levels() const {
    std::vector<LevelGrid> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.level);
    return out;
}

std::size_t CorpusState::min_hamming_to(const LevelGrid& level) const {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& e : entries_) best = std::min(best, hamming(e.level, level));
    return best;
}

void CorpusState::append(LevelGrid level, std::size_t round) {
    hashes_.insert(level);
    entries_.push_back({std::move(level), Origin::Bootstrapped, round});
}

std::size_t hamming(const LevelGrid& a, const LevelGrid& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("hamming: levels differ in size");
    const auto ca = a.cells(), cb = b.cells();
    std::size_t d = 0;
    for (std::size_t i = 0; i < ca.size(); ++i) d += ca[i] != cb[i];
    return d;
}

RoundReport admit_candidates(CorpusState& corpus, std::span<const LevelGrid> candidates, const BootstrapConfig& config,
                             std::size_t round) {
    config.validate();
    RoundReport report;
    report.round = round;
    report.candidates = candidates.size();
    const std::size_t before = corpus.size();
    const std::size_t height = corpus.level(0).height(), width = corpus.level(0).width();

    for (const LevelGrid& cand : candidates) {
        if (cand.height() != height || cand.width() != width) {
            ++report.rejections["dimension_mismatch"];
            continue;
        }
        const auto verdict = check_playability(cand);
        if (!verdict.playable) {
            ++report.rejections[std::string(heuristic_name(*verdict.first_failure()))];
            continue;
        }
        bool near_existing = false, near_this_round = false;
        if (config.min_hamming_to_corpus == 1) {
            if (corpus.contains(cand)) {
                const auto& entries = corpus.entries();
                const bool from_round = std::any_of(entries.begin() + static_cast<std::ptrdiff_t>(before), entries.end(),
                                                    [&](const CorpusEntry& e) { return e.level == cand; });
                (from_round ? near_this_round : near_existing) = true;
            }
        } else {
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                if (hamming(corpus.level(i), cand) < config.min_hamming_to_corpus) {
                    (i >= before ? near_this_round : near_existing) = true;
                    if (near_existing) break;
                }
            }
        }
        if (near_existing) {
            ++report.rejections["duplicate_corpus"];
            continue;
        }
        if (near_this_round) {
            ++report.rejections["duplicate_round"];
            continue;
        }
        if (config.max_corpus_size != 0 && corpus.size() >= config.max_corpus_size) {
            ++report.rejections["corpus_full"];
            continue;
        }
        corpus.append(cand, round);
    }
    report.survivors = corpus.size() - before;
    report.corpus_size = corpus.size();
    return report;
}

RoundReport bootstrap_round(nn::NetworkParams& params, CorpusState& corpus, const BootstrapConfig& config,
                            std::size_t round, Rng& rng) {
    config.validate();
    const auto candidates = nn::generate_levels(params.generator, corpus.human_features(), std::nullopt,
                                                config.candidates_per_round, rng);
    return admit_candidates(corpus, candidates, config, round);
}

CESAGAN_NAMESPACE_END
