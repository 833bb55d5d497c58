#pragma once

#include "cesagan/config.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cesagan/level.hpp"
#include "cesagan/nn.hpp"
#include "cesagan/random.hpp"

CESAGAN_NAMESPACE_BEGIN

struct BootstrapConfig {
    std::size_t cadence = 100;              // iterations between rounds
    std::size_t candidates_per_round = 32;
    std::size_t max_corpus_size = 500;      // 0 = unlimited
    std::size_t min_hamming_to_corpus = 1;

    void validate() const;  // BadConfig
};

enum class Origin { Human, Bootstrapped };

struct CorpusEntry {
    LevelGrid level;
    Origin origin;
    std::size_t round;  // 0 for human levels
};

/// Training corpus with duplicate tracking. Levels are only ever appended.
class CorpusState {
public:
    /// Throws EmptyCorpus / MixedDimensions. Exact repeats among `human` keep their first copy.
    explicit CorpusState(std::vector<LevelGrid> human);

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }
    std::vector<LevelGrid> levels() const;
    std::size_t human_count() const noexcept { return human_count_; }
    std::size_t skipped_human_duplicates() const noexcept { return skipped_duplicates_; }
    const std::vector<FeatureVector>& human_features() const noexcept { return human_features_; }
    const LevelGrid& level(std::size_t i) const { return entries_[i].level; }

    bool contains(const LevelGrid& level) const { return hashes_.contains(level); }
    /// Smallest hamming distance from `level` to any stored level.
    std::size_t min_hamming_to(const LevelGrid& level) const;
    void append(LevelGrid level, std::size_t round);

private:
    std::vector<CorpusEntry> entries_;
    std::unordered_set<LevelGrid> hashes_;
    std::vector<FeatureVector> human_features_;
    std::size_t human_count_ = 0;
    std::size_t skipped_duplicates_ = 0;
};

struct RoundReport {
    std::size_t round = 0;
    std::size_t candidates = 0;
    std::size_t survivors = 0;
    std::map<std::string, std::size_t> rejections;  // heuristic name, duplicate_corpus, duplicate_round, corpus_full
    std::size_t corpus_size = 0;
};

/// Number of cells where `a` and `b` differ. Throws DimensionMismatch.
std::size_t hamming(const LevelGrid& a, const LevelGrid& b);

/// Filters `candidates` (playable, far enough from the corpus and from each other) and
/// appends survivors until the corpus cap.
RoundReport admit_candidates(CorpusState& corpus, std::span<const LevelGrid> candidates,
                             const BootstrapConfig& config, std::size_t round);

/// Samples candidates from the generator (eval-mode batchnorm, u from human levels) and admits them.
RoundReport bootstrap_round(nn::NetworkParams& params, CorpusState& corpus, const BootstrapConfig& config,
                            std::size_t round, Rng& rng);

CESAGAN_NAMESPACE_END
