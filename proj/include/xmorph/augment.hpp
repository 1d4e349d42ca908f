#pragma once

#include "xmorph/dataset.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace xmorph {

// Per-bin Gaussian statistics of one object's trials in one context.
struct BinStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  // population (1/n)
    std::string object;
    SensorimotorContext context;
    int source_trials = 0;
    int next_trial = 0;  // first trial index for sampled records
};

BinStats fit_bin_stats(std::span<const TrialRecord> trials);

// k independent elementwise-Normal draws, provenance = augmented.
std::vector<TrialRecord> sample_augmented(const BinStats& stats, int k, std::uint64_t seed);

// Groups by (object, context), fits statistics and returns only the sampled
// records. Each group's seed is derived from `seed` and its key.
std::vector<TrialRecord> augment_trials(std::span<const TrialRecord> trials, int k, std::uint64_t seed);

// splitmix64 over seed ^ FNV-1a(key); stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace xmorph
