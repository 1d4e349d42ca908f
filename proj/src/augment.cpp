#include "xmorph/augment.hpp"

#include "xmorph/error.hpp"

#include <map>
#include <random>
#include <tuple>

namespace xmorph {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return splitmix64(seed ^ h);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ull));
}

BinStats fit_bin_stats(std::span<const TrialRecord> trials) {
    if (trials.empty()) throw Error(ErrorCode::EmptyInput, "fit_bin_stats needs at least one trial");
    const TrialRecord& first = trials.front();
    BinStats stats;
    stats.object = first.object;
    stats.context = first.context;
    stats.source_trials = static_cast<int>(trials.size());
    stats.mean = Eigen::VectorXd::Zero(first.feature.size());
    int max_trial = -1;
    for (const auto& t : trials) {
        if (t.object != first.object || t.context != first.context) {
            throw Error(ErrorCode::MixedContext, "trials of " + first.object + "/" + first.context.name() +
                                                     " mixed with " + t.object + "/" + t.context.name());
        }
        if (t.provenance != Provenance::Real) {
            throw Error(ErrorCode::InvalidArgument, "bin statistics are fitted on real trials only");
        }
        if (t.feature.size() != stats.mean.size()) throw Error(ErrorCode::DimensionMismatch, "trial feature length");
        stats.mean += t.feature;
        max_trial = std::max(max_trial, t.trial);
    }
    const double n = static_cast<double>(trials.size());
    stats.mean /= n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(stats.mean.size());
    for (const auto& t : trials) var += (t.feature - stats.mean).cwiseAbs2();
    stats.std = (var / n).cwiseSqrt();
    stats.next_trial = max_trial + 1;
    return stats;
}

std::vector<TrialRecord> sample_augmented(const BinStats& stats, int k, std::uint64_t seed) {
    if (k < 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<TrialRecord> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        TrialRecord r;
        r.object = stats.object;
        r.context = stats.context;
        r.trial = stats.next_trial + i;
        r.provenance = Provenance::Augmented;
        r.feature.resize(stats.mean.size());
        for (Eigen::Index j = 0; j < stats.mean.size(); ++j) {
            r.feature[j] = stats.mean[j] + stats.std[j] * normal(rng);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TrialRecord> augment_trials(std::span<const TrialRecord> trials, int k, std::uint64_t seed) {
    std::map<std::tuple<std::string, SensorimotorContext>, std::vector<TrialRecord>> groups;
    for (const auto& t : trials) {
        if (t.provenance != Provenance::Real) continue;
        groups[{t.object, t.context}].push_back(t);
    }
    std::vector<TrialRecord> out;
    for (const auto& [key, group] : groups) {
        const auto& [object, context] = key;
        const BinStats stats = fit_bin_stats(group);
        const std::uint64_t group_seed = derive_seed(seed, object + "|" + context.robot + "|" + context.name());
        auto sampled = sample_augmented(stats, k, group_seed);
        out.insert(out.end(), std::make_move_iterator(sampled.begin()), std::make_move_iterator(sampled.end()));
    }
    return out;
}

}  // namespace xmorph
