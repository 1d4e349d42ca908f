#pragma once

#include "xmorph/dataset.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xmorph {

enum class PairMode { Identity, Property };
enum class LabelKind { Weight, Content, ObjectId };

std::string_view to_string(LabelKind kind);
LabelKind parse_label_kind(std::string_view s);

// Class label of an object under `kind` ("50g", "rice", or the object id).
std::string object_label(const ObjectDescriptor& object, LabelKind kind);

struct TrialPair {
    std::size_t source = 0;  // index into CorrespondenceSet::source
    std::size_t target = 0;  // index into CorrespondenceSet::target
};

// Aligned source/target samples. Only trials that participate in at least
// one pair are kept; pair indices refer to these vectors.
struct CorrespondenceSet {
    std::vector<TrialRecord> source;
    std::vector<TrialRecord> target;
    std::vector<TrialPair> pairs;
    PairMode mode = PairMode::Identity;
    LabelKind property = LabelKind::ObjectId;
    std::optional<SensorimotorContext> source_context;
    std::optional<SensorimotorContext> target_context;

    std::size_t size() const { return pairs.size(); }
    // Stacked features, one row per pair.
    Eigen::MatrixXd source_matrix() const;
    Eigen::MatrixXd target_matrix() const;
};

// Source x target trials of every object present on both sides.
CorrespondenceSet identity_pairs(std::span<const TrialRecord> source, std::span<const TrialRecord> target);

// Source x target trials sharing the property value; property is Weight or Content.
CorrespondenceSet property_pairs(std::span<const TrialRecord> source, std::span<const TrialRecord> target,
                                 LabelKind property, const ObjectCatalog& catalog);

// Labeled domains for manifold alignment. Labels index into `classes`.
struct KemaInputs {
    Eigen::MatrixXd x1;  // n1 x D1
    Eigen::MatrixXd x2;  // n2 x D2
    std::vector<int> y1;
    std::vector<int> y2;
    std::vector<std::string> classes;
};

KemaInputs kema_inputs(std::span<const TrialRecord> source, std::span<const TrialRecord> target, LabelKind label,
                       const ObjectCatalog& catalog);

// Row-stacks record features (n x D).
Eigen::MatrixXd stack_features(std::span<const TrialRecord> records);

}  // namespace xmorph
