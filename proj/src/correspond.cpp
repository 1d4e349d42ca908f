#include "xmorph/correspond.hpp"

#include "xmorph/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace xmorph {

namespace {

// Checks that every record in both lists shares one behavior and modality,
// and that each side comes from a single robot.
std::pair<std::optional<SensorimotorContext>, std::optional<SensorimotorContext>> check_contexts(
    std::span<const TrialRecord> source, std::span<const TrialRecord> target) {
    auto side = [](std::span<const TrialRecord> recs, const char* name) -> std::optional<SensorimotorContext> {
        if (recs.empty()) return std::nullopt;
        const auto& c = recs.front().context;
        for (const auto& r : recs) {
            if (r.context != c) {
                throw Error(ErrorCode::ContextMismatch, std::string(name) + " trials mix contexts " +
                                                            c.robot + "/" + c.name() + " and " +
                                                            r.context.robot + "/" + r.context.name());
            }
        }
        return c;
    };
    auto s = side(source, "source");
    auto t = side(target, "target");
    if (s && t && (s->behavior != t->behavior || s->modality != t->modality)) {
        throw Error(ErrorCode::ContextMismatch, "source " + s->name() + " vs target " + t->name());
    }
    return {s, t};
}

// Sort order used for pairs: (object id, trial); stable for equal keys.
std::vector<std::size_t> ordered_indices(std::span<const TrialRecord> recs) {
    std::vector<std::size_t> idx(recs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(recs[a].object, recs[a].trial) < std::tie(recs[b].object, recs[b].trial);
    });
    return idx;
}

template <typename KeyFn>
CorrespondenceSet build_pairs(std::span<const TrialRecord> source, std::span<const TrialRecord> target, KeyFn key) {
    CorrespondenceSet set;
    std::tie(set.source_context, set.target_context) = check_contexts(source, target);

    std::map<std::string, std::vector<std::size_t>> target_by_key;
    for (std::size_t j : ordered_indices(target)) target_by_key[key(target[j])].push_back(j);

    std::map<std::size_t, std::size_t> src_slot, tgt_slot;
    auto slot = [](std::map<std::size_t, std::size_t>& slots, std::vector<TrialRecord>& kept,
                   const TrialRecord& rec, std::size_t original) {
        auto [it, inserted] = slots.emplace(original, kept.size());
        if (inserted) kept.push_back(rec);
        return it->second;
    };
    for (std::size_t i : ordered_indices(source)) {
        auto it = target_by_key.find(key(source[i]));
        if (it == target_by_key.end()) continue;
        const std::size_t s = slot(src_slot, set.source, source[i], i);
        for (std::size_t j : it->second) {
            set.pairs.push_back({s, slot(tgt_slot, set.target, target[j], j)});
        }
    }
    return set;
}

}  // namespace

std::string_view to_string(LabelKind kind) {
    switch (kind) {
        case LabelKind::Weight: return "weight";
        case LabelKind::Content: return "content";
        case LabelKind::ObjectId: return "objectId";
    }
    return "?";
}

LabelKind parse_label_kind(std::string_view s) {
    if (s == "weight") return LabelKind::Weight;
    if (s == "content") return LabelKind::Content;
    if (s == "objectId" || s == "object-id" || s == "identity") return LabelKind::ObjectId;
    throw Error(ErrorCode::UnknownLabel, std::string(s));
}

std::string object_label(const ObjectDescriptor& object, LabelKind kind) {
    switch (kind) {
        case LabelKind::Weight: return std::string(to_string(object.weight));
        case LabelKind::Content: return std::string(to_string(object.content));
        case LabelKind::ObjectId: return object.id;
    }
    throw Error(ErrorCode::UnknownLabel, "label kind");
}

Eigen::MatrixXd stack_features(std::span<const TrialRecord> records) {
    if (records.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), records.front().feature.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].feature.size() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "ragged feature rows");
        m.row(static_cast<Eigen::Index>(i)) = records[i].feature.transpose();
    }
    return m;
}

Eigen::MatrixXd CorrespondenceSet::source_matrix() const {
    if (pairs.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pairs.size()), source.front().feature.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = source[pairs[i].source].feature.transpose();
    return m;
}

Eigen::MatrixXd CorrespondenceSet::target_matrix() const {
    if (pairs.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pairs.size()), target.front().feature.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = target[pairs[i].target].feature.transpose();
    return m;
}

CorrespondenceSet identity_pairs(std::span<const TrialRecord> source, std::span<const TrialRecord> target) {
    auto set = build_pairs(source, target, [](const TrialRecord& r) { return r.object; });
    set.mode = PairMode::Identity;
    set.property = LabelKind::ObjectId;
    return set;
}

CorrespondenceSet property_pairs(std::span<const TrialRecord> source, std::span<const TrialRecord> target,
                                 LabelKind property, const ObjectCatalog& catalog) {
    if (property == LabelKind::ObjectId) {
        throw Error(ErrorCode::InvalidArgument, "property pairing needs weight or content");
    }
    auto set = build_pairs(source, target, [&](const TrialRecord& r) {
        if (!catalog.contains(r.object)) throw Error(ErrorCode::UnknownLabel, "object '" + r.object + "'");
        return object_label(catalog.at(r.object), property);
    });
    set.mode = PairMode::Property;
    set.property = property;
    return set;
}

KemaInputs kema_inputs(std::span<const TrialRecord> source, std::span<const TrialRecord> target, LabelKind label,
                       const ObjectCatalog& catalog) {
    check_contexts(source, target);
    auto label_of = [&](const TrialRecord& r) {
        if (!catalog.contains(r.object)) throw Error(ErrorCode::UnknownLabel, "object '" + r.object + "'");
        return object_label(catalog.at(r.object), label);
    };
    std::set<std::string> names;
    for (const auto& r : source) names.insert(label_of(r));
    for (const auto& r : target) names.insert(label_of(r));

    KemaInputs in;
    in.classes.assign(names.begin(), names.end());
    auto index_of = [&](const std::string& name) {
        return static_cast<int>(std::lower_bound(in.classes.begin(), in.classes.end(), name) - in.classes.begin());
    };
    in.x1 = stack_features(source);
    in.x2 = stack_features(target);
    for (const auto& r : source) in.y1.push_back(index_of(label_of(r)));
    for (const auto& r : target) in.y2.push_back(index_of(label_of(r)));
    return in;
}

}  // namespace xmorph
