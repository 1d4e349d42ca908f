#include "helpers.hpp"

#include "xmorph/correspond.hpp"
#include "xmorph/error.hpp"
#include "xmorph/synth.hpp"

#include <doctest.h>

#include <set>

using namespace xmorph;

namespace {

const SynthDataset& small_data() {
    static const SynthDataset data = [] {
        SynthConfig c;
        c.objects = 24;
        c.trials_per_object = 3;
        c.behaviors = {Behavior::Shake};
        c.modalities = {Modality::Force, Modality::Audio};
        return synthesize(c);
    }();
    return data;
}

std::vector<TrialRecord> pick(const std::string& robot, Modality m) {
    return select_trials(small_data().manifest, {robot, Behavior::Shake, m, {}, {}, {}});
}

}  // namespace

TEST_CASE("identity pairs are the per-object cross product") {
    const auto src = pick("baxter", Modality::Force);
    auto tgt = pick("ur5", Modality::Force);
    tgt.erase(tgt.begin(), tgt.begin() + 3);  // drop one object on the target side
    const auto set = identity_pairs(src, tgt);
    CHECK(set.size() == 23u * 3u * 3u);
    CHECK(set.mode == PairMode::Identity);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : set.pairs) {
        CHECK(set.source[p.source].object == set.target[p.target].object);
        seen.insert({trial_key(set.source[p.source]), trial_key(set.target[p.target])});
    }
    CHECK(seen.size() == set.size());
    CHECK(set.source.size() == 23u * 3u);
    CHECK(set.source_matrix().rows() == static_cast<Eigen::Index>(set.size()));
    CHECK(set.target_matrix().cols() == 30);
}

TEST_CASE("property pairs match the brute-force count") {
    const auto src = pick("baxter", Modality::Audio);
    const auto tgt = pick("ur5", Modality::Audio);
    const auto catalog = small_data().manifest.catalog();
    for (LabelKind kind : {LabelKind::Weight, LabelKind::Content}) {
        std::size_t expected = 0;
        for (const auto& s : src)
            for (const auto& t : tgt)
                expected += object_label(catalog.at(s.object), kind) == object_label(catalog.at(t.object), kind);
        const auto set = property_pairs(src, tgt, kind, catalog);
        CHECK(set.size() == expected);
        for (const auto& p : set.pairs) {
            CHECK(object_label(catalog.at(set.source[p.source].object), kind) ==
                  object_label(catalog.at(set.target[p.target].object), kind));
        }
    }
    CHECK_THROWS_AS(property_pairs(src, tgt, LabelKind::ObjectId, catalog), Error);
}

TEST_CASE("pairing rejects mixed contexts") {
    auto src = pick("baxter", Modality::Force);
    const auto audio = pick("baxter", Modality::Audio);
    src.push_back(audio.front());
    try {
        identity_pairs(src, pick("ur5", Modality::Force));
        FAIL("expected ContextMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ContextMismatch);
    }
}

TEST_CASE("kema inputs share one sorted class list") {
    const auto src = pick("baxter", Modality::Audio);
    const auto tgt = pick("ur5", Modality::Audio);
    const auto catalog = small_data().manifest.catalog();
    const auto in = kema_inputs(src, tgt, LabelKind::Weight, catalog);
    CHECK(in.classes == std::vector<std::string>{"100g", "150g", "50g", "empty"});
    CHECK(in.x1.rows() == static_cast<Eigen::Index>(src.size()));
    CHECK(in.x2.cols() == 100);
    CHECK_THROWS_AS(kema_inputs(src, pick("ur5", Modality::Force), LabelKind::Weight, catalog), Error);
    for (std::size_t i = 0; i < src.size(); ++i) {
        CHECK(in.classes[in.y1[i]] == object_label(catalog.at(src[i].object), LabelKind::Weight));
    }
    const auto ids = kema_inputs(src, tgt, LabelKind::ObjectId, catalog);
    CHECK(ids.classes.size() == 24);
}

TEST_CASE("label kinds") {
    const ObjectDescriptor o{"red-rice-50g", Color::Red, Content::Rice, Weight::G50};
    CHECK(object_label(o, LabelKind::Weight) == "50g");
    CHECK(object_label(o, LabelKind::Content) == "rice");
    CHECK(object_label(o, LabelKind::ObjectId) == "red-rice-50g");
    CHECK(parse_label_kind("content") == LabelKind::Content);
    CHECK(parse_label_kind(to_string(LabelKind::ObjectId)) == LabelKind::ObjectId);
    CHECK_THROWS_AS(parse_label_kind("colour"), Error);
}
