#include "xmorph/dataset.hpp"

#include "xmorph/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace xmorph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    throw Error(ErrorCode::SchemaViolation, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Color>, 5> kColors{{
    {"blue", Color::Blue}, {"green", Color::Green}, {"red", Color::Red},
    {"white", Color::White}, {"yellow", Color::Yellow}}};

constexpr std::array<std::pair<std::string_view, Content>, 7> kContents{{
    {"buttons", Content::Buttons}, {"dices", Content::Dices}, {"marbles", Content::Marbles},
    {"nuts-bolts", Content::NutsBolts}, {"pasta", Content::Pasta}, {"rice", Content::Rice},
    {"empty", Content::Empty}}};

constexpr std::array<std::pair<std::string_view, Weight>, 8> kWeights{{
    {"empty", Weight::Empty}, {"50g", Weight::G50}, {"100g", Weight::G100}, {"150g", Weight::G150},
    {"g50", Weight::G50}, {"g100", Weight::G100}, {"g150", Weight::G150}, {"0g", Weight::Empty}}};

constexpr std::array<std::pair<std::string_view, Behavior>, 8> kBehaviors{{
    {"look", Behavior::Look}, {"grasp", Behavior::Grasp}, {"pick", Behavior::Pick},
    {"hold", Behavior::Hold}, {"shake", Behavior::Shake}, {"lower", Behavior::Lower},
    {"drop", Behavior::Drop}, {"push", Behavior::Push}}};

constexpr std::array<std::pair<std::string_view, Modality>, 3> kModalities{{
    {"audio", Modality::Audio}, {"effort", Modality::Effort}, {"force", Modality::Force}}};

constexpr std::array<std::pair<std::string_view, Provenance>, 2> kProvenances{{
    {"real", Provenance::Real}, {"augmented", Provenance::Augmented}}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& table) {
    for (const auto& [name, value] : table) {
        if (value == v) return name;
    }
    return "?";
}

const json& require(const json& node, const char* key, const std::string& where) {
    auto it = node.find(key);
    if (it == node.end()) {
        throw Error(ErrorCode::SchemaViolation, where + ": missing field '" + key + "'");
    }
    return *it;
}

std::string require_string(const json& node, const char* key, const std::string& where) {
    const json& v = require(node, key, where);
    if (!v.is_string()) throw Error(ErrorCode::SchemaViolation, where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

int require_int(const json& node, const char* key, const std::string& where) {
    const json& v = require(node, key, where);
    if (!v.is_number_integer()) {
        throw Error(ErrorCode::SchemaViolation, where + ": field '" + key + "' must be an integer");
    }
    return v.get<int>();
}

std::vector<std::string> require_string_list(const json& node, const char* key, const std::string& where) {
    const json& v = require(node, key, where);
    if (!v.is_array()) throw Error(ErrorCode::SchemaViolation, where + ": field '" + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw Error(ErrorCode::SchemaViolation, where + ": '" + key + "' entries must be strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::string feature_file_name(const TrialRecord& r) {
    return "features/" + r.context.robot + "/" + std::string(to_string(r.context.behavior)) + "-" +
           std::string(to_string(r.context.modality)) + "/" + r.object + ".csv";
}

auto record_order_key(const TrialRecord& r) {
    return std::tie(r.object, r.trial, r.context.robot, r.context.behavior, r.context.modality);
}

}  // namespace

std::string_view to_string(Color v) { return name_of(v, kColors); }
std::string_view to_string(Content v) { return name_of(v, kContents); }
std::string_view to_string(Weight v) { return name_of(v, kWeights); }
std::string_view to_string(Behavior v) { return name_of(v, kBehaviors); }
std::string_view to_string(Modality v) { return name_of(v, kModalities); }
std::string_view to_string(Provenance v) { return name_of(v, kProvenances); }

Color parse_color(std::string_view s) { return parse_enum(s, kColors, "color"); }
Content parse_content(std::string_view s) { return parse_enum(s, kContents, "content"); }
Weight parse_weight(std::string_view s) { return parse_enum(s, kWeights, "weight"); }
Behavior parse_behavior(std::string_view s) { return parse_enum(s, kBehaviors, "behavior"); }
Modality parse_modality(std::string_view s) { return parse_enum(s, kModalities, "modality"); }
Provenance parse_provenance(std::string_view s) { return parse_enum(s, kProvenances, "provenance"); }

int feature_dim(Modality modality, int effort_joints) {
    switch (modality) {
        case Modality::Audio: return kAudioFeatureDim;
        case Modality::Force: return kForceFeatureDim;
        case Modality::Effort: return effort_joints * kTemporalBins;
    }
    return 0;
}

std::string SensorimotorContext::name() const {
    return std::string(to_string(behavior)) + "-" + std::string(to_string(modality));
}

bool TrialRecord::operator==(const TrialRecord& other) const {
    return object == other.object && context == other.context && trial == other.trial &&
           provenance == other.provenance && feature.size() == other.feature.size() &&
           feature == other.feature;
}

std::string trial_key(const TrialRecord& record) {
    return record.object + "#" + std::to_string(record.trial);
}

ObjectCatalog::ObjectCatalog(const std::vector<ObjectDescriptor>& objects) {
    for (const auto& o : objects) by_id_.emplace(o.id, o);
}

const ObjectDescriptor& ObjectCatalog::at(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error(ErrorCode::UnknownName, "object '" + id + "'");
    return it->second;
}

std::int64_t DatasetManifest::interaction_count() const {
    std::int64_t total = 0;
    for (const auto& r : robots) {
        total += static_cast<std::int64_t>(r.behaviors.size()) * static_cast<std::int64_t>(objects.size()) *
                 r.trials_per_object;
    }
    return total;
}

const RobotDescriptor& DatasetManifest::robot(const std::string& name) const {
    for (const auto& r : robots) {
        if (r.name == name) return r;
    }
    throw Error(ErrorCode::UnknownName, "robot '" + name + "'");
}

SensorimotorContext DatasetManifest::context(const std::string& robot_name, Behavior behavior,
                                             Modality modality) const {
    const auto& r = robot(robot_name);
    if (std::find(r.behaviors.begin(), r.behaviors.end(), behavior) == r.behaviors.end()) {
        throw Error(ErrorCode::UnknownName, "robot '" + robot_name + "' has no behavior '" +
                                                std::string(to_string(behavior)) + "'");
    }
    if (std::find(r.modalities.begin(), r.modalities.end(), modality) == r.modalities.end()) {
        throw Error(ErrorCode::UnknownName, "robot '" + robot_name + "' has no modality '" +
                                                std::string(to_string(modality)) + "'");
    }
    return SensorimotorContext{r.name, behavior, modality, feature_dim(modality, r.effort_joints)};
}

std::vector<std::pair<Behavior, Modality>> DatasetManifest::shared_contexts(
    const std::vector<std::string>& robot_names) const {
    std::set<std::tuple<std::string, Behavior, Modality>> present;
    for (const auto& rec : records) {
        present.emplace(rec.context.robot, rec.context.behavior, rec.context.modality);
    }
    std::vector<std::pair<Behavior, Modality>> out;
    for (const auto& [name, b] : kBehaviors) {
        for (const auto& [mname, m] : kModalities) {
            bool all = !robot_names.empty();
            for (const auto& rn : robot_names) all = all && present.count({rn, b, m}) != 0;
            if (all) out.emplace_back(b, m);
        }
    }
    return out;
}

void validate_manifest(const DatasetManifest& manifest) {
    std::set<std::string> robot_names;
    for (const auto& r : manifest.robots) {
        if (!robot_names.insert(r.name).second) {
            throw Error(ErrorCode::SchemaViolation, "duplicate robot '" + r.name + "'");
        }
        if (r.trials_per_object < 1) {
            throw Error(ErrorCode::SchemaViolation, "robot '" + r.name + "': trials_per_object must be >= 1");
        }
        if (r.effort_joints < 1) {
            throw Error(ErrorCode::SchemaViolation, "robot '" + r.name + "': effort_joints must be >= 1");
        }
    }
    std::set<std::string> ids;
    for (const auto& o : manifest.objects) {
        if (!ids.insert(o.id).second) throw Error(ErrorCode::SchemaViolation, "duplicate object id '" + o.id + "'");
        if ((o.content == Content::Empty) != (o.weight == Weight::Empty)) {
            throw Error(ErrorCode::SchemaViolation,
                        "object '" + o.id + "': content is empty iff weight is empty");
        }
    }
    std::set<std::tuple<std::string, std::string, Behavior, Modality, int>> seen;
    for (const auto& rec : manifest.records) {
        if (!ids.count(rec.object)) throw Error(ErrorCode::SchemaViolation, "record references unknown object '" + rec.object + "'");
        const auto& robot = [&]() -> const RobotDescriptor& {
            try {
                return manifest.robot(rec.context.robot);
            } catch (const Error&) {
                throw Error(ErrorCode::SchemaViolation, "record references unknown robot '" + rec.context.robot + "'");
            }
        }();
        SensorimotorContext expected;
        try {
            expected = manifest.context(robot.name, rec.context.behavior, rec.context.modality);
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaViolation, e.what());
        }
        if (rec.context.behavior == Behavior::Look) {
            throw Error(ErrorCode::SchemaViolation, "behavior 'look' carries no non-visual features");
        }
        if (rec.context.feature_dim != expected.feature_dim ||
            rec.feature.size() != expected.feature_dim) {
            throw Error(ErrorCode::DimensionMismatch,
                        rec.object + " " + robot.name + "/" + rec.context.name() + ": expected " +
                            std::to_string(expected.feature_dim) + " values, got " +
                            std::to_string(rec.feature.size()));
        }
        if (rec.provenance == Provenance::Real &&
            (rec.trial < 0 || rec.trial >= robot.trials_per_object)) {
            throw Error(ErrorCode::SchemaViolation, "trial index " + std::to_string(rec.trial) +
                                                        " out of range for robot '" + robot.name + "'");
        }
        if (!rec.feature.allFinite()) {
            throw Error(ErrorCode::NonFiniteFeature, rec.object + " " + robot.name + "/" + rec.context.name());
        }
        if (!seen.emplace(rec.object, robot.name, rec.context.behavior, rec.context.modality, rec.trial).second) {
            throw Error(ErrorCode::SchemaViolation, "duplicate record for " + rec.object + " trial " +
                                                        std::to_string(rec.trial));
        }
    }
}

std::vector<std::vector<double>> read_feature_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) {
                throw Error(ErrorCode::SchemaViolation,
                            path.string() + ":" + std::to_string(line_no) + ": not a decimal number");
            }
            row.push_back(v);
            p = next;
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            if (p < end) {
                if (*p != ',') {
                    throw Error(ErrorCode::SchemaViolation,
                                path.string() + ":" + std::to_string(line_no) + ": expected ','");
                }
                ++p;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_feature_csv(const fs::path& path, const std::vector<Eigen::VectorXd>& rows) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    std::array<char, 64> buf{};
    for (const auto& row : rows) {
        for (Eigen::Index i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), row[i]);
            out.write(buf.data(), ptr - buf.data());
        }
        out << '\n';
    }
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, path.string() + ": top level must be an object");

    DatasetManifest m;
    const json& robots = require(doc, "robots", "manifest");
    if (!robots.is_array()) throw Error(ErrorCode::SchemaViolation, "'robots' must be an array");
    for (const auto& r : robots) {
        RobotDescriptor rd;
        rd.name = require_string(r, "name", "robot");
        for (const auto& b : require_string_list(r, "behaviors", "robot " + rd.name)) rd.behaviors.push_back(parse_behavior(b));
        for (const auto& mo : require_string_list(r, "modalities", "robot " + rd.name)) rd.modalities.push_back(parse_modality(mo));
        rd.trials_per_object = require_int(r, "trials_per_object", "robot " + rd.name);
        rd.effort_joints = r.contains("effort_joints") ? require_int(r, "effort_joints", "robot " + rd.name) : 7;
        m.robots.push_back(std::move(rd));
    }
    const json& objects = require(doc, "objects", "manifest");
    if (!objects.is_array()) throw Error(ErrorCode::SchemaViolation, "'objects' must be an array");
    for (const auto& o : objects) {
        ObjectDescriptor od;
        od.id = require_string(o, "id", "object");
        od.color = parse_color(require_string(o, "color", "object " + od.id));
        od.content = parse_content(require_string(o, "content", "object " + od.id));
        od.weight = parse_weight(require_string(o, "weight", "object " + od.id));
        m.objects.push_back(std::move(od));
    }

    const fs::path root = path.parent_path();
    std::map<std::string, std::vector<std::vector<double>>> csv_cache;
    const json& records = require(doc, "records", "manifest");
    if (!records.is_array()) throw Error(ErrorCode::SchemaViolation, "'records' must be an array");
    for (const auto& r : records) {
        TrialRecord rec;
        rec.object = require_string(r, "object", "record");
        const std::string robot = require_string(r, "robot", "record");
        const Behavior behavior = parse_behavior(require_string(r, "behavior", "record"));
        const Modality modality = parse_modality(require_string(r, "modality", "record"));
        rec.trial = require_int(r, "trial", "record");
        rec.file = require_string(r, "file", "record");
        rec.row = r.contains("row") ? require_int(r, "row", "record") : rec.trial;
        try {
            rec.context = m.context(robot, behavior, modality);
        } catch (const Error& e) {
            throw Error(ErrorCode::SchemaViolation, std::string("record: ") + e.what());
        }
        auto it = csv_cache.find(rec.file);
        if (it == csv_cache.end()) {
            const fs::path file = root / rec.file;
            if (!fs::exists(file)) throw Error(ErrorCode::MissingFile, file.string());
            it = csv_cache.emplace(rec.file, read_feature_csv(file)).first;
        }
        if (rec.row < 0 || rec.row >= static_cast<int>(it->second.size())) {
            throw Error(ErrorCode::SchemaViolation, rec.file + ": no row " + std::to_string(rec.row));
        }
        const auto& values = it->second[rec.row];
        if (static_cast<int>(values.size()) != rec.context.feature_dim) {
            throw Error(ErrorCode::DimensionMismatch,
                        rec.file + " row " + std::to_string(rec.row) + ": expected " +
                            std::to_string(rec.context.feature_dim) + " values, got " +
                            std::to_string(values.size()));
        }
        rec.feature = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        m.records.push_back(std::move(rec));
    }
    std::stable_sort(m.records.begin(), m.records.end(),
                     [](const TrialRecord& a, const TrialRecord& b) { return record_order_key(a) < record_order_key(b); });
    validate_manifest(m);
    return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
    const fs::path root = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::create_directories(root);

    json doc;
    doc["format"] = "xmorph-manifest/1";
    doc["robots"] = json::array();
    for (const auto& r : manifest.robots) {
        json jr;
        jr["name"] = r.name;
        jr["behaviors"] = json::array();
        for (auto b : r.behaviors) jr["behaviors"].push_back(std::string(to_string(b)));
        jr["modalities"] = json::array();
        for (auto mo : r.modalities) jr["modalities"].push_back(std::string(to_string(mo)));
        jr["trials_per_object"] = r.trials_per_object;
        jr["effort_joints"] = r.effort_joints;
        doc["robots"].push_back(std::move(jr));
    }
    doc["objects"] = json::array();
    for (const auto& o : manifest.objects) {
        doc["objects"].push_back({{"id", o.id},
                                  {"color", std::string(to_string(o.color))},
                                  {"content", std::string(to_string(o.content))},
                                  {"weight", std::string(to_string(o.weight))}});
    }

    // One CSV per (robot, behavior, modality, object); rows in trial order.
    std::map<std::string, std::vector<const TrialRecord*>> by_file;
    for (const auto& rec : manifest.records) {
        if (rec.provenance != Provenance::Real) continue;
        by_file[feature_file_name(rec)].push_back(&rec);
    }
    doc["records"] = json::array();
    for (auto& [file, recs] : by_file) {
        std::sort(recs.begin(), recs.end(), [](const TrialRecord* a, const TrialRecord* b) { return a->trial < b->trial; });
        std::vector<Eigen::VectorXd> rows;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            rows.push_back(recs[i]->feature);
            doc["records"].push_back({{"object", recs[i]->object},
                                      {"robot", recs[i]->context.robot},
                                      {"behavior", std::string(to_string(recs[i]->context.behavior))},
                                      {"modality", std::string(to_string(recs[i]->context.modality))},
                                      {"trial", recs[i]->trial},
                                      {"file", file},
                                      {"row", static_cast<int>(i)}});
        }
        write_feature_csv(root / file, rows);
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

std::vector<TrialRecord> select_trials(const DatasetManifest& manifest, const TrialFilter& filter) {
    if (filter.robot) manifest.robot(*filter.robot);
    auto declared = [&](auto pred) {
        return std::any_of(manifest.robots.begin(), manifest.robots.end(), pred);
    };
    if (filter.behavior && !declared([&](const RobotDescriptor& r) {
            return std::find(r.behaviors.begin(), r.behaviors.end(), *filter.behavior) != r.behaviors.end();
        })) {
        throw Error(ErrorCode::UnknownName, "behavior '" + std::string(to_string(*filter.behavior)) + "'");
    }
    if (filter.modality && !declared([&](const RobotDescriptor& r) {
            return std::find(r.modalities.begin(), r.modalities.end(), *filter.modality) != r.modalities.end();
        })) {
        throw Error(ErrorCode::UnknownName, "modality '" + std::string(to_string(*filter.modality)) + "'");
    }
    std::set<std::string> objects;
    if (filter.objects) {
        const ObjectCatalog catalog = manifest.catalog();
        for (const auto& id : *filter.objects) {
            if (!catalog.contains(id)) throw Error(ErrorCode::UnknownName, "object '" + id + "'");
            objects.insert(id);
        }
    }
    std::set<int> trials;
    if (filter.trials) trials.insert(filter.trials->begin(), filter.trials->end());

    std::vector<TrialRecord> out;
    for (const auto& rec : manifest.records) {
        if (filter.robot && rec.context.robot != *filter.robot) continue;
        if (filter.behavior && rec.context.behavior != *filter.behavior) continue;
        if (filter.modality && rec.context.modality != *filter.modality) continue;
        if (filter.objects && !objects.count(rec.object)) continue;
        if (filter.trials && !trials.count(rec.trial)) continue;
        if (filter.provenance && rec.provenance != *filter.provenance) continue;
        out.push_back(rec);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TrialRecord& a, const TrialRecord& b) { return record_order_key(a) < record_order_key(b); });
    return out;
}

}  // namespace xmorph
