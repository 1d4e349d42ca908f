#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xmorph {

enum class Color { Blue, Green, Red, White, Yellow };
enum class Content { Buttons, Dices, Marbles, NutsBolts, Pasta, Rice, Empty };
enum class Weight { Empty, G50, G100, G150 };
// `Look` is non-interactive: it counts toward the interaction bookkeeping but
// carries no audio/effort/force features.
enum class Behavior { Look, Grasp, Pick, Hold, Shake, Lower, Drop, Push };
enum class Modality { Audio, Effort, Force };
enum class Provenance { Real, Augmented };

std::string_view to_string(Color v);
std::string_view to_string(Content v);
std::string_view to_string(Weight v);
std::string_view to_string(Behavior v);
std::string_view to_string(Modality v);
std::string_view to_string(Provenance v);

// Parsers throw Error(SchemaViolation) on values outside the closed sets.
Color parse_color(std::string_view s);
Content parse_content(std::string_view s);
Weight parse_weight(std::string_view s);
Behavior parse_behavior(std::string_view s);
Modality parse_modality(std::string_view s);
Provenance parse_provenance(std::string_view s);

inline constexpr int kTemporalBins = 10;
inline constexpr int kAudioFeatureDim = 100;
inline constexpr int kForceFeatureDim = 30;

// Feature width of a modality; effort depends on the robot's joint count.
int feature_dim(Modality modality, int effort_joints);

struct ObjectDescriptor {
    std::string id;
    Color color = Color::Blue;
    Content content = Content::Empty;
    Weight weight = Weight::Empty;

    bool operator==(const ObjectDescriptor&) const = default;
};

struct RobotDescriptor {
    std::string name;
    std::vector<Behavior> behaviors;
    std::vector<Modality> modalities;
    int trials_per_object = 5;
    int effort_joints = 7;

    bool operator==(const RobotDescriptor&) const = default;
};

struct SensorimotorContext {
    std::string robot;
    Behavior behavior = Behavior::Grasp;
    Modality modality = Modality::Audio;
    int feature_dim = 0;

    auto operator<=>(const SensorimotorContext&) const = default;
    bool operator==(const SensorimotorContext&) const = default;

    // "shake-audio" (robot omitted).
    std::string name() const;
};

struct TrialRecord {
    std::string object;
    SensorimotorContext context;
    int trial = 0;
    Eigen::VectorXd feature;
    Provenance provenance = Provenance::Real;
    // Location in the feature CSV this record was read from; empty for
    // in-memory or augmented records.
    std::string file;
    int row = 0;

    bool operator==(const TrialRecord& other) const;
};

// Lookup of object descriptors by id.
class ObjectCatalog {
public:
    ObjectCatalog() = default;
    explicit ObjectCatalog(const std::vector<ObjectDescriptor>& objects);

    const ObjectDescriptor& at(const std::string& id) const;
    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }

private:
    std::map<std::string, ObjectDescriptor> by_id_;
};

struct DatasetManifest {
    std::vector<RobotDescriptor> robots;
    std::vector<ObjectDescriptor> objects;
    std::vector<TrialRecord> records;

    std::int64_t interaction_count() const;
    const RobotDescriptor& robot(const std::string& name) const;
    ObjectCatalog catalog() const { return ObjectCatalog(objects); }
    SensorimotorContext context(const std::string& robot, Behavior behavior, Modality modality) const;
    // Behavior/modality pairs that carry features for every listed robot.
    std::vector<std::pair<Behavior, Modality>> shared_contexts(const std::vector<std::string>& robot_names) const;

    bool operator==(const DatasetManifest&) const = default;
};

// Throws MissingFile, SchemaViolation, DimensionMismatch, NonFiniteFeature.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes `path` plus one feature CSV per (robot, behavior, modality, object)
// under features/ next to it. Only real records are written.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Checks the structural invariants (unique ids, content/weight pairing,
// context dims, trial bounds). Throws SchemaViolation/DimensionMismatch.
void validate_manifest(const DatasetManifest& manifest);

struct TrialFilter {
    std::optional<std::string> robot;
    std::optional<Behavior> behavior;
    std::optional<Modality> modality;
    std::optional<std::vector<std::string>> objects;
    std::optional<std::vector<int>> trials;
    std::optional<Provenance> provenance;
};

// Records matching every set field, ordered by (object id, trial, robot,
// behavior, modality). Throws UnknownName for names absent from the manifest.
std::vector<TrialRecord> select_trials(const DatasetManifest& manifest, const TrialFilter& filter);

// Reads a headerless CSV of decimal floats, one vector per line.
std::vector<std::vector<double>> read_feature_csv(const std::filesystem::path& path);
void write_feature_csv(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& rows);

// Stable key "object#trial" used for leakage audits.
std::string trial_key(const TrialRecord& record);

}  // namespace xmorph
