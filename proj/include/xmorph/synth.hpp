#pragma once

#include "xmorph/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace xmorph {

struct SynthRobot {
    std::string name;
    int effort_joints = 7;
    double noise_sigma = 0.1;  // isotropic observation noise in feature space
};

// Objects are drawn in a fixed order (color outer, then content/weight), so
// a count of 19 or more covers every content/weight combination.
struct SynthConfig {
    int latent_dim = 3;
    int objects = 95;
    int trials_per_object = 5;
    std::vector<SynthRobot> robots{{"baxter", 7, 0.1}, {"ur5", 6, 0.1}};
    std::vector<Behavior> behaviors{Behavior::Look, Behavior::Grasp, Behavior::Pick, Behavior::Hold,
                                    Behavior::Shake, Behavior::Lower, Behavior::Drop, Behavior::Push};
    std::vector<Modality> modalities{Modality::Audio, Modality::Effort, Modality::Force};
    // Latent units: per-trial noise has unit std; adjacent weight levels and
    // any two contents sit `class_separation` apart.
    double class_separation = 4.0;
    double object_sigma = 1.0;  // per-object latent offset
    double max_condition = 10.0;  // singular values of each map lie in [1, max_condition]
    double bias_scale = 1.0;
    std::uint64_t seed = 0;
};

// Ground truth kept alongside the generated records.
struct SynthTruth {
    Eigen::MatrixXd weight_means;   // 4 x latent (empty, 50g, 100g, 150g)
    Eigen::MatrixXd content_means;  // 7 x latent, Content enum order
    std::map<std::string, Eigen::VectorXd> object_means;  // latent, per object id
    // Per "robot/behavior-modality": x = map * z + bias + noise.
    std::map<std::string, Eigen::MatrixXd> maps;
    std::map<std::string, Eigen::VectorXd> biases;
};

struct SynthDataset {
    DatasetManifest manifest;
    SynthTruth truth;
};

// Canonical 95-object catalog (5 colors x (6 contents x 3 weights + empty)).
std::vector<ObjectDescriptor> canonical_objects();

// Throws InvalidConfig.
SynthDataset synthesize(const SynthConfig& config);

// synthesize() and write_manifest() to `manifest_path`.
DatasetManifest generate_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& manifest_path);

std::string synth_map_key(const std::string& robot, Behavior behavior, Modality modality);

// Raw-signal mode for featurization checks: audio is a decaying chirp plus
// noise at `sample_rate`; effort/force are smooth multi-channel curves.
// Effort uses `channels` joints; force always has 3 axes.
Eigen::MatrixXd synth_raw_signal(Modality modality, int samples, int channels, double sample_rate, std::uint64_t seed);

}  // namespace xmorph
