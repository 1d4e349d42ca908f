#pragma once

#include "xmorph/correspond.hpp"
#include "xmorph/dataset.hpp"
#include "xmorph/edn.hpp"
#include "xmorph/kema.hpp"
#include "xmorph/svm.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace xmorph {

enum class Method { Baseline, EdnIdentity, EdnProperty, KemaIdentity, KemaProperty };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

bool uses_edn(Method m);
bool uses_kema(Method m);

// 100 * matches / total. Throws EmptyInput, DimensionMismatch.
double accuracy(std::span<const int> predictions, std::span<const int> truths);

// Mean of (a_all - projected[j]) over the first m budgets. Throws TooFewBudgets.
double mean_accuracy_delta(double a_all, std::span<const double> projected, int m);

// Scores are n x classes; weights are training accuracies (any non-negative
// scale). Each score row is divided by its largest magnitude before
// weighting; argmax ties go to the lower class index.
std::vector<int> weighted_context_combination(const std::map<std::string, Eigen::MatrixXd>& scores,
                                              const std::map<std::string, double>& train_accuracy);

struct ProtocolConfig {
    LabelKind task = LabelKind::Weight;
    Method method = Method::KemaIdentity;
    std::string source = "baxter";
    std::string target = "ur5";
    // Empty: every behavior/modality pair both robots share.
    std::vector<std::pair<Behavior, Modality>> contexts;
    int repeats = 10;
    int folds = 5;                 // identity task: trials held out one per fold
    std::vector<int> budgets;      // empty: default schedule for the task
    int budget_stride = 1;         // keep every n-th default budget
    int m = 0;                     // 0: 10 for property tasks, 4 for identity
    int test_objects = 19;
    int identity_objects = 12;
    // Property used by property-pair methods on the identity task.
    LabelKind identity_pair_property = LabelKind::Content;
    int augment_k = 5;             // 0 disables augmentation
    int weight_cv_folds = 3;
    SvmConfig svm;
    EdnConfig edn;
    KemaConfig kema;
    int jobs = 1;
    std::uint64_t seed = 0;
};

// Property task: one object per class, then 10 evenly spaced budgets up to
// `pool`. Identity task: 1 .. trials-1 trials per object.
std::vector<int> default_budgets(LabelKind task, int classes, int pool, int trials);

// Target-robot trial keys ("object#trial") touched by one training run.
struct FoldAudit {
    int repeat = 0;
    int fold = 0;
    int budget = 0;
    std::string condition;
    std::set<std::string> test;
    std::set<std::string> train;
    std::set<std::string> projection;
    std::set<std::string> augmentation;

    // True when no training, projection, or augmentation key is a test key.
    bool leak_free() const;
};

struct AccuracyRow {
    int repeat = 0;
    int budget = 0;
    std::string condition;  // baseline, transfer, reference
    double accuracy = 0.0;
};

struct WeightRow {
    int repeat = 0;
    int fold = 0;
    int budget = 0;
    std::string condition;
    std::string context;
    double weight = 0.0;
};

struct EvaluationReport {
    LabelKind task = LabelKind::Weight;
    Method method = Method::Baseline;
    std::string source, target;
    std::vector<int> budgets;
    int reference_budget = 0;  // objects (property) or trials (identity) behind A_all
    int m = 0;
    std::vector<std::string> contexts;
    std::vector<AccuracyRow> rows;
    std::vector<WeightRow> weights;
    std::vector<FoldAudit> audits;

    // Per-budget mean and std over repeats of one condition.
    std::pair<std::vector<double>, std::vector<double>> curve(const std::string& condition) const;
    double reference_mean() const;
    double reference_std() const;
    // mean_accuracy_delta over the repeat-mean curve of `condition`.
    double mda(const std::string& condition) const;
};

// Throws BudgetExceedsPool, UnknownName, and anything the learners raise.
EvaluationReport run_property_protocol(const DatasetManifest& manifest, const ProtocolConfig& config);
// Throws InsufficientUniqueObjects, InvalidConfig.
EvaluationReport run_identity_protocol(const DatasetManifest& manifest, const ProtocolConfig& config);
// Dispatches on config.task.
EvaluationReport run_protocol(const DatasetManifest& manifest, const ProtocolConfig& config);

// report.csv: task,method,repeat,budget,condition,accuracy
void write_report_csv(const EvaluationReport& report, const std::filesystem::path& path);
void write_weights_csv(const EvaluationReport& report, const std::filesystem::path& path);
nlohmann::json summary_json(const EvaluationReport& report);

struct ReportRow {
    std::string task;
    std::string method;
    int repeat = 0;
    int budget = 0;
    std::string condition;
    double accuracy = 0.0;
};
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace xmorph
