#include "xmorph/eval.hpp"

#include "xmorph/augment.hpp"
#include "xmorph/error.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace xmorph {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Baseline: return "baseline";
        case Method::EdnIdentity: return "edn-identity";
        case Method::EdnProperty: return "edn-property";
        case Method::KemaIdentity: return "kema-identity";
        case Method::KemaProperty: return "kema-property";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    for (Method m : {Method::Baseline, Method::EdnIdentity, Method::EdnProperty, Method::KemaIdentity,
                     Method::KemaProperty}) {
        if (s == to_string(m)) return m;
    }
    throw Error(ErrorCode::UnknownName, "method '" + std::string(s) + "'");
}

bool uses_edn(Method m) { return m == Method::EdnIdentity || m == Method::EdnProperty; }
bool uses_kema(Method m) { return m == Method::KemaIdentity || m == Method::KemaProperty; }

double accuracy(std::span<const int> predictions, std::span<const int> truths) {
    if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "no predictions");
    if (predictions.size() != truths.size()) {
        throw Error(ErrorCode::DimensionMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                                      std::to_string(truths.size()) + " truths");
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) hit += predictions[i] == truths[i] ? 1 : 0;
    return 100.0 * static_cast<double>(hit) / static_cast<double>(predictions.size());
}

double mean_accuracy_delta(double a_all, std::span<const double> projected, int m) {
    if (m < 1 || projected.size() < static_cast<std::size_t>(m)) {
        throw Error(ErrorCode::TooFewBudgets,
                    "m=" + std::to_string(m) + " with " + std::to_string(projected.size()) + " budgets");
    }
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += a_all - projected[static_cast<std::size_t>(j)];
    return sum / m;
}

std::vector<int> weighted_context_combination(const std::map<std::string, Eigen::MatrixXd>& scores,
                                              const std::map<std::string, double>& train_accuracy) {
    if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no contexts");
    const Eigen::Index rows = scores.begin()->second.rows(), cols = scores.begin()->second.cols();
    double total = 0.0;
    for (const auto& [name, s] : scores) {
        if (s.rows() != rows || s.cols() != cols) {
            throw Error(ErrorCode::InconsistentClassSets, "context '" + name + "' score shape differs");
        }
        const auto it = train_accuracy.find(name);
        if (it == train_accuracy.end()) throw Error(ErrorCode::UnknownName, "no weight for context '" + name + "'");
        if (!(it->second >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative weight for '" + name + "'");
        total += it->second;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::AllZeroWeights, "every context weight is zero");

    Eigen::MatrixXd combined = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& [name, s] : scores) {
        const double w = train_accuracy.at(name) / total;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double peak = s.row(r).cwiseAbs().maxCoeff();
            if (peak > 0.0) combined.row(r) += (w / peak) * s.row(r);
        }
    }
    std::vector<int> out(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < cols; ++c) {
            if (combined(r, c) > combined(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

namespace {

std::vector<int> thin(const std::vector<int>& budgets, int stride) {
    if (stride < 1) throw Error(ErrorCode::InvalidConfig, "budget_stride must be >= 1");
    std::vector<int> out;
    for (std::size_t i = 0; i < budgets.size(); i += static_cast<std::size_t>(stride)) out.push_back(budgets[i]);
    return out;
}

}  // namespace

std::vector<int> default_budgets(LabelKind task, int classes, int pool, int trials) {
    std::vector<int> out;
    if (task == LabelKind::ObjectId) {
        for (int b = 1; b < trials; ++b) out.push_back(b);
        return out;
    }
    out.push_back(classes);
    for (int i = 1; i <= 10; ++i) {
        const int b = static_cast<int>(std::lround(classes + i * (pool - classes) / 10.0));
        if (b > out.back()) out.push_back(b);
    }
    return out;
}

bool FoldAudit::leak_free() const {
    for (const auto* keys : {&train, &projection, &augmentation}) {
        for (const auto& k : *keys) {
            if (test.count(k)) return false;
        }
    }
    return true;
}

namespace {

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> EvaluationReport::curve(const std::string& condition) const {
    std::vector<double> mean, sd;
    for (int b : budgets) {
        std::vector<double> v;
        for (const auto& r : rows) {
            if (r.condition == condition && r.budget == b) v.push_back(r.accuracy);
        }
        mean.push_back(mean_of(v));
        sd.push_back(std_of(v));
    }
    return {mean, sd};
}

double EvaluationReport::reference_mean() const {
    std::vector<double> v;
    for (const auto& r : rows) {
        if (r.condition == "reference") v.push_back(r.accuracy);
    }
    return mean_of(v);
}

double EvaluationReport::reference_std() const {
    std::vector<double> v;
    for (const auto& r : rows) {
        if (r.condition == "reference") v.push_back(r.accuracy);
    }
    return std_of(v);
}

double EvaluationReport::mda(const std::string& condition) const {
    const auto means = curve(condition).first;
    return mean_accuracy_delta(reference_mean(), means, m);
}

namespace {

// Fisher-Yates on a raw 64-bit stream so orderings do not depend on the
// standard library's distribution implementations.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

std::string key_of(const std::string& object, int trial) { return object + "#" + std::to_string(trial); }

struct ContextTables {
    std::string name;
    std::vector<TrialRecord> source;
    std::vector<TrialRecord> target;
};

struct Labeler {
    const ObjectCatalog* catalog = nullptr;
    LabelKind kind = LabelKind::Weight;
    std::vector<std::string> classes;
    std::map<std::string, int> index;

    Labeler(const ObjectCatalog& c, LabelKind k, std::vector<std::string> names)
        : catalog(&c), kind(k), classes(std::move(names)) {
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = static_cast<int>(i);
    }
    int operator()(const std::string& object) const {
        const auto it = index.find(object_label(catalog->at(object), kind));
        if (it == index.end()) throw Error(ErrorCode::UnknownLabel, "object '" + object + "' outside class set");
        return it->second;
    }
};

struct Setup {
    ObjectCatalog catalog;
    std::vector<ContextTables> contexts;
    std::vector<std::string> objects;  // sorted ids
    int target_trials = 0;
};

Setup prepare(const DatasetManifest& manifest, const ProtocolConfig& config) {
    Setup s;
    s.catalog = manifest.catalog();
    const auto& target = manifest.robot(config.target);
    manifest.robot(config.source);
    if (config.source == config.target) throw Error(ErrorCode::InvalidConfig, "source and target must differ");
    s.target_trials = target.trials_per_object;
    auto contexts = config.contexts.empty() ? manifest.shared_contexts({config.source, config.target})
                                            : config.contexts;
    if (contexts.empty()) throw Error(ErrorCode::EmptyInput, "robots share no sensorimotor context");
    for (const auto& [b, mod] : contexts) {
        ContextTables t;
        t.name = std::string(to_string(b)) + "-" + std::string(to_string(mod));
        TrialFilter f;
        f.behavior = b;
        f.modality = mod;
        f.provenance = Provenance::Real;
        f.robot = config.source;
        t.source = select_trials(manifest, f);
        f.robot = config.target;
        t.target = select_trials(manifest, f);
        if (t.source.empty() || t.target.empty()) {
            throw Error(ErrorCode::UnknownName, "context " + t.name + " missing for one robot");
        }
        s.contexts.push_back(std::move(t));
    }
    for (const auto& o : manifest.objects) s.objects.push_back(o.id);
    std::sort(s.objects.begin(), s.objects.end());
    return s;
}

// Training split of one run. Keys are target-robot trial keys.
struct Split {
    std::set<std::string> source_objects;
    std::set<std::string> train_keys;
    std::set<std::string> test_keys;
};

struct Classifier {
    std::optional<SvmModel> svm;
    int constant = 0;
};

Classifier fit_classifier(const Eigen::MatrixXd& x, const std::vector<int>& y, const SvmConfig& config) {
    Classifier c;
    if (std::set<int>(y.begin(), y.end()).size() < 2) {
        c.constant = y.front();
    } else {
        c.svm = train_svm(x, y, config);
    }
    return c;
}

Eigen::MatrixXd class_scores(const Classifier& c, const Eigen::MatrixXd& x, int classes) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), classes);
    if (!c.svm) {
        out.col(c.constant).setOnes();
        return out;
    }
    const Eigen::MatrixXd s = decision_scores(*c.svm, x);
    for (std::size_t k = 0; k < c.svm->classes.size(); ++k) {
        out.col(c.svm->classes[k]) = s.col(static_cast<Eigen::Index>(k));
    }
    return out;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& s) {
    std::vector<int> out(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < s.cols(); ++c) {
            if (s(r, c) > s(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

// Stratified k-fold accuracy on the training set itself.
double cv_accuracy(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, int folds,
                   const SvmConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(static_cast<int>(i));
    std::vector<int> fold_of(y.size());
    for (auto& [label, idx] : by_class) {
        seeded_shuffle(idx, rng);
        for (std::size_t p = 0; p < idx.size(); ++p) fold_of[static_cast<std::size_t>(idx[p])] = static_cast<int>(p) % folds;
    }
    std::vector<int> pred, truth;
    for (int f = 0; f < folds; ++f) {
        std::vector<int> tr, te;
        for (std::size_t i = 0; i < y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<int>(i));
        if (tr.empty() || te.empty()) continue;
        Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), x.cols()), xte(static_cast<Eigen::Index>(te.size()), x.cols());
        std::vector<int> ytr;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            xtr.row(static_cast<Eigen::Index>(i)) = x.row(tr[i]);
            ytr.push_back(y[static_cast<std::size_t>(tr[i])]);
        }
        for (std::size_t i = 0; i < te.size(); ++i) {
            xte.row(static_cast<Eigen::Index>(i)) = x.row(te[i]);
            truth.push_back(y[static_cast<std::size_t>(te[i])]);
        }
        const auto p = argmax_rows(class_scores(fit_classifier(xtr, ytr, config), xte, classes));
        pred.insert(pred.end(), p.begin(), p.end());
    }
    return pred.empty() ? 0.0 : accuracy(pred, truth);
}

std::vector<TrialRecord> filter_keys(const std::vector<TrialRecord>& all, const std::set<std::string>& keys) {
    std::vector<TrialRecord> out;
    for (const auto& r : all) {
        if (keys.count(trial_key(r))) out.push_back(r);
    }
    return out;
}

std::vector<TrialRecord> filter_objects(const std::vector<TrialRecord>& all, const std::set<std::string>& objects) {
    std::vector<TrialRecord> out;
    for (const auto& r : all) {
        if (objects.count(r.object)) out.push_back(r);
    }
    return out;
}

Eigen::MatrixXd vstack(const std::vector<Eigen::MatrixXd>& parts) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& p : parts) {
        if (p.rows() == 0) continue;
        if (cols != 0 && p.cols() != cols) throw Error(ErrorCode::DimensionMismatch, "stacking ragged blocks");
        cols = p.cols();
        rows += p.rows();
    }
    Eigen::MatrixXd out(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        if (p.rows() == 0) continue;
        out.middleRows(at, p.rows()) = p;
        at += p.rows();
    }
    return out;
}

struct ConditionOutput {
    std::vector<int> predictions;
    std::vector<int> truths;
    std::vector<std::string> test_keys;
    std::map<std::string, double> weights;
    FoldAudit audit;
};

LabelKind pair_property(const ProtocolConfig& config) {
    return config.task == LabelKind::ObjectId ? config.identity_pair_property : config.task;
}

ConditionOutput run_condition(const Setup& setup, const ProtocolConfig& config, const Labeler& labels,
                              Method method, const Split& split, std::uint64_t seed) {
    ConditionOutput out;
    out.audit.test = split.test_keys;
    const int classes = static_cast<int>(labels.classes.size());
    std::map<std::string, Eigen::MatrixXd> scores;
    std::map<std::string, double> weights;

    for (const auto& ctx : setup.contexts) {
        const std::uint64_t ctx_seed = derive_seed(seed, ctx.name);
        const auto target_train = filter_keys(ctx.target, split.train_keys);
        const auto test = filter_keys(ctx.target, split.test_keys);
        if (target_train.empty()) throw Error(ErrorCode::EmptyInput, "no target training trials in " + ctx.name);
        if (test.empty()) throw Error(ErrorCode::EmptyInput, "no test trials in " + ctx.name);
        std::vector<TrialRecord> augmented;
        if (config.augment_k > 0) {
            augmented = augment_trials(target_train, config.augment_k, derive_seed(ctx_seed, "augment"));
            for (const auto& r : target_train) out.audit.augmentation.insert(trial_key(r));
        }
        for (const auto& r : target_train) out.audit.train.insert(trial_key(r));

        std::vector<int> ytrain, ytest;
        std::vector<std::string> keys;
        for (const auto& r : test) {
            ytest.push_back(labels(r.object));
            keys.push_back(trial_key(r));
        }
        if (out.test_keys.empty()) {
            out.test_keys = keys;
            out.truths = ytest;
        } else if (keys != out.test_keys) {
            throw Error(ErrorCode::DimensionMismatch, "contexts cover different test trials");
        }

        Eigen::MatrixXd xtrain, xtest;
        if (method == Method::Baseline) {
            xtrain = vstack({stack_features(target_train), stack_features(augmented)});
            for (const auto& r : target_train) ytrain.push_back(labels(r.object));
            for (const auto& r : augmented) ytrain.push_back(labels(r.object));
            xtest = stack_features(test);
        } else {
            const auto source = filter_objects(ctx.source, split.source_objects);
            for (const auto& r : source) ytrain.push_back(labels(r.object));
            for (const auto& r : target_train) ytrain.push_back(labels(r.object));
            for (const auto& r : augmented) ytrain.push_back(labels(r.object));
            if (uses_edn(method)) {
                const CorrespondenceSet pairs = method == Method::EdnIdentity
                                                    ? identity_pairs(source, target_train)
                                                    : property_pairs(source, target_train, pair_property(config),
                                                                     setup.catalog);
                for (const auto& r : pairs.target) out.audit.projection.insert(trial_key(r));
                EdnConfig ecfg = config.edn;
                ecfg.seed = derive_seed(ctx_seed, "edn");
                const EdnModel net = train_edn(pairs, ecfg);
                xtrain = vstack({edn_forward(net, stack_features(source)), stack_features(target_train),
                                 stack_features(augmented)});
                xtest = stack_features(test);
            } else {
                const LabelKind align_label =
                    method == Method::KemaIdentity ? LabelKind::ObjectId : pair_property(config);
                const KemaInputs inputs = kema_inputs(source, target_train, align_label, setup.catalog);
                for (const auto& r : target_train) out.audit.projection.insert(trial_key(r));
                KemaConfig kcfg = config.kema;
                kcfg.seed = derive_seed(ctx_seed, "kema");
                const KemaModel model = fit_kema(inputs, kcfg);
                Eigen::MatrixXd z1 = project_to_latent(model, inputs.x1, 1);
                Eigen::MatrixXd z2 = project_to_latent(model, inputs.x2, 2);
                Eigen::MatrixXd zaug, ztest = project_to_latent(model, stack_features(test), 2);
                if (!augmented.empty()) zaug = project_to_latent(model, stack_features(augmented), 2);
                if (kcfg.standardize) {
                    const std::set<int> shared(inputs.y2.begin(), inputs.y2.end());
                    const LatentScaler s1 = fit_latent_scaler(z1, inputs.y1, shared);
                    const LatentScaler s2 = fit_latent_scaler(z2, inputs.y2, shared);
                    z1 = s1.apply(z1);
                    z2 = s2.apply(z2);
                    ztest = s2.apply(ztest);
                    if (!augmented.empty()) zaug = s2.apply(zaug);
                }
                xtrain = vstack({z1, z2, zaug});
                xtest = ztest;
            }
        }
        if (!xtrain.allFinite() || !xtest.allFinite()) {
            throw Error(ErrorCode::NonFiniteFeature, "classifier inputs for " + ctx.name);
        }

        SvmConfig scfg = config.svm;
        scfg.seed = derive_seed(ctx_seed, "svm");
        const Classifier clf = fit_classifier(xtrain, ytrain, scfg);
        scores[ctx.name] = class_scores(clf, xtest, classes);
        weights[ctx.name] = setup.contexts.size() == 1
                                ? 1.0
                                : cv_accuracy(xtrain, ytrain, classes, config.weight_cv_folds, scfg,
                                              derive_seed(ctx_seed, "cv"));
    }
    double total = 0.0;
    for (const auto& [_, w] : weights) total += w;
    if (total <= 0.0) {
        for (auto& [_, w] : weights) w = 1.0;
        total = static_cast<double>(weights.size());
    }
    for (const auto& [name, w] : weights) out.weights[name] = w / total;
    out.predictions = weighted_context_combination(scores, weights);
    return out;
}

// Runs body(r) for r in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename F>
void parallel_for(int n, int jobs, F body) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int r = 0; r < n; ++r) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (int r = next++; r < n; r = next++) {
                try {
                    body(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct RepeatResult {
    std::vector<AccuracyRow> rows;
    std::vector<WeightRow> weights;
    std::vector<FoldAudit> audits;
};

void record_weights(RepeatResult& res, const ConditionOutput& out, int repeat, int fold, int budget,
                    const std::string& condition) {
    for (const auto& [ctx, w] : out.weights) res.weights.push_back({repeat, fold, budget, condition, ctx, w});
}

EvaluationReport make_report(const ProtocolConfig& config, const Setup& setup, std::vector<int> budgets, int m,
                             int reference_budget, std::vector<RepeatResult>& results) {
    EvaluationReport report;
    report.task = config.task;
    report.method = config.method;
    report.source = config.source;
    report.target = config.target;
    report.budgets = std::move(budgets);
    report.m = m;
    report.reference_budget = reference_budget;
    for (const auto& c : setup.contexts) report.contexts.push_back(c.name);
    for (auto& r : results) {
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
        report.weights.insert(report.weights.end(), r.weights.begin(), r.weights.end());
        for (auto& a : r.audits) report.audits.push_back(std::move(a));
    }
    return report;
}

void check_budgets(const std::vector<int>& budgets, int pool) {
    if (budgets.empty()) throw Error(ErrorCode::InvalidConfig, "empty budget schedule");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (budgets[i] < 1) throw Error(ErrorCode::InvalidConfig, "budgets must be >= 1");
        if (i > 0 && budgets[i] <= budgets[i - 1]) throw Error(ErrorCode::InvalidConfig, "budgets must ascend");
        if (budgets[i] > pool) {
            throw Error(ErrorCode::BudgetExceedsPool,
                        "budget " + std::to_string(budgets[i]) + " > pool of " + std::to_string(pool));
        }
    }
}

}  // namespace

EvaluationReport run_property_protocol(const DatasetManifest& manifest, const ProtocolConfig& config) {
    if (config.task == LabelKind::ObjectId) throw Error(ErrorCode::InvalidConfig, "property protocol needs weight or content");
    if (config.repeats < 1) throw Error(ErrorCode::InvalidConfig, "repeats must be >= 1");
    const Setup setup = prepare(manifest, config);
    const int n_objects = static_cast<int>(setup.objects.size());
    if (config.test_objects < 1 || config.test_objects >= n_objects) {
        throw Error(ErrorCode::InvalidConfig, "test_objects must leave a training pool");
    }
    const int pool = n_objects - config.test_objects;
    std::vector<std::string> names;
    for (const auto& id : setup.objects) names.push_back(object_label(setup.catalog.at(id), config.task));
    const Labeler labels(setup.catalog, config.task, names);
    const auto budgets = config.budgets.empty()
                             ? thin(default_budgets(config.task, static_cast<int>(labels.classes.size()), pool,
                                                    setup.target_trials),
                                    config.budget_stride)
                             : config.budgets;
    check_budgets(budgets, pool);
    const int m = config.m > 0 ? config.m : 10;
    if (static_cast<int>(budgets.size()) < m) {
        throw Error(ErrorCode::TooFewBudgets, std::to_string(budgets.size()) + " budgets for m=" + std::to_string(m));
    }

    auto keys_for = [&](const std::vector<std::string>& objects) {
        std::set<std::string> keys;
        for (const auto& o : objects) {
            for (int t = 0; t < setup.target_trials; ++t) keys.insert(key_of(o, t));
        }
        return keys;
    };

    std::vector<RepeatResult> results(static_cast<std::size_t>(config.repeats));
    parallel_for(config.repeats, config.jobs, [&](int r) {
        RepeatResult& res = results[static_cast<std::size_t>(r)];
        const std::uint64_t rseed = derive_seed(config.seed, "property#" + std::to_string(r));
        std::mt19937_64 rng(rseed);
        std::vector<std::string> ids = setup.objects;
        seeded_shuffle(ids, rng);
        const std::vector<std::string> test(ids.begin(), ids.begin() + config.test_objects);
        const std::vector<std::string> rest(ids.begin() + config.test_objects, ids.end());
        // One object per class first (in shuffled order), then the remainder.
        std::vector<std::string> order, tail;
        std::set<int> seen;
        for (const auto& o : rest) (seen.insert(labels(o)).second ? order : tail).push_back(o);
        order.insert(order.end(), tail.begin(), tail.end());

        Split split;
        split.source_objects.insert(setup.objects.begin(), setup.objects.end());
        split.test_keys = keys_for(test);

        // A_all: every object of the target robot.
        split.train_keys = keys_for(setup.objects);
        const auto ref = run_condition(setup, config, labels, Method::Baseline, split, derive_seed(rseed, "reference"));
        res.rows.push_back({r, n_objects, "reference", accuracy(ref.predictions, ref.truths)});
        record_weights(res, ref, r, 0, n_objects, "reference");

        for (int b : budgets) {
            split.train_keys = keys_for(std::vector<std::string>(order.begin(), order.begin() + b));
            std::vector<std::pair<std::string, Method>> conditions{{"baseline", Method::Baseline}};
            if (config.method != Method::Baseline) conditions.emplace_back("transfer", config.method);
            for (const auto& [name, method] : conditions) {
                auto out = run_condition(setup, config, labels, method, split,
                                         derive_seed(rseed, name + "#" + std::to_string(b)));
                res.rows.push_back({r, b, name, accuracy(out.predictions, out.truths)});
                record_weights(res, out, r, 0, b, name);
                out.audit.repeat = r;
                out.audit.budget = b;
                out.audit.condition = name;
                res.audits.push_back(std::move(out.audit));
            }
        }
    });
    return make_report(config, setup, budgets, m, n_objects, results);
}

EvaluationReport run_identity_protocol(const DatasetManifest& manifest, const ProtocolConfig& config) {
    if (config.repeats < 1) throw Error(ErrorCode::InvalidConfig, "repeats must be >= 1");
    const Setup setup = prepare(manifest, config);
    const int trials = setup.target_trials;
    if (config.folds < 2 || config.folds > trials) {
        throw Error(ErrorCode::InvalidConfig, "folds must lie in [2, " + std::to_string(trials) + "]");
    }
    std::map<std::pair<Weight, Content>, std::vector<std::string>> groups;
    for (const auto& id : setup.objects) {
        const auto& o = setup.catalog.at(id);
        groups[{o.weight, o.content}].push_back(id);
    }
    if (static_cast<int>(groups.size()) < config.identity_objects || config.identity_objects < 2) {
        throw Error(ErrorCode::InsufficientUniqueObjects, std::to_string(groups.size()) +
                                                              " unique weight/content combinations, need " +
                                                              std::to_string(config.identity_objects));
    }
    const auto budgets = config.budgets.empty()
                             ? thin(default_budgets(LabelKind::ObjectId, 0, 0, trials), config.budget_stride)
                             : config.budgets;
    check_budgets(budgets, trials - 1);
    const int m = config.m > 0 ? config.m : 4;
    if (static_cast<int>(budgets.size()) < m) {
        throw Error(ErrorCode::TooFewBudgets, std::to_string(budgets.size()) + " budgets for m=" + std::to_string(m));
    }
    std::vector<std::pair<Weight, Content>> combos;
    for (const auto& [k, _] : groups) combos.push_back(k);

    std::vector<RepeatResult> results(static_cast<std::size_t>(config.repeats));
    parallel_for(config.repeats, config.jobs, [&](int r) {
        RepeatResult& res = results[static_cast<std::size_t>(r)];
        const std::uint64_t rseed = derive_seed(config.seed, "identity#" + std::to_string(r));
        std::mt19937_64 rng(rseed);
        auto picked = combos;
        seeded_shuffle(picked, rng);
        picked.resize(static_cast<std::size_t>(config.identity_objects));
        std::vector<std::string> objects;
        for (const auto& c : picked) {
            const auto& members = groups.at(c);
            objects.push_back(members[static_cast<std::size_t>(rng() % members.size())]);
        }
        std::sort(objects.begin(), objects.end());
        const Labeler labels(setup.catalog, LabelKind::ObjectId, objects);
        std::map<std::string, std::vector<int>> perm;
        for (const auto& o : objects) {
            std::vector<int> p(static_cast<std::size_t>(trials));
            std::iota(p.begin(), p.end(), 0);
            seeded_shuffle(p, rng);
            perm[o] = p;
        }

        std::map<std::pair<int, std::string>, std::pair<std::vector<int>, std::vector<int>>> pooled;
        for (int f = 0; f < config.folds; ++f) {
            Split split;
            split.source_objects.insert(objects.begin(), objects.end());
            std::map<std::string, std::vector<int>> remaining;
            for (const auto& o : objects) {
                const auto& p = perm.at(o);
                split.test_keys.insert(key_of(o, p[static_cast<std::size_t>(f)]));
                for (int t : p) {
                    if (t != p[static_cast<std::size_t>(f)]) remaining[o].push_back(t);
                }
            }
            auto accumulate = [&](int b, const std::string& name, const ConditionOutput& out) {
                auto& [pred, truth] = pooled[{b, name}];
                pred.insert(pred.end(), out.predictions.begin(), out.predictions.end());
                truth.insert(truth.end(), out.truths.begin(), out.truths.end());
                record_weights(res, out, r, f, b, name);
            };
            const std::string fold_tag = "#" + std::to_string(f) + "#";

            // A_all: all trials of each object.
            split.train_keys.clear();
            for (const auto& o : objects) {
                for (int t = 0; t < trials; ++t) split.train_keys.insert(key_of(o, t));
            }
            accumulate(trials, "reference",
                       run_condition(setup, config, labels, Method::Baseline, split,
                                     derive_seed(rseed, "reference" + fold_tag)));

            for (int b : budgets) {
                split.train_keys.clear();
                for (const auto& o : objects) {
                    for (int i = 0; i < b; ++i) split.train_keys.insert(key_of(o, remaining[o][static_cast<std::size_t>(i)]));
                }
                std::vector<std::pair<std::string, Method>> conditions{{"baseline", Method::Baseline}};
                if (config.method != Method::Baseline) conditions.emplace_back("transfer", config.method);
                for (const auto& [name, method] : conditions) {
                    auto out = run_condition(setup, config, labels, method, split,
                                             derive_seed(rseed, name + fold_tag + std::to_string(b)));
                    accumulate(b, name, out);
                    out.audit.repeat = r;
                    out.audit.fold = f;
                    out.audit.budget = b;
                    out.audit.condition = name;
                    res.audits.push_back(std::move(out.audit));
                }
            }
        }
        res.rows.push_back({r, trials, "reference",
                            accuracy(pooled.at({trials, "reference"}).first, pooled.at({trials, "reference"}).second)});
        for (int b : budgets) {
            for (const std::string name : {"baseline", "transfer"}) {
                const auto it = pooled.find({b, name});
                if (it != pooled.end()) res.rows.push_back({r, b, name, accuracy(it->second.first, it->second.second)});
            }
        }
    });
    return make_report(config, setup, budgets, m, trials, results);
}

EvaluationReport run_protocol(const DatasetManifest& manifest, const ProtocolConfig& config) {
    return config.task == LabelKind::ObjectId ? run_identity_protocol(manifest, config)
                                              : run_property_protocol(manifest, config);
}

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

}  // namespace

void write_report_csv(const EvaluationReport& report, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "task,method,repeat,budget,condition,accuracy\n";
    const std::string prefix = std::string(to_string(report.task)) + "," + std::string(to_string(report.method)) + ",";
    for (const auto& r : report.rows) {
        out << prefix << r.repeat << ',' << r.budget << ',' << r.condition << ',' << format_double(r.accuracy) << '\n';
    }
}

void write_weights_csv(const EvaluationReport& report, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "repeat,fold,budget,condition,context,weight\n";
    for (const auto& w : report.weights) {
        out << w.repeat << ',' << w.fold << ',' << w.budget << ',' << w.condition << ',' << w.context << ','
            << format_double(w.weight) << '\n';
    }
}

nlohmann::json summary_json(const EvaluationReport& report) {
    nlohmann::json doc;
    doc["format"] = "xmorph-summary/1";
    doc["task"] = to_string(report.task);
    doc["method"] = to_string(report.method);
    doc["source"] = report.source;
    doc["target"] = report.target;
    doc["m"] = report.m;
    doc["budgets"] = report.budgets;
    doc["contexts"] = report.contexts;
    doc["reference"] = {{"budget", report.reference_budget},
                        {"mean", report.reference_mean()},
                        {"std", report.reference_std()}};
    for (const std::string name : {"baseline", "transfer"}) {
        const bool present = std::any_of(report.rows.begin(), report.rows.end(),
                                         [&](const AccuracyRow& r) { return r.condition == name; });
        if (!present) continue;
        const auto [mean, sd] = report.curve(name);
        doc["conditions"][name] = {{"mean", mean}, {"std", sd}, {"mda", report.mda(name)}};
    }
    doc["mda"] = doc["conditions"].contains("transfer") ? doc["conditions"]["transfer"]["mda"]
                                                        : doc["conditions"]["baseline"]["mda"];
    std::size_t leaks = 0;
    for (const auto& a : report.audits) leaks += a.leak_free() ? 0 : 1;
    doc["leaking_runs"] = leaks;
    return doc;
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    std::string line;
    if (!std::getline(in, line) || line != "task,method,repeat,budget,condition,accuracy") {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": unexpected header");
    }
    std::vector<ReportRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw Error(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(lineno));
        ReportRow r;
        r.task = f[0];
        r.method = f[1];
        r.condition = f[4];
        const auto bad = [&] { return Error(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(lineno)); };
        if (std::from_chars(f[2].data(), f[2].data() + f[2].size(), r.repeat).ec != std::errc{}) throw bad();
        if (std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.budget).ec != std::errc{}) throw bad();
        if (std::from_chars(f[5].data(), f[5].data() + f[5].size(), r.accuracy).ec != std::errc{}) throw bad();
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace xmorph
