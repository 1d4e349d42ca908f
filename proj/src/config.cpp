#include "xmorph/config.hpp"

#include "xmorph/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace xmorph {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw Error(ErrorCode::InvalidConfig, key + ": cannot parse '" + value + "'");
    }
    return out;
}

const char* method_name(EigenMethod m) {
    switch (m) {
        case EigenMethod::Jacobi: return "jacobi";
        case EigenMethod::Tridiagonal: return "tridiagonal";
        case EigenMethod::Auto: return "auto";
    }
    return "auto";
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& origin) {
    KeyValueConfig kv;
    kv.origin_ = origin;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidConfig, origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw Error(ErrorCode::InvalidConfig, origin + ":" + std::to_string(lineno) + ": empty key");
        kv.entries_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "config file not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> KeyValueConfig::take_string(const std::string& key) const {
    auto v = get(key);
    if (v) used_.insert(key);
    return v;
}

std::optional<int> KeyValueConfig::take_int(const std::string& key) const {
    const auto v = take_string(key);
    if (!v) return std::nullopt;
    return parse_number<int>(key, *v);
}

std::optional<std::uint64_t> KeyValueConfig::take_u64(const std::string& key) const {
    const auto v = take_string(key);
    if (!v) return std::nullopt;
    return parse_number<std::uint64_t>(key, *v);
}

std::optional<double> KeyValueConfig::take_double(const std::string& key) const {
    const auto v = take_string(key);
    if (!v) return std::nullopt;
    return parse_number<double>(key, *v);
}

std::optional<bool> KeyValueConfig::take_bool(const std::string& key) const {
    const auto v = take_string(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw Error(ErrorCode::InvalidConfig, key + ": expected a boolean, got '" + *v + "'");
}

std::optional<std::vector<int>> KeyValueConfig::take_ints(const std::string& key) const {
    const auto v = take_string(key);
    if (!v) return std::nullopt;
    std::vector<int> out;
    for (const auto& item : split_list(*v)) out.push_back(parse_number<int>(key, item));
    return out;
}

std::optional<std::vector<std::string>> KeyValueConfig::take_list(const std::string& key) const {
    const auto v = take_string(key);
    if (!v) return std::nullopt;
    return split_list(*v);
}

void KeyValueConfig::reject_unused() const {
    std::string unknown;
    for (const auto& [k, _] : entries_) {
        if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    }
    if (!unknown.empty()) throw Error(ErrorCode::InvalidConfig, origin_ + ": unknown keys: " + unknown);
}

std::pair<Behavior, Modality> parse_context(std::string_view name) {
    const auto dash = name.rfind('-');
    if (dash == std::string_view::npos) {
        throw Error(ErrorCode::SchemaViolation, "context '" + std::string(name) + "' is not behavior-modality");
    }
    return {parse_behavior(name.substr(0, dash)), parse_modality(name.substr(dash + 1))};
}

void apply_config(const KeyValueConfig& kv, SvmConfig& c, const std::string& p) {
    if (auto v = kv.take_double(p + "c")) c.c = *v;
    if (auto v = kv.take_string(p + "gamma")) {
        if (*v == "scale") {
            c.gamma.reset();
        } else {
            c.gamma = parse_number<double>(p + "gamma", *v);
        }
    }
    if (auto v = kv.take_double(p + "kkt_tolerance")) c.kkt_tolerance = *v;
    if (auto v = kv.take_int(p + "max_iterations")) c.max_iterations = *v;
}

void apply_config(const KeyValueConfig& kv, EdnConfig& c, const std::string& p) {
    if (auto v = kv.take_ints(p + "encoder_units")) c.encoder_units = *v;
    if (auto v = kv.take_int(p + "latent_dim")) c.latent_dim = *v;
    if (auto v = kv.take_double(p + "elu_alpha")) c.elu_alpha = *v;
    if (auto v = kv.take_double(p + "learning_rate")) c.learning_rate = *v;
    if (auto v = kv.take_int(p + "epochs")) c.epochs = *v;
    if (auto v = kv.take_int(p + "batch_size")) c.batch_size = *v;
    if (auto v = kv.take_bool(p + "standardize")) c.standardize = *v;
}

void apply_config(const KeyValueConfig& kv, KemaConfig& c, const std::string& p) {
    if (auto v = kv.take_double(p + "mu")) c.mu = *v;
    if (auto v = kv.take_int(p + "knn")) c.knn = *v;
    if (auto v = kv.take_int(p + "latent_dim")) c.latent_dim = *v;
    if (auto v = kv.take_double(p + "eig_regularization")) c.eig_regularization = *v;
    if (auto v = kv.take_double(p + "bandwidth1")) c.bandwidth1 = *v;
    if (auto v = kv.take_double(p + "bandwidth2")) c.bandwidth2 = *v;
    if (auto v = kv.take_double(p + "bandwidth_scale")) c.bandwidth_scale = *v;
    if (auto v = kv.take_bool(p + "standardize")) c.standardize = *v;
    if (auto v = kv.take_string(p + "eigen_method")) {
        if (*v == "jacobi") {
            c.eigen_method = EigenMethod::Jacobi;
        } else if (*v == "tridiagonal") {
            c.eigen_method = EigenMethod::Tridiagonal;
        } else if (*v == "auto") {
            c.eigen_method = EigenMethod::Auto;
        } else {
            throw Error(ErrorCode::InvalidConfig, p + "eigen_method: '" + *v + "'");
        }
    }
}

void apply_config(const KeyValueConfig& kv, ProtocolConfig& c) {
    if (auto v = kv.take_string("task")) c.task = parse_label_kind(*v);
    if (auto v = kv.take_string("method")) c.method = parse_method(*v);
    if (auto v = kv.take_string("source")) c.source = *v;
    if (auto v = kv.take_string("target")) c.target = *v;
    if (auto v = kv.take_list("contexts")) {
        c.contexts.clear();
        for (const auto& name : *v) c.contexts.push_back(parse_context(name));
    }
    if (auto v = kv.take_int("repeats")) c.repeats = *v;
    if (auto v = kv.take_int("folds")) c.folds = *v;
    if (auto v = kv.take_ints("budgets")) c.budgets = *v;
    if (auto v = kv.take_int("budget_stride")) c.budget_stride = *v;
    if (auto v = kv.take_int("m")) c.m = *v;
    if (auto v = kv.take_int("test_objects")) c.test_objects = *v;
    if (auto v = kv.take_int("identity_objects")) c.identity_objects = *v;
    if (auto v = kv.take_string("identity_pair_property")) c.identity_pair_property = parse_label_kind(*v);
    if (auto v = kv.take_int("augment_k")) c.augment_k = *v;
    if (auto v = kv.take_int("weight_cv_folds")) c.weight_cv_folds = *v;
    if (auto v = kv.take_int("jobs")) c.jobs = *v;
    if (auto v = kv.take_u64("seed")) c.seed = *v;
    apply_config(kv, c.svm);
    apply_config(kv, c.edn);
    apply_config(kv, c.kema);
}

void apply_config(const KeyValueConfig& kv, SynthConfig& c) {
    if (auto v = kv.take_int("latent_dim")) c.latent_dim = *v;
    if (auto v = kv.take_int("objects")) c.objects = *v;
    if (auto v = kv.take_int("trials_per_object")) c.trials_per_object = *v;
    if (auto v = kv.take_double("class_separation")) c.class_separation = *v;
    if (auto v = kv.take_double("object_sigma")) c.object_sigma = *v;
    if (auto v = kv.take_double("max_condition")) c.max_condition = *v;
    if (auto v = kv.take_double("bias_scale")) c.bias_scale = *v;
    if (auto v = kv.take_u64("seed")) c.seed = *v;
    if (auto v = kv.take_list("behaviors")) {
        c.behaviors.clear();
        for (const auto& b : *v) c.behaviors.push_back(parse_behavior(b));
    }
    if (auto v = kv.take_list("modalities")) {
        c.modalities.clear();
        for (const auto& m : *v) c.modalities.push_back(parse_modality(m));
    }
    // robots = baxter:7, ur5:6 ; robot.<name>.noise_sigma = 0.1
    if (auto v = kv.take_list("robots")) {
        c.robots.clear();
        for (const auto& item : *v) {
            const auto colon = item.find(':');
            SynthRobot r;
            r.name = item.substr(0, colon);
            if (colon != std::string::npos) r.effort_joints = parse_number<int>("robots", item.substr(colon + 1));
            c.robots.push_back(r);
        }
    }
    double shared_noise = -1.0;
    if (auto v = kv.take_double("noise_sigma")) shared_noise = *v;
    for (auto& r : c.robots) {
        if (shared_noise >= 0.0) r.noise_sigma = shared_noise;
        if (auto v = kv.take_double("robot." + r.name + ".noise_sigma")) r.noise_sigma = *v;
    }
}

nlohmann::json to_json(const SvmConfig& c) {
    nlohmann::json j{{"c", c.c}, {"kkt_tolerance", c.kkt_tolerance}, {"max_iterations", c.max_iterations}};
    if (c.gamma) {
        j["gamma"] = *c.gamma;
    } else {
        j["gamma"] = "scale";
    }
    return j;
}

nlohmann::json to_json(const EdnConfig& c) {
    return {{"encoder_units", c.encoder_units}, {"latent_dim", c.latent_dim}, {"elu_alpha", c.elu_alpha},
            {"learning_rate", c.learning_rate}, {"epochs", c.epochs},       {"batch_size", c.batch_size},
            {"standardize", c.standardize}};
}

nlohmann::json to_json(const KemaConfig& c) {
    nlohmann::json j{{"mu", c.mu},
                     {"knn", c.knn},
                     {"latent_dim", c.latent_dim},
                     {"eig_regularization", c.eig_regularization},
                     {"eigen_method", method_name(c.eigen_method)},
                     {"standardize", c.standardize},
                     {"bandwidth_scale", c.bandwidth_scale}};
    j["bandwidth1"] = c.bandwidth1 ? nlohmann::json(*c.bandwidth1) : nlohmann::json("median");
    j["bandwidth2"] = c.bandwidth2 ? nlohmann::json(*c.bandwidth2) : nlohmann::json("median");
    return j;
}

nlohmann::json to_json(const ProtocolConfig& c) {
    std::vector<std::string> contexts;
    for (const auto& [b, m] : c.contexts) contexts.push_back(std::string(to_string(b)) + "-" + std::string(to_string(m)));
    return {{"task", to_string(c.task)},
            {"method", to_string(c.method)},
            {"source", c.source},
            {"target", c.target},
            {"contexts", contexts},
            {"repeats", c.repeats},
            {"folds", c.folds},
            {"budgets", c.budgets},
            {"budget_stride", c.budget_stride},
            {"m", c.m},
            {"test_objects", c.test_objects},
            {"identity_objects", c.identity_objects},
            {"identity_pair_property", to_string(c.identity_pair_property)},
            {"augment_k", c.augment_k},
            {"weight_cv_folds", c.weight_cv_folds},
            {"jobs", c.jobs},
            {"seed", c.seed},
            {"svm", to_json(c.svm)},
            {"edn", to_json(c.edn)},
            {"kema", to_json(c.kema)}};
}

nlohmann::json to_json(const SynthConfig& c) {
    nlohmann::json robots = nlohmann::json::array();
    for (const auto& r : c.robots) {
        robots.push_back({{"name", r.name}, {"effort_joints", r.effort_joints}, {"noise_sigma", r.noise_sigma}});
    }
    std::vector<std::string> behaviors, modalities;
    for (auto b : c.behaviors) behaviors.emplace_back(to_string(b));
    for (auto m : c.modalities) modalities.emplace_back(to_string(m));
    return {{"latent_dim", c.latent_dim},
            {"objects", c.objects},
            {"trials_per_object", c.trials_per_object},
            {"robots", robots},
            {"behaviors", behaviors},
            {"modalities", modalities},
            {"class_separation", c.class_separation},
            {"object_sigma", c.object_sigma},
            {"max_condition", c.max_condition},
            {"bias_scale", c.bias_scale},
            {"seed", c.seed}};
}

}  // namespace xmorph
