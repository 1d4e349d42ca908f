#pragma once

#include "xmorph/eval.hpp"
#include "xmorph/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xmorph {

// Plain-text `key = value` settings; `#` starts a comment, blank lines are
// ignored, keys are dotted (edn.epochs). Later assignments win.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, const std::string& origin = "<string>");
    // Throws MissingFile naming the path.
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

    // Typed reads mark the key as used; values that do not parse raise InvalidConfig.
    std::optional<std::string> take_string(const std::string& key) const;
    std::optional<int> take_int(const std::string& key) const;
    std::optional<std::uint64_t> take_u64(const std::string& key) const;
    std::optional<double> take_double(const std::string& key) const;
    std::optional<bool> take_bool(const std::string& key) const;
    std::optional<std::vector<int>> take_ints(const std::string& key) const;
    std::optional<std::vector<std::string>> take_list(const std::string& key) const;

    // Throws InvalidConfig listing every key no take_* call consumed.
    void reject_unused() const;

private:
    std::map<std::string, std::string> entries_;
    std::string origin_;
    mutable std::set<std::string> used_;
};

// "shake-audio" -> (Shake, Audio). Throws SchemaViolation.
std::pair<Behavior, Modality> parse_context(std::string_view name);

void apply_config(const KeyValueConfig& kv, SvmConfig& config, const std::string& prefix = "svm.");
void apply_config(const KeyValueConfig& kv, EdnConfig& config, const std::string& prefix = "edn.");
void apply_config(const KeyValueConfig& kv, KemaConfig& config, const std::string& prefix = "kema.");
void apply_config(const KeyValueConfig& kv, ProtocolConfig& config);
void apply_config(const KeyValueConfig& kv, SynthConfig& config);

nlohmann::json to_json(const SvmConfig& config);
nlohmann::json to_json(const EdnConfig& config);
nlohmann::json to_json(const KemaConfig& config);
nlohmann::json to_json(const ProtocolConfig& config);
nlohmann::json to_json(const SynthConfig& config);

}  // namespace xmorph
