#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "custodian/context.hpp"
#include "custodian/model.hpp"
#include "custodian/vault.hpp"

namespace custodian {

enum class PluginKind { Gathering, Analysis };
enum class ParamType { Text, Integer, Flag, Enum };
enum class Platform { Posix, Windows };
enum class ToolOutcome { Ok, ToolFailed, Timeout };

std::string_view to_string(PluginKind v) noexcept;
std::string_view to_string(ParamType v) noexcept;
std::string_view to_string(Platform v) noexcept;
std::string_view to_string(ToolOutcome v) noexcept;
ToolOutcome parse_tool_outcome(std::string_view s);

Platform host_platform() noexcept;

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Text;
  std::vector<std::string> choices;  // ENUM only
  std::optional<nlohmann::json> default_value;
  bool required = false;
  std::string description;
};

struct PluginManifest {
  std::string plugin_id;
  std::string display_name;
  std::string version;
  PluginKind kind = PluginKind::Gathering;
  std::vector<std::string> command_template;
  std::vector<ParamSpec> parameters;
  std::string menu_label;
  // Supported platforms, each with its effective command template.
  std::map<Platform, std::vector<std::string>> platforms;
  std::optional<std::chrono::seconds> timeout;
  std::filesystem::path directory;  // where plugin.json was found

  [[nodiscard]] const ParamSpec* param(const std::string& name) const;
  [[nodiscard]] const std::vector<std::string>* template_for(Platform p) const;
};

// Parses and validates one plugin.json document. Throws MANIFEST_INVALID.
PluginManifest parse_manifest(std::string_view json_text, const std::filesystem::path& directory);
nlohmann::json manifest_to_json(const PluginManifest& m);

// Type-checks a single value against its declared parameter. Throws PARAM_INVALID.
void check_param_value(const ParamSpec& spec, const nlohmann::json& value);

// Converts command-line text ("3", "true", "fast") into a typed value.
nlohmann::json coerce_param_text(const ParamSpec& spec, const std::string& text);

// Substitutes {name} placeholders token by token; "{{" and "}}" are literal
// braces. A token that is exactly one placeholder of an absent optional
// parameter is dropped; an embedded one becomes empty. FLAG values render as
// "true"/"false".
std::vector<std::string> substitute(const std::vector<std::string>& tmpl, const nlohmann::json& values,
                                    const std::map<std::string, std::string>& builtins);

struct Diagnostic {
  std::filesystem::path path;
  ErrorCode code = ErrorCode::ManifestInvalid;
  std::string message;
};

class PluginRegistry {
 public:
  // Registers every subdirectory of dir holding a valid plugin.json; adds
  // one diagnostic per rejected manifest. A missing dir registers nothing.
  std::vector<PluginManifest> register_plugins(const std::filesystem::path& dir);

  [[nodiscard]] std::vector<PluginManifest> list() const;
  [[nodiscard]] PluginManifest find(const std::string& plugin_id) const;  // UNKNOWN_PLUGIN
  [[nodiscard]] bool contains(const std::string& plugin_id) const;
  [[nodiscard]] std::vector<Diagnostic> diagnostics() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, PluginManifest> plugins_;
  std::vector<Diagnostic> diagnostics_;
};

struct ToolInvocation {
  InvocationId id;
  std::string plugin_id;
  std::string plugin_version;
  CaseId case_id;
  PrincipalId principal;
  nlohmann::json params = nlohmann::json::object();
  std::vector<EvidenceId> targets;
  std::vector<std::string> argv;
  Timestamp started_at;
  Timestamp finished_at;
  int exit_status = 0;
  std::optional<EvidenceId> stdout_evidence;
  std::vector<std::uint8_t> stderr_capture;
  ToolOutcome outcome = ToolOutcome::Ok;
};

struct BatchStep {
  std::string plugin_id;
  nlohmann::json params = nlohmann::json::object();
  std::vector<EvidenceId> targets;
};

struct BatchStepResult {
  std::size_t index = 0;
  std::string plugin_id;
  std::vector<ToolInvocation> invocations;
  std::optional<ErrorCode> error;
  std::string error_message;

  // OK, TOOL_FAILED, TIMEOUT or the error code name.
  [[nodiscard]] std::string outcome() const;
};

struct BatchReport {
  std::vector<BatchStepResult> steps;
};

struct PluginConfig {
  std::chrono::seconds default_timeout{600};
};

class PluginService {
 public:
  PluginService(Context ctx, Vault& vault, PluginRegistry& registry, PluginConfig config)
      : ctx_(ctx), vault_(vault), registry_(registry), config_(config) {}

  ToolInvocation invoke_gathering(const std::string& plugin_id, const nlohmann::json& params, const CaseId& case_id,
                                  const PrincipalId& principal,
                                  std::optional<std::chrono::milliseconds> timeout = std::nullopt);
  std::vector<ToolInvocation> invoke_analysis(const std::string& plugin_id, const nlohmann::json& params,
                                              const std::vector<EvidenceId>& targets, const CaseId& case_id,
                                              const PrincipalId& principal,
                                              std::optional<std::chrono::milliseconds> timeout = std::nullopt);
  BatchReport run_batch(const std::vector<BatchStep>& plan, const CaseId& case_id, const PrincipalId& principal);

  // Effective defaults: stored values over manifest defaults.
  [[nodiscard]] nlohmann::json get_defaults(const std::string& plugin_id) const;
  // Merges values into the stored defaults; a null value removes the stored
  // entry so the manifest default applies again.
  nlohmann::json set_defaults(const std::string& plugin_id, const nlohmann::json& values,
                              const PrincipalId& principal);

  [[nodiscard]] std::vector<ToolInvocation> invocations(const CaseId& case_id, const PrincipalId& principal);

  // Explicit values over stored defaults over manifest defaults; checks
  // every value and every required parameter.
  [[nodiscard]] nlohmann::json resolve_params(const PluginManifest& m, const nlohmann::json& params) const;

 private:
  struct Prepared {
    PluginManifest manifest;
    nlohmann::json params;
    std::vector<EvidenceItem> targets;
  };
  Prepared prepare(const std::string& plugin_id, const nlohmann::json& params,
                   const std::vector<EvidenceId>& target_ids, const CaseId& case_id, const PrincipalId& principal,
                   PluginKind expected);
  ToolInvocation run_one(const Prepared& p, const EvidenceItem* target, const CaseId& case_id,
                         const PrincipalId& principal, std::optional<std::chrono::milliseconds> timeout);
  std::vector<ToolInvocation> execute(const Prepared& p, const CaseId& case_id, const PrincipalId& principal,
                                      std::optional<std::chrono::milliseconds> timeout);
  [[nodiscard]] nlohmann::json stored_defaults(store::Database& db, const std::string& plugin_id) const;

  Context ctx_;
  Vault& vault_;
  PluginRegistry& registry_;
  PluginConfig config_;
};

}  // namespace custodian
