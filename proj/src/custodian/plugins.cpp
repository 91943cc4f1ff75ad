#include "custodian/plugins.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "custodian/cases.hpp"
#include "custodian/process.hpp"

namespace custodian {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(PluginKind v) noexcept { return v == PluginKind::Gathering ? "GATHERING" : "ANALYSIS"; }

std::string_view to_string(ParamType v) noexcept {
  switch (v) {
    case ParamType::Text: return "TEXT";
    case ParamType::Integer: return "INTEGER";
    case ParamType::Flag: return "FLAG";
    case ParamType::Enum: return "ENUM";
  }
  return "TEXT";
}

std::string_view to_string(Platform v) noexcept { return v == Platform::Posix ? "posix" : "windows"; }

std::string_view to_string(ToolOutcome v) noexcept {
  switch (v) {
    case ToolOutcome::Ok: return "OK";
    case ToolOutcome::ToolFailed: return "TOOL_FAILED";
    case ToolOutcome::Timeout: return "TIMEOUT";
  }
  return "OK";
}

ToolOutcome parse_tool_outcome(std::string_view s) {
  if (s == "OK") return ToolOutcome::Ok;
  if (s == "TOOL_FAILED") return ToolOutcome::ToolFailed;
  if (s == "TIMEOUT") return ToolOutcome::Timeout;
  fail(ErrorCode::InvalidArgument, "unknown tool outcome " + std::string(s));
}

Platform host_platform() noexcept {
#ifdef _WIN32
  return Platform::Windows;
#else
  return Platform::Posix;
#endif
}

const ParamSpec* PluginManifest::param(const std::string& name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const std::vector<std::string>* PluginManifest::template_for(Platform p) const {
  auto it = platforms.find(p);
  return it == platforms.end() ? nullptr : &it->second;
}

// ---- templates ------------------------------------------------------------

namespace {

struct Piece {
  bool placeholder = false;
  std::string text;
};

// Splits a template token into literal text and placeholders. nullopt on
// unbalanced braces.
std::optional<std::vector<Piece>> split_token(const std::string& token) {
  std::vector<Piece> out;
  std::string literal;
  for (std::size_t i = 0; i < token.size(); ++i) {
    char c = token[i];
    if (c == '{') {
      if (i + 1 < token.size() && token[i + 1] == '{') {
        literal.push_back('{');
        ++i;
        continue;
      }
      auto close = token.find('}', i + 1);
      if (close == std::string::npos) return std::nullopt;
      if (!literal.empty()) out.push_back({false, std::exchange(literal, {})});
      out.push_back({true, token.substr(i + 1, close - i - 1)});
      i = close;
    } else if (c == '}') {
      if (i + 1 < token.size() && token[i + 1] == '}') {
        literal.push_back('}');
        ++i;
        continue;
      }
      return std::nullopt;
    } else {
      literal.push_back(c);
    }
  }
  if (!literal.empty()) out.push_back({false, literal});
  return out;
}

const std::set<std::string>& builtin_names() {
  static const std::set<std::string> names{"input", "output_dir"};
  return names;
}

std::string render_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

[[noreturn]] void bad_manifest(const std::string& msg) { fail(ErrorCode::ManifestInvalid, msg); }

ParamType parse_param_type(const std::string& s) {
  if (s == "TEXT") return ParamType::Text;
  if (s == "INTEGER") return ParamType::Integer;
  if (s == "FLAG") return ParamType::Flag;
  if (s == "ENUM") return ParamType::Enum;
  bad_manifest("unknown parameter type '" + s + "'");
}

std::vector<std::string> parse_template(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) bad_manifest(where + " must be a non-empty array of strings");
  std::vector<std::string> out;
  for (const auto& t : j) {
    if (!t.is_string()) bad_manifest(where + " must contain only strings");
    out.push_back(t.get<std::string>());
  }
  if (out.front().empty()) bad_manifest(where + " has an empty program name");
  return out;
}

void check_template(const PluginManifest& m, const std::vector<std::string>& tmpl, const std::string& where) {
  bool uses_input = false;
  for (const auto& token : tmpl) {
    auto pieces = split_token(token);
    if (!pieces) bad_manifest(where + ": unbalanced braces in '" + token + "'");
    for (const auto& p : *pieces) {
      if (!p.placeholder) continue;
      if (p.text == "input") uses_input = true;
      if (!builtin_names().count(p.text) && m.param(p.text) == nullptr) {
        bad_manifest(where + ": placeholder {" + p.text + "} is neither a parameter nor a builtin");
      }
    }
  }
  if (m.kind == PluginKind::Analysis && !uses_input) bad_manifest(where + ": ANALYSIS templates must use {input}");
  if (m.kind == PluginKind::Gathering && uses_input) bad_manifest(where + ": GATHERING templates must not use {input}");
}

}  // namespace

void check_param_value(const ParamSpec& spec, const json& value) {
  bool ok = false;
  switch (spec.type) {
    case ParamType::Text: ok = value.is_string(); break;
    case ParamType::Integer: ok = value.is_number_integer(); break;
    case ParamType::Flag: ok = value.is_boolean(); break;
    case ParamType::Enum:
      ok = value.is_string() &&
           std::find(spec.choices.begin(), spec.choices.end(), value.get<std::string>()) != spec.choices.end();
      break;
  }
  if (!ok) {
    fail(ErrorCode::ParamInvalid, "parameter '" + spec.name + "' expects " + std::string(to_string(spec.type)) +
                                      ", got " + value.dump());
  }
}

json coerce_param_text(const ParamSpec& spec, const std::string& text) {
  switch (spec.type) {
    case ParamType::Integer: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        fail(ErrorCode::ParamInvalid, "parameter '" + spec.name + "' expects an integer, got '" + text + "'");
      }
      return v;
    }
    case ParamType::Flag:
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      fail(ErrorCode::ParamInvalid, "parameter '" + spec.name + "' expects true or false, got '" + text + "'");
    case ParamType::Enum: {
      json v = text;
      check_param_value(spec, v);
      return v;
    }
    case ParamType::Text: break;
  }
  return text;
}

std::vector<std::string> substitute(const std::vector<std::string>& tmpl, const json& values,
                                    const std::map<std::string, std::string>& builtins) {
  std::vector<std::string> argv;
  for (const auto& token : tmpl) {
    auto pieces = split_token(token);
    if (!pieces) fail(ErrorCode::ManifestInvalid, "unbalanced braces in '" + token + "'");
    auto lookup = [&](const std::string& name) -> std::optional<std::string> {
      if (auto b = builtins.find(name); b != builtins.end()) return b->second;
      if (values.is_object() && values.contains(name)) return render_value(values.at(name));
      return std::nullopt;
    };
    if (pieces->size() == 1 && pieces->front().placeholder) {
      if (auto v = lookup(pieces->front().text)) argv.push_back(*v);
      continue;
    }
    std::string out;
    for (const auto& p : *pieces) out += p.placeholder ? lookup(p.text).value_or("") : p.text;
    argv.push_back(std::move(out));
  }
  return argv;
}

PluginManifest parse_manifest(std::string_view json_text, const fs::path& directory) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad_manifest(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_manifest("manifest must be a JSON object");
  static const std::set<std::string> known{"plugin_id",  "display_name", "version",   "kind",
                                           "command_template", "parameters", "menu_label", "platforms",
                                           "timeout_seconds",  "description"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) bad_manifest("unknown field '" + key + "'");
  }
  auto str = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) bad_manifest(std::string("missing field '") + key + "'");
      return {};
    }
    if (!j[key].is_string()) bad_manifest(std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
  };

  PluginManifest m;
  m.directory = directory;
  m.plugin_id = str("plugin_id", true);
  static const std::regex id_re(R"([A-Za-z0-9_-]+(\.[A-Za-z0-9_-]+)+)");
  if (!std::regex_match(m.plugin_id, id_re)) bad_manifest("plugin_id '" + m.plugin_id + "' is not reverse-dotted");
  m.display_name = str("display_name", true);
  if (m.display_name.empty()) bad_manifest("display_name must be non-empty");
  m.version = str("version", true);
  static const std::regex ver_re(R"([0-9]+(\.[0-9]+)*)");
  if (!std::regex_match(m.version, ver_re)) bad_manifest("version '" + m.version + "' is not dotted integers");
  auto kind = str("kind", true);
  if (kind == "GATHERING") {
    m.kind = PluginKind::Gathering;
  } else if (kind == "ANALYSIS") {
    m.kind = PluginKind::Analysis;
  } else {
    bad_manifest("kind must be GATHERING or ANALYSIS");
  }
  if (!j.contains("command_template")) bad_manifest("missing field 'command_template'");
  m.command_template = parse_template(j["command_template"], "command_template");
  m.menu_label = str("menu_label", false);
  if (m.menu_label.empty()) m.menu_label = m.display_name;

  if (j.contains("parameters")) {
    if (!j["parameters"].is_array()) bad_manifest("parameters must be an array");
    static const std::regex name_re(R"([A-Za-z_][A-Za-z0-9_]*)");
    for (const auto& pj : j["parameters"]) {
      if (!pj.is_object()) bad_manifest("each parameter must be an object");
      for (const auto& [key, _] : pj.items()) {
        if (key != "name" && key != "type" && key != "choices" && key != "default" && key != "required" &&
            key != "description") {
          bad_manifest("unknown parameter field '" + key + "'");
        }
      }
      ParamSpec p;
      if (!pj.contains("name") || !pj["name"].is_string()) bad_manifest("parameter without a name");
      p.name = pj["name"].get<std::string>();
      if (!std::regex_match(p.name, name_re)) bad_manifest("invalid parameter name '" + p.name + "'");
      if (builtin_names().count(p.name)) bad_manifest("parameter name '" + p.name + "' is reserved");
      if (m.param(p.name) != nullptr) bad_manifest("duplicate parameter '" + p.name + "'");
      if (!pj.contains("type") || !pj["type"].is_string()) bad_manifest("parameter '" + p.name + "' needs a type");
      p.type = parse_param_type(pj["type"].get<std::string>());
      if (pj.contains("choices")) {
        if (p.type != ParamType::Enum) bad_manifest("choices given for non-ENUM parameter '" + p.name + "'");
        if (!pj["choices"].is_array()) bad_manifest("choices must be an array");
        for (const auto& c : pj["choices"]) {
          if (!c.is_string()) bad_manifest("choices must be strings");
          auto s = c.get<std::string>();
          if (std::find(p.choices.begin(), p.choices.end(), s) != p.choices.end()) {
            bad_manifest("duplicate choice '" + s + "'");
          }
          p.choices.push_back(std::move(s));
        }
      }
      if (p.type == ParamType::Enum && p.choices.empty()) bad_manifest("ENUM parameter '" + p.name + "' needs choices");
      if (pj.contains("required")) {
        if (!pj["required"].is_boolean()) bad_manifest("required must be a boolean");
        p.required = pj["required"].get<bool>();
      }
      if (pj.contains("description")) {
        if (!pj["description"].is_string()) bad_manifest("description must be a string");
        p.description = pj["description"].get<std::string>();
      }
      if (pj.contains("default") && !pj["default"].is_null()) {
        try {
          check_param_value(p, pj["default"]);
        } catch (const Error& e) {
          bad_manifest(std::string("bad default: ") + e.what());
        }
        p.default_value = pj["default"];
      }
      m.parameters.push_back(std::move(p));
    }
  }

  if (j.contains("platforms")) {
    const auto& pj = j["platforms"];
    if (!pj.is_object() || pj.empty()) bad_manifest("platforms must be a non-empty object");
    for (const auto& [key, value] : pj.items()) {
      Platform plat;
      if (key == "posix") {
        plat = Platform::Posix;
      } else if (key == "windows") {
        plat = Platform::Windows;
      } else {
        bad_manifest("unknown platform '" + key + "'");
      }
      if (!value.is_object()) bad_manifest("platform '" + key + "' must be an object");
      for (const auto& [k, _] : value.items()) {
        if (k != "command_template") bad_manifest("unknown field '" + k + "' in platform '" + key + "'");
      }
      m.platforms[plat] = value.contains("command_template")
                              ? parse_template(value["command_template"], key + ".command_template")
                              : m.command_template;
    }
  } else {
    m.platforms[Platform::Posix] = m.command_template;
    m.platforms[Platform::Windows] = m.command_template;
  }
  check_template(m, m.command_template, "command_template");
  for (const auto& [plat, tmpl] : m.platforms) check_template(m, tmpl, std::string(to_string(plat)));

  if (j.contains("timeout_seconds")) {
    const auto& t = j["timeout_seconds"];
    if (!t.is_number_integer() || t.get<std::int64_t>() < 1) bad_manifest("timeout_seconds must be a positive integer");
    m.timeout = std::chrono::seconds(t.get<std::int64_t>());
  }
  return m;
}

json manifest_to_json(const PluginManifest& m) {
  json params = json::array();
  for (const auto& p : m.parameters) {
    json pj{{"name", p.name}, {"type", to_string(p.type)}, {"required", p.required}};
    if (p.type == ParamType::Enum) pj["choices"] = p.choices;
    pj["default"] = p.default_value ? *p.default_value : json(nullptr);
    if (!p.description.empty()) pj["description"] = p.description;
    params.push_back(std::move(pj));
  }
  json platforms = json::object();
  for (const auto& [plat, tmpl] : m.platforms) platforms[std::string(to_string(plat))] = {{"command_template", tmpl}};
  json j{{"plugin_id", m.plugin_id},
         {"display_name", m.display_name},
         {"version", m.version},
         {"kind", to_string(m.kind)},
         {"command_template", m.command_template},
         {"parameters", params},
         {"menu_label", m.menu_label},
         {"platforms", platforms}};
  if (m.timeout) j["timeout_seconds"] = m.timeout->count();
  return j;
}

// ---- registry ---------------------------------------------------------------

std::vector<PluginManifest> PluginRegistry::register_plugins(const fs::path& dir) {
  std::vector<PluginManifest> added;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return added;
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());

  std::unique_lock lock(mu_);
  for (const auto& sub : subdirs) {
    auto manifest_path = sub / "plugin.json";
    if (!fs::is_regular_file(manifest_path, ec)) continue;
    std::ifstream in(manifest_path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      auto m = parse_manifest(buf.str(), fs::absolute(sub).lexically_normal());
      if (plugins_.count(m.plugin_id)) {
        diagnostics_.push_back({manifest_path, ErrorCode::Duplicate,
                                "plugin_id '" + m.plugin_id + "' is already registered from " +
                                    plugins_.at(m.plugin_id).directory.string()});
        continue;
      }
      if (m.template_for(host_platform()) == nullptr) {
        diagnostics_.push_back({manifest_path, ErrorCode::ManifestInvalid,
                                "plugin '" + m.plugin_id + "' does not support this platform"});
        continue;
      }
      plugins_.emplace(m.plugin_id, m);
      added.push_back(std::move(m));
    } catch (const Error& e) {
      diagnostics_.push_back({manifest_path, e.code(), e.what()});
    }
  }
  return added;
}

std::vector<PluginManifest> PluginRegistry::list() const {
  std::shared_lock lock(mu_);
  std::vector<PluginManifest> out;
  for (const auto& [_, m] : plugins_) out.push_back(m);
  return out;
}

PluginManifest PluginRegistry::find(const std::string& plugin_id) const {
  std::shared_lock lock(mu_);
  auto it = plugins_.find(plugin_id);
  if (it == plugins_.end()) fail(ErrorCode::UnknownPlugin, "unknown plugin '" + plugin_id + "'");
  return it->second;
}

bool PluginRegistry::contains(const std::string& plugin_id) const {
  std::shared_lock lock(mu_);
  return plugins_.count(plugin_id) != 0;
}

std::vector<Diagnostic> PluginRegistry::diagnostics() const {
  std::shared_lock lock(mu_);
  return diagnostics_;
}

// ---- invocations ------------------------------------------------------------

std::string BatchStepResult::outcome() const {
  if (error) return std::string(error_code_name(*error));
  for (const auto& inv : invocations) {
    if (inv.outcome != ToolOutcome::Ok) return std::string(to_string(inv.outcome));
  }
  return "OK";
}

json PluginService::stored_defaults(store::Database& db, const std::string& plugin_id) const {
  json out = json::object();
  auto st = db.prepare("SELECT name, value_json FROM plugin_defaults WHERE plugin_id = ? ORDER BY name");
  st.bind(1, plugin_id);
  while (st.step()) {
    try {
      out[st.text(0)] = json::parse(st.text(1));
    } catch (const json::exception&) {
    }
  }
  return out;
}

json PluginService::resolve_params(const PluginManifest& m, const json& params) const {
  if (!params.is_null() && !params.is_object()) fail(ErrorCode::ParamInvalid, "parameters must be an object");
  if (params.is_object()) {
    for (const auto& [name, value] : params.items()) {
      const auto* spec = m.param(name);
      if (spec == nullptr) fail(ErrorCode::ParamInvalid, "plugin '" + m.plugin_id + "' has no parameter '" + name + "'");
      check_param_value(*spec, value);
    }
  }
  auto stored = ctx_.store.read([&](store::Database& db) { return stored_defaults(db, m.plugin_id); });
  json out = json::object();
  for (const auto& spec : m.parameters) {
    if (params.is_object() && params.contains(spec.name)) {
      out[spec.name] = params.at(spec.name);
      continue;
    }
    if (stored.contains(spec.name)) {
      try {
        check_param_value(spec, stored[spec.name]);
        out[spec.name] = stored[spec.name];
        continue;
      } catch (const Error&) {
        // stored value no longer matches the manifest; fall through
      }
    }
    if (spec.default_value) {
      out[spec.name] = *spec.default_value;
    } else if (spec.required) {
      fail(ErrorCode::ParamInvalid, "missing required parameter '" + spec.name + "'");
    }
  }
  return out;
}

json PluginService::get_defaults(const std::string& plugin_id) const {
  auto m = registry_.find(plugin_id);
  auto stored = ctx_.store.read([&](store::Database& db) { return stored_defaults(db, plugin_id); });
  json out = json::object();
  for (const auto& spec : m.parameters) {
    if (stored.contains(spec.name)) {
      try {
        check_param_value(spec, stored[spec.name]);
        out[spec.name] = stored[spec.name];
        continue;
      } catch (const Error&) {
      }
    }
    if (spec.default_value) out[spec.name] = *spec.default_value;
  }
  return out;
}

json PluginService::set_defaults(const std::string& plugin_id, const json& values, const PrincipalId& principal) {
  auto m = registry_.find(plugin_id);
  (void)ctx_.access.principal(principal);
  if (!values.is_object()) fail(ErrorCode::ParamInvalid, "defaults must be an object");
  for (const auto& [name, value] : values.items()) {
    const auto* spec = m.param(name);
    if (spec == nullptr) fail(ErrorCode::ParamInvalid, "plugin '" + plugin_id + "' has no parameter '" + name + "'");
    if (!value.is_null()) check_param_value(*spec, value);
  }
  ctx_.store.write([&](store::Database& db) {
    for (const auto& [name, value] : values.items()) {
      if (value.is_null()) {
        auto st = db.prepare("DELETE FROM plugin_defaults WHERE plugin_id = ? AND name = ?");
        st.bind(1, plugin_id).bind(2, name);
        st.run();
      } else {
        auto st = db.prepare(
            "INSERT INTO plugin_defaults (plugin_id, name, value_json) VALUES (?, ?, ?) "
            "ON CONFLICT (plugin_id, name) DO UPDATE SET value_json = excluded.value_json");
        st.bind(1, plugin_id).bind(2, name).bind(3, value.dump());
        st.run();
      }
    }
  });
  return get_defaults(plugin_id);
}

PluginService::Prepared PluginService::prepare(const std::string& plugin_id, const json& params,
                                               const std::vector<EvidenceId>& target_ids, const CaseId& case_id,
                                               const PrincipalId& principal, PluginKind expected) {
  ctx_.access.require(principal, Right::Write, {Category::Case, case_id.str()});
  Prepared p;
  p.manifest = registry_.find(plugin_id);
  if (p.manifest.kind != expected) {
    fail(ErrorCode::InvalidArgument,
         "plugin '" + plugin_id + "' is a " + std::string(to_string(p.manifest.kind)) + " tool");
  }
  if (expected == PluginKind::Analysis && target_ids.empty()) {
    fail(ErrorCode::InvalidArgument, "analysis needs at least one target");
  }
  if (expected == PluginKind::Gathering && !target_ids.empty()) {
    fail(ErrorCode::InvalidArgument, "gathering tools take no targets");
  }
  for (const auto& id : target_ids) {
    ctx_.access.require(principal, Right::Read, {Category::Evidence, id.str()});
    auto item = ctx_.store.read([&](store::Database& db) { return Vault::load_or_throw(db, id); });
    if (item.case_id != case_id) fail(ErrorCode::UnknownEvidence, "evidence " + id.str() + " is not in this case");
    p.targets.push_back(std::move(item));
  }
  p.params = resolve_params(p.manifest, params);
  return p;
}

namespace {

std::string safe_file_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '-' ||
              c == '_';
    out.push_back(ok ? c : '_');
  }
  while (!out.empty() && out.front() == '.') out.erase(out.begin());
  if (out.empty()) out = "evidence";
  return out.substr(0, 120);
}

class WorkDir {
 public:
  explicit WorkDir(fs::path p) : path_(std::move(p)) { fs::create_directories(path_); }
  ~WorkDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

ToolInvocation PluginService::run_one(const Prepared& p, const EvidenceItem* target, const CaseId& case_id,
                                      const PrincipalId& principal, std::optional<std::chrono::milliseconds> timeout) {
  ToolInvocation inv;
  inv.id = InvocationId::generate();
  inv.plugin_id = p.manifest.plugin_id;
  inv.plugin_version = p.manifest.version;
  inv.case_id = case_id;
  inv.principal = principal;
  inv.params = p.params;
  if (target != nullptr) inv.targets.push_back(target->id);

  WorkDir work(ctx_.repo.layout().work / inv.id.str());
  auto out_dir = work.path() / "out";
  fs::create_directories(out_dir);
  std::map<std::string, std::string> builtins{{"output_dir", out_dir.string()}};
  if (target != nullptr) {
    auto in_dir = work.path() / "input";
    fs::create_directories(in_dir);
    auto copy = in_dir / safe_file_name(target->display_name);
    fs::copy_file(vault_.blobs().path_for(target->sha1), copy, fs::copy_options::overwrite_existing);
    ::chmod(copy.c_str(), 0444);
    builtins["input"] = copy.string();
  }

  const auto* tmpl = p.manifest.template_for(host_platform());
  if (tmpl == nullptr) fail(ErrorCode::ManifestInvalid, "plugin does not support this platform");
  inv.argv = substitute(*tmpl, p.params, builtins);
  if (inv.argv.empty()) fail(ErrorCode::ManifestInvalid, "command line is empty after substitution");
  if (inv.argv[0].rfind("./", 0) == 0) inv.argv[0] = (p.manifest.directory / inv.argv[0].substr(2)).string();
  for (const auto& arg : inv.argv) {
    if (vault_.inside_vault(arg)) fail(ErrorCode::ParamInvalid, "argument refers to the evidence vault: " + arg);
  }

  std::chrono::milliseconds limit = timeout.value_or(
      std::chrono::duration_cast<std::chrono::milliseconds>(p.manifest.timeout.value_or(config_.default_timeout)));
  inv.started_at = ctx_.clock.now();
  auto result = run_process(inv.argv, p.manifest.directory, limit);
  inv.finished_at = std::max(ctx_.clock.now(), inv.started_at);
  inv.exit_status = result.exit_status;
  inv.stderr_capture = std::move(result.err);
  inv.outcome = result.timed_out ? ToolOutcome::Timeout
                                 : (result.exit_status == 0 ? ToolOutcome::Ok : ToolOutcome::ToolFailed);

  auto staged = vault_.blobs().stage(result.out);
  vault_.blobs().commit(staged);
  const std::string provenance = "plugin " + p.manifest.plugin_id + " " + p.manifest.version + " params " +
                                 p.params.dump();
  std::string name = p.manifest.display_name + " output";
  if (target != nullptr) name += " for " + target->display_name;

  ctx_.store.write([&](store::Database& db) {
    CaseService::require_open(db, case_id);
    std::optional<ParentLink> parent;
    if (target != nullptr) parent = ParentLink{target->id, Relation::ProducedByTool, 0, 0};
    auto item = vault_.insert_item(db, {case_id, name, provenance, principal, parent}, staged);
    inv.stdout_evidence = item.id;

    json targets = json::array();
    for (const auto& t : inv.targets) targets.push_back(t.str());
    auto st = db.prepare(
        "INSERT INTO invocations (id, plugin_id, plugin_version, case_id, principal_id, params_json, targets_json, "
        "argv_json, started_at, finished_at, exit_status, stdout_evidence, stderr, outcome) "
        "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
    st.bind(1, inv.id.str())
        .bind(2, inv.plugin_id)
        .bind(3, inv.plugin_version)
        .bind(4, case_id.str())
        .bind(5, principal.str())
        .bind(6, inv.params.dump())
        .bind(7, targets.dump())
        .bind(8, json(inv.argv).dump())
        .bind(9, inv.started_at.iso8601())
        .bind(10, inv.finished_at.iso8601())
        .bind(11, static_cast<std::int64_t>(inv.exit_status))
        .bind(12, item.id.str())
        .bind(13, std::span<const std::uint8_t>(inv.stderr_capture))
        .bind(14, to_string(inv.outcome));
    st.run();

    EventDraft d{.principal = principal, .case_id = case_id, .evidence_id = item.id, .kind = EventKind::ToolRun};
    d.description = "ran " + p.manifest.plugin_id + " " + p.manifest.version + ": " +
                    std::string(to_string(inv.outcome)) + " (exit " + std::to_string(inv.exit_status) + "), " +
                    std::to_string(item.size_bytes) + " bytes of output";
    if (target != nullptr) {
      d.related_evidence_id = target->id;
      d.pre_digest = target->sha1;
      d.description += " on '" + target->display_name + "'";
    }
    d.post_digest = item.sha1;
    ctx_.ledger.append(db, d);
  });

  if (target != nullptr) vault_.verify_locked(*target, principal, std::nullopt);
  return inv;
}

std::vector<ToolInvocation> PluginService::execute(const Prepared& p, const CaseId& case_id,
                                                   const PrincipalId& principal,
                                                   std::optional<std::chrono::milliseconds> timeout) {
  CaseGuard guard(ctx_.locks, case_id);
  std::vector<EvidenceItem> current;
  ctx_.store.read([&](store::Database& db) {
    CaseService::require_open(db, case_id);
    for (const auto& t : p.targets) current.push_back(Vault::load_or_throw(db, t.id));
  });
  for (const auto& t : current) {
    if (t.status != EvidenceStatus::Intact) {
      fail(ErrorCode::SourceCorrupt, "target '" + t.display_name + "' is CORRUPT");
    }
  }
  std::vector<ToolInvocation> out;
  if (p.manifest.kind == PluginKind::Gathering) {
    out.push_back(run_one(p, nullptr, case_id, principal, timeout));
  } else {
    for (const auto& t : current) out.push_back(run_one(p, &t, case_id, principal, timeout));
  }
  return out;
}

ToolInvocation PluginService::invoke_gathering(const std::string& plugin_id, const json& params,
                                               const CaseId& case_id, const PrincipalId& principal,
                                               std::optional<std::chrono::milliseconds> timeout) {
  auto p = prepare(plugin_id, params, {}, case_id, principal, PluginKind::Gathering);
  return execute(p, case_id, principal, timeout).front();
}

std::vector<ToolInvocation> PluginService::invoke_analysis(const std::string& plugin_id, const json& params,
                                                           const std::vector<EvidenceId>& targets,
                                                           const CaseId& case_id, const PrincipalId& principal,
                                                           std::optional<std::chrono::milliseconds> timeout) {
  auto p = prepare(plugin_id, params, targets, case_id, principal, PluginKind::Analysis);
  return execute(p, case_id, principal, timeout);
}

BatchReport PluginService::run_batch(const std::vector<BatchStep>& plan, const CaseId& case_id,
                                     const PrincipalId& principal) {
  if (plan.empty()) fail(ErrorCode::PlanInvalid, "batch plan is empty");
  ctx_.access.require(principal, Right::Write, {Category::Case, case_id.str()});

  std::vector<Prepared> prepared;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& step = plan[i];
    const std::string where = "step " + std::to_string(i + 1) + ": ";
    if (!registry_.contains(step.plugin_id)) fail(ErrorCode::PlanInvalid, where + "unknown plugin '" + step.plugin_id + "'");
    auto kind = registry_.find(step.plugin_id).kind;
    for (const auto& id : step.targets) {
      bool visible = ctx_.store.read([&](store::Database& db) {
        auto item = Vault::load(db, id);
        return item && item->case_id == case_id &&
               ctx_.access.can_view(db, principal, {Category::Evidence, id.str()});
      });
      if (!visible) fail(ErrorCode::PlanInvalid, where + "unknown evidence " + id.str());
    }
    try {
      prepared.push_back(prepare(step.plugin_id, step.params, step.targets, case_id, principal, kind));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AccessDenied || e.code() == ErrorCode::UnknownCase) throw;
      fail(ErrorCode::PlanInvalid, where + e.what());
    }
  }

  BatchReport report;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    BatchStepResult r;
    r.index = i;
    r.plugin_id = plan[i].plugin_id;
    try {
      r.invocations = execute(prepared[i], case_id, principal, std::nullopt);
    } catch (const Error& e) {
      r.error = e.code();
      r.error_message = e.what();
    }
    report.steps.push_back(std::move(r));
  }
  return report;
}

std::vector<ToolInvocation> PluginService::invocations(const CaseId& case_id, const PrincipalId& principal) {
  ctx_.access.require(principal, Right::Read, {Category::Case, case_id.str()});
  return ctx_.store.read([&](store::Database& db) {
    std::vector<ToolInvocation> out;
    auto st = db.prepare(
        "SELECT id, plugin_id, plugin_version, principal_id, params_json, targets_json, argv_json, started_at, "
        "finished_at, exit_status, stdout_evidence, stderr, outcome FROM invocations WHERE case_id = ? "
        "ORDER BY started_at, rowid");
    st.bind(1, case_id.str());
    while (st.step()) {
      ToolInvocation inv;
      inv.id = InvocationId::parse(st.text(0));
      inv.plugin_id = st.text(1);
      inv.plugin_version = st.text(2);
      inv.case_id = case_id;
      inv.principal = PrincipalId::parse(st.text(3));
      inv.params = json::parse(st.text(4));
      for (const auto& t : json::parse(st.text(5))) inv.targets.push_back(EvidenceId::parse(t.get<std::string>()));
      inv.argv = json::parse(st.text(6)).get<std::vector<std::string>>();
      inv.started_at = Timestamp::parse(st.text(7)).value_or(Timestamp{});
      inv.finished_at = Timestamp::parse(st.text(8)).value_or(Timestamp{});
      inv.exit_status = static_cast<int>(st.integer(9));
      if (auto e = st.optional_text(10)) inv.stdout_evidence = EvidenceId::parse(*e);
      inv.stderr_capture = st.blob(11);
      inv.outcome = parse_tool_outcome(st.text(12));
      out.push_back(std::move(inv));
    }
    return out;
  });
}

}  // namespace custodian
