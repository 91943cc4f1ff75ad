// custodian: command-line front end over the C API.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "custodian/custodian.h"

using nlohmann::json;

namespace {

// Exit statuses by error class.
enum Exit {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kAuth = 3,
  kDenied = 4,
  kNotFound = 5,
  kIntegrity = 6,
  kInvalid = 7,
  kTool = 8,
  kStorage = 9,
  kEnvironment = 10,
};

int exit_for(cust_status s) {
  switch (s) {
    case CUST_OK: return kOk;
    case CUST_BAD_CREDENTIALS:
    case CUST_AUTH_REQUIRED: return kAuth;
    case CUST_ACCESS_DENIED: return kDenied;
    case CUST_UNKNOWN_CASE:
    case CUST_UNKNOWN_EVIDENCE:
    case CUST_UNKNOWN_PRINCIPAL:
    case CUST_UNKNOWN_OBJECT:
    case CUST_UNKNOWN_TARGET:
    case CUST_UNKNOWN_PLUGIN: return kNotFound;
    case CUST_DIGEST_MISMATCH:
    case CUST_SOURCE_CORRUPT:
    case CUST_INTEGRITY_FAILURE:
    case CUST_REFERENTIAL_FAILURE: return kIntegrity;
    case CUST_DIGEST_UNPARSEABLE:
    case CUST_RANGE_OUT_OF_BOUNDS:
    case CUST_EMPTY_BODY:
    case CUST_INVALID_ARGUMENT:
    case CUST_PARAM_INVALID:
    case CUST_PLAN_INVALID:
    case CUST_MANIFEST_INVALID:
    case CUST_CASE_CLOSED:
    case CUST_DUPLICATE:
    case CUST_DELETION_REFUSED: return kInvalid;
    case CUST_TOOL_FAILED:
    case CUST_TIMEOUT:
    case CUST_LATEX_COMPILE_FAILED: return kTool;
    case CUST_STORAGE_FAILURE:
    case CUST_INCOMPATIBLE_VERSION:
    case CUST_LOCKED: return kStorage;
    case CUST_LATEX_ENGINE_MISSING:
    case CUST_BIND_FAILURE:
    case CUST_BOOTSTRAP_REQUIRED: return kEnvironment;
    case CUST_INTERNAL: return kInternal;
  }
  return kInternal;
}

struct Failure {
  cust_status status;
  std::string message;
};

struct Reply {
  json body;
  std::vector<std::uint8_t> bytes;
  std::string media_type;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{CUST_INVALID_ARGUMENT, "cannot read " + path};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Failure{CUST_STORAGE_FAILURE, "cannot write " + path};
}

// key=value pairs into a JSON object of strings.
json pairs(const std::vector<std::string>& items) {
  json out = json::object();
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Failure{CUST_INVALID_ARGUMENT, "expected key=value, got '" + item + "'"};
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

class Session {
 public:
  std::string repo;
  std::string config_file;
  std::string user;
  std::string secret;
  std::string extra_config;  // appended key=value lines

  ~Session() {
    if (engine_ && !token_.empty()) cust_logout(engine_, token_.c_str());
    if (token_c_) cust_free(token_c_);
    if (engine_) cust_engine_close(engine_);
  }

  cust_engine* engine() {
    if (engine_) return engine_;
    std::string text = config_file.empty() ? std::string() : read_text_file(config_file);
    text += "\n" + extra_config;
    check(cust_engine_open(repo.empty() ? nullptr : repo.c_str(), text.c_str(), CUST_OPEN_ENVIRONMENT, &engine_));
    return engine_;
  }

  void login() {
    if (!token_.empty()) return;
    if (user.empty() || secret.empty()) {
      throw Failure{CUST_AUTH_REQUIRED, "credentials required: pass --user and --secret or set CUSTODIAN_USER and CUSTODIAN_SECRET"};
    }
    check(cust_login(engine(), user.c_str(), secret.c_str(), &token_c_));
    token_ = token_c_;
  }

  Reply call(const std::string& op, const json& args, const std::vector<std::uint8_t>& input = {}) {
    login();
    cust_result* result = nullptr;
    auto text = args.dump();
    check(cust_call(engine(), token_.c_str(), op.c_str(), text.c_str(), input.empty() ? nullptr : input.data(),
                    input.size(), &result));
    Reply r;
    r.body = json::parse(cust_result_json(result));
    std::size_t len = 0;
    const auto* bytes = cust_result_bytes(result, &len);
    if (bytes) r.bytes.assign(bytes, bytes + len);
    r.media_type = cust_result_media_type(result);
    cust_result_free(result);
    return r;
  }

  static void check(cust_status s) {
    if (s != CUST_OK) throw Failure{s, cust_last_error()};
  }

 private:
  cust_engine* engine_ = nullptr;
  char* token_c_ = nullptr;
  std::string token_;
};

bool json_mode = false;

std::string scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "-";
  return v.dump();
}

void print_object(const json& obj, const std::string& indent = "") {
  for (const auto& [k, v] : obj.items()) {
    if (v.is_object() || (v.is_array() && !v.empty() && v.front().is_object())) {
      std::cout << indent << k << ":\n";
      if (v.is_object()) {
        print_object(v, indent + "  ");
      } else {
        for (const auto& item : v) {
          print_object(item, indent + "  ");
          std::cout << "\n";
        }
      }
    } else if (v.is_array()) {
      std::cout << indent << k << ": " << v.dump() << "\n";
    } else {
      std::cout << indent << k << ": " << scalar(v) << "\n";
    }
  }
}

void emit(const json& body) {
  if (json_mode) {
    std::cout << body.dump(2) << "\n";
  } else if (body.is_array()) {
    for (const auto& item : body) {
      print_object(item);
      std::cout << "\n";
    }
  } else {
    print_object(body);
  }
}

void emit_events(const json& events) {
  if (json_mode) {
    std::cout << events.dump(2) << "\n";
    return;
  }
  for (const auto& e : events) {
    std::cout << e["seq"].get<std::uint64_t>() << "  " << scalar(e["timestamp"]) << "  " << scalar(e["kind"]) << "  "
              << scalar(e["principal"]) << "  " << scalar(e["evidence_id"]) << "  " << scalar(e["description"]) << "\n";
  }
}

void emit_evidence_rows(const json& items) {
  if (json_mode) {
    std::cout << items.dump(2) << "\n";
    return;
  }
  for (const auto& e : items) {
    std::cout << scalar(e["id"]) << "  " << e["size_bytes"].get<std::uint64_t>() << "  " << scalar(e["sha1"]) << "  "
              << scalar(e["status"]) << "  " << scalar(e["display_name"]) << "\n";
  }
}

void write_stdout(const std::vector<std::uint8_t>& bytes) {
  std::cout.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  std::cout.flush();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"custodian: forensic case engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cust_version()));

  Session s;
  app.add_option("--repo", s.repo, "Repository directory")->envname("CUSTODIAN_REPO");
  app.add_option("--config", s.config_file, "key=value configuration file")->envname("CUSTODIAN_CONFIG");
  app.add_option("--user", s.user, "Principal username")->envname("CUSTODIAN_USER");
  app.add_option("--secret", s.secret, "Principal secret")->envname("CUSTODIAN_SECRET");
  app.add_flag("--json", json_mode, "Machine-readable output");

  std::function<int()> action;

  // ---- init
  auto* init = app.add_subcommand("init", "Create a repository and its first administrator");
  std::string admin_user, admin_secret;
  init->add_option("--admin-user", admin_user, "Administrator username")->envname("CUSTODIAN_ADMIN_USER");
  init->add_option("--admin-secret", admin_secret, "Administrator secret")->envname("CUSTODIAN_ADMIN_SECRET");
  init->callback([&] {
    action = [&] {
      if (!admin_user.empty()) s.extra_config += "admin_user=" + admin_user + "\n";
      if (!admin_secret.empty()) s.extra_config += "admin_secret=" + admin_secret + "\n";
      s.engine();
      emit({{"repository", s.repo}, {"version", cust_version()}});
      return kOk;
    };
  });

  // ---- serve
  auto* serve = app.add_subcommand("serve", "Run the local HTTP/JSON service");
  std::string bind_address;
  int port = -1;
  bool allow_remote = false;
  std::string static_dir;
  serve->add_option("--bind", bind_address, "Bind address (loopback by default)");
  serve->add_option("--port", port, "TCP port; 0 picks a free one");
  serve->add_flag("--allow-remote", allow_remote, "Permit a non-loopback bind address");
  serve->add_option("--static-dir", static_dir, "Directory of web UI assets");
  serve->callback([&] {
    action = [&] {
      auto* eng = s.engine();
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      cust_server* server = nullptr;
      int bound = 0;
      Session::check(cust_serve(eng, bind_address.empty() ? nullptr : bind_address.c_str(), port, allow_remote,
                                static_dir.empty() ? nullptr : static_dir.c_str(), &server, &bound));
      std::cout << "listening on port " << bound << std::endl;
      int sig = 0;
      sigwait(&set, &sig);
      cust_server_stop(server);
      cust_server_wait(server);
      return kOk;
    };
  });

  // ---- case
  auto* cs = app.add_subcommand("case", "Cases, investigators, notes and report sections");
  cs->require_subcommand(1);
  std::string case_id, details, description, text_arg, section, evidence_arg, principal_arg;

  auto* cs_create = cs->add_subcommand("create", "Open a new case");
  cs_create->add_option("--details", details, "Case details")->required();
  cs_create->add_option("--description", description, "Case description");
  cs_create->callback([&] {
    action = [&] {
      emit(s.call("cases.create", {{"details", details}, {"description", description}}).body);
      return kOk;
    };
  });

  auto* cs_list = cs->add_subcommand("list", "List visible cases");
  cs_list->callback([&] {
    action = [&] {
      auto cases = s.call("cases.list", json::object()).body["cases"];
      if (json_mode) {
        emit(cases);
      } else {
        for (const auto& c : cases) {
          std::cout << scalar(c["id"]) << "  " << scalar(c["status"]) << "  " << scalar(c["details"]) << "\n";
        }
      }
      return kOk;
    };
  });

  auto* cs_show = cs->add_subcommand("show", "Show one case");
  cs_show->add_option("case_id", case_id)->required();
  cs_show->callback([&] {
    action = [&] {
      emit(s.call("cases.get", {{"case_id", case_id}}).body);
      return kOk;
    };
  });

  auto* cs_close = cs->add_subcommand("close", "Close a case");
  cs_close->add_option("case_id", case_id)->required();
  cs_close->callback([&] {
    action = [&] {
      emit(s.call("cases.close", {{"case_id", case_id}}).body);
      return kOk;
    };
  });

  auto* cs_inv = cs->add_subcommand("add-investigator", "Add an investigator to a case");
  cs_inv->add_option("case_id", case_id)->required();
  cs_inv->add_option("username", principal_arg)->required();
  cs_inv->callback([&] {
    action = [&] {
      emit(s.call("cases.add_investigator", {{"case_id", case_id}, {"username", principal_arg}}).body);
      return kOk;
    };
  });

  auto* cs_section = cs->add_subcommand("section", "Show or set report section text");
  cs_section->add_option("case_id", case_id)->required();
  cs_section->add_option("section", section, "EXECUTIVE_SUMMARY, INTRODUCTION or CONCLUSION");
  cs_section->add_option("--text", text_arg, "New section text");
  cs_section->callback([&] {
    action = [&] {
      if (!cs_section->count("--text")) {
        emit(s.call("cases.sections.get", {{"case_id", case_id}}).body);
      } else {
        if (section.empty()) throw Failure{CUST_INVALID_ARGUMENT, "a section name is required with --text"};
        emit(s.call("cases.sections.set", {{"case_id", case_id}, {"section", section}, {"text", text_arg}}).body);
      }
      return kOk;
    };
  });

  auto* cs_note = cs->add_subcommand("note", "Attach an investigative note");
  cs_note->add_option("case_id", case_id)->required();
  cs_note->add_option("--evidence", evidence_arg, "Evidence item the note is about");
  cs_note->add_option("--section", section, "Report section the note is about");
  cs_note->add_option("--body", text_arg, "Note text")->required();
  cs_note->callback([&] {
    action = [&] {
      json args{{"case_id", case_id}, {"body", text_arg}};
      if (!evidence_arg.empty()) args["evidence_id"] = evidence_arg;
      if (!section.empty()) args["section"] = section;
      emit(s.call("notes.attach", args).body);
      return kOk;
    };
  });

  auto* cs_notes = cs->add_subcommand("notes", "List a case's notes");
  cs_notes->add_option("case_id", case_id)->required();
  cs_notes->callback([&] {
    action = [&] {
      emit(s.call("notes.list", {{"case_id", case_id}}).body["notes"]);
      return kOk;
    };
  });

  // ---- evidence
  auto* ev = app.add_subcommand("evidence", "Acquire, inspect and verify evidence");
  ev->require_subcommand(1);
  std::string file_arg, name_arg, source_arg, digest_file, mode_arg = "HEX", encoding_arg = "UTF8", out_arg;
  std::uint64_t offset_arg = 0, length_arg = 0;
  bool with_events = false;

  auto* ev_ingest = ev->add_subcommand("ingest", "Store a file as a new evidence item ('-' reads stdin)");
  ev_ingest->add_option("case_id", case_id)->required();
  ev_ingest->add_option("file", file_arg)->required();
  ev_ingest->add_option("--name", name_arg, "Display name");
  ev_ingest->add_option("--source", source_arg, "Source description");
  ev_ingest->callback([&] {
    action = [&] {
      json args{{"case_id", case_id}};
      if (!name_arg.empty()) args["name"] = name_arg;
      if (!source_arg.empty()) args["source"] = source_arg;
      std::vector<std::uint8_t> input;
      if (file_arg == "-") {
        if (name_arg.empty()) throw Failure{CUST_INVALID_ARGUMENT, "--name is required when reading stdin"};
        input.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
        if (source_arg.empty()) args["source"] = "standard input";
      } else {
        args["path"] = file_arg;
      }
      emit(s.call("evidence.ingest", args, input).body);
      return kOk;
    };
  });

  auto* ev_import = ev->add_subcommand("import", "Import a file accompanied by a SHA-1 digest file");
  ev_import->add_option("case_id", case_id)->required();
  ev_import->add_option("file", file_arg)->required();
  ev_import->add_option("--digest-file", digest_file, "sha1sum-style digest file")->required();
  ev_import->add_option("--name", name_arg, "Display name");
  ev_import->callback([&] {
    action = [&] {
      json args{{"case_id", case_id}, {"path", file_arg}, {"sidecar_path", digest_file}};
      if (!name_arg.empty()) args["name"] = name_arg;
      emit(s.call("evidence.import", args).body);
      return kOk;
    };
  });

  auto* ev_list = ev->add_subcommand("list", "List a case's evidence");
  ev_list->add_option("case_id", case_id)->required();
  ev_list->callback([&] {
    action = [&] {
      emit_evidence_rows(s.call("evidence.list", {{"case_id", case_id}}).body["evidence"]);
      return kOk;
    };
  });

  auto* ev_show = ev->add_subcommand("show", "Show one evidence item");
  ev_show->add_option("evidence_id", evidence_arg)->required();
  ev_show->add_flag("--events", with_events, "Include its custody events");
  ev_show->callback([&] {
    action = [&] {
      auto item = s.call("evidence.get", {{"evidence_id", evidence_arg}}).body;
      if (with_events) item["events"] = s.call("evidence.events", {{"evidence_id", evidence_arg}}).body["events"];
      emit(item);
      return kOk;
    };
  });

  auto* ev_verify = ev->add_subcommand("verify", "Re-hash an item and record the outcome");
  ev_verify->add_option("evidence_id", evidence_arg)->required();
  ev_verify->callback([&] {
    action = [&] {
      auto r = s.call("evidence.verify", {{"evidence_id", evidence_arg}}).body;
      auto outcome = r["outcome"].get<std::string>();
      if (json_mode) {
        emit(r);
      } else {
        std::cout << outcome << "\n";
      }
      return outcome == "INTACT" ? kOk : kIntegrity;
    };
  });

  auto* ev_clone = ev->add_subcommand("clone", "Copy an item in full");
  ev_clone->add_option("evidence_id", evidence_arg)->required();
  ev_clone->add_option("--name", name_arg, "Name of the clone");
  ev_clone->callback([&] {
    action = [&] {
      json args{{"evidence_id", evidence_arg}};
      if (!name_arg.empty()) args["name"] = name_arg;
      emit(s.call("evidence.clone", args).body);
      return kOk;
    };
  });

  auto* ev_extract = ev->add_subcommand("extract", "Extract a byte range into a new item");
  ev_extract->add_option("evidence_id", evidence_arg)->required();
  ev_extract->add_option("--offset", offset_arg)->required();
  ev_extract->add_option("--length", length_arg)->required();
  ev_extract->add_option("--name", name_arg, "Name of the extracted item");
  ev_extract->callback([&] {
    action = [&] {
      json args{{"evidence_id", evidence_arg}, {"offset", offset_arg}, {"length", length_arg}};
      if (!name_arg.empty()) args["name"] = name_arg;
      emit(s.call("evidence.extract", args).body);
      return kOk;
    };
  });

  auto* ev_render = ev->add_subcommand("render", "Display a window as ASCII, UNICODE or HEX");
  ev_render->add_option("evidence_id", evidence_arg)->required();
  ev_render->add_option("--mode", mode_arg, "ASCII, UNICODE or HEX");
  ev_render->add_option("--encoding", encoding_arg, "UTF8, UTF16LE or UTF16BE (UNICODE mode)");
  ev_render->add_option("--offset", offset_arg);
  ev_render->add_option("--length", length_arg, "Window length (default 4096)");
  ev_render->callback([&] {
    action = [&] {
      for (auto& ch : mode_arg) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      for (auto& ch : encoding_arg) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      json args{{"evidence_id", evidence_arg}, {"mode", mode_arg}, {"encoding", encoding_arg}, {"offset", offset_arg}};
      if (ev_render->count("--length")) args["length"] = length_arg;
      auto r = s.call("evidence.render", args);
      if (json_mode) {
        emit(r.body);
      } else {
        write_stdout(r.bytes);
      }
      return kOk;
    };
  });

  auto* ev_read = ev->add_subcommand("read", "Write raw bytes of a window to stdout or a file");
  ev_read->add_option("evidence_id", evidence_arg)->required();
  ev_read->add_option("--offset", offset_arg);
  ev_read->add_option("--length", length_arg, "Window length (default 4096, at most 1 MiB)");
  ev_read->add_option("--out", out_arg, "Output file");
  ev_read->callback([&] {
    action = [&] {
      json args{{"evidence_id", evidence_arg}, {"offset", offset_arg}};
      if (ev_read->count("--length")) args["length"] = length_arg;
      auto r = s.call("evidence.read", args);
      if (!out_arg.empty()) {
        write_file(out_arg, r.bytes);
      } else if (json_mode) {
        emit(r.body);
      } else {
        write_stdout(r.bytes);
      }
      return kOk;
    };
  });

  // ---- plugin
  auto* pl = app.add_subcommand("plugin", "External tools");
  pl->require_subcommand(1);
  std::string plugin_id, params_json, plan_file;
  std::vector<std::string> targets, param_pairs, unset_names;
  std::uint64_t timeout_s = 0;

  auto* pl_list = pl->add_subcommand("list", "List registered tools");
  pl_list->callback([&] {
    action = [&] {
      auto r = s.call("plugins.list", json::object()).body;
      if (json_mode) {
        emit(r);
      } else {
        for (const auto& p : r["plugins"]) {
          std::cout << scalar(p["plugin_id"]) << "  " << scalar(p["version"]) << "  " << scalar(p["kind"]) << "  "
                    << scalar(p["menu_label"]) << "\n";
        }
        for (const auto& d : r["diagnostics"]) {
          std::cerr << "skipped " << scalar(d["path"]) << ": " << scalar(d["code"]) << ": " << scalar(d["message"])
                    << "\n";
        }
      }
      return kOk;
    };
  });

  auto* pl_show = pl->add_subcommand("show", "Show a tool's manifest and stored defaults");
  pl_show->add_option("plugin_id", plugin_id)->required();
  pl_show->callback([&] {
    action = [&] {
      auto m = s.call("plugins.get", {{"plugin_id", plugin_id}}).body;
      m["defaults"] = s.call("plugins.defaults.get", {{"plugin_id", plugin_id}}).body["values"];
      emit(m);
      return kOk;
    };
  });

  auto* pl_defaults = pl->add_subcommand("defaults", "Show or change a tool's stored defaults");
  pl_defaults->add_option("plugin_id", plugin_id)->required();
  pl_defaults->add_option("--set", param_pairs, "name=value");
  pl_defaults->add_option("--unset", unset_names, "Parameter to clear");
  pl_defaults->callback([&] {
    action = [&] {
      if (param_pairs.empty() && unset_names.empty()) {
        emit(s.call("plugins.defaults.get", {{"plugin_id", plugin_id}}).body);
        return kOk;
      }
      auto text = pairs(param_pairs);
      for (const auto& n : unset_names) text[n] = nullptr;
      emit(s.call("plugins.defaults.set", {{"plugin_id", plugin_id}, {"values_text", text}}).body);
      return kOk;
    };
  });

  auto print_invocation = [](const json& inv) {
    std::cout << scalar(inv["invocation_id"]) << "  " << scalar(inv["outcome"]) << "  exit " << scalar(inv["exit_status"])
              << "  output " << scalar(inv["stdout_evidence"]) << "\n";
  };

  auto* pl_run = pl->add_subcommand("run", "Run a tool");
  pl_run->add_option("plugin_id", plugin_id)->required();
  pl_run->add_option("--case", case_id, "Case")->required();
  pl_run->add_option("--target", targets, "Evidence item to analyse (repeatable)");
  pl_run->add_option("--param", param_pairs, "name=value (repeatable)");
  pl_run->add_option("--params-json", params_json, "Parameters as a JSON object");
  pl_run->add_option("--timeout", timeout_s, "Timeout in seconds");
  pl_run->callback([&] {
    action = [&] {
      json args{{"plugin_id", plugin_id}, {"case_id", case_id}, {"targets", targets}, {"params_text", pairs(param_pairs)}};
      if (!params_json.empty()) {
        try {
          args["params"] = json::parse(params_json);
        } catch (const json::parse_error& e) {
          throw Failure{CUST_INVALID_ARGUMENT, std::string("--params-json: ") + e.what()};
        }
      }
      if (timeout_s) args["timeout_seconds"] = timeout_s;
      auto r = s.call("plugins.run", args).body;
      int status = kOk;
      for (const auto& inv : r["invocations"]) {
        if (inv["outcome"] != "OK") status = kTool;
      }
      if (json_mode) {
        emit(r);
      } else {
        for (const auto& inv : r["invocations"]) print_invocation(inv);
      }
      return status;
    };
  });

  auto* pl_batch = pl->add_subcommand("batch", "Run a batch plan (JSON list of steps)");
  pl_batch->add_option("plan", plan_file, "Plan file")->required();
  pl_batch->add_option("--case", case_id, "Case")->required();
  pl_batch->callback([&] {
    action = [&] {
      json plan;
      try {
        plan = json::parse(read_text_file(plan_file));
      } catch (const json::parse_error& e) {
        throw Failure{CUST_PLAN_INVALID, std::string("plan is not valid JSON: ") + e.what()};
      }
      json steps = plan.is_object() && plan.contains("steps") ? plan["steps"] : plan;
      auto r = s.call("plugins.batch", {{"case_id", case_id}, {"steps", steps}}).body;
      int status = kOk;
      for (const auto& step : r["steps"]) {
        if (step["outcome"] != "OK") status = kTool;
      }
      if (json_mode) {
        emit(r);
      } else {
        for (const auto& step : r["steps"]) {
          std::cout << "step " << step["index"].get<int>() << "  " << scalar(step["plugin_id"]) << "  "
                    << scalar(step["outcome"]);
          if (step.contains("error")) std::cout << "  " << scalar(step["error"]["message"]);
          std::cout << "\n";
        }
      }
      return status;
    };
  });

  // ---- report
  auto* rp = app.add_subcommand("report", "Generate a case report");
  std::string format_arg = "LATEX";
  std::vector<std::string> evidence_sel, excerpts;
  bool no_notes = false, no_custody = false, no_printout = false;
  rp->add_option("case_id", case_id)->required();
  rp->add_option("--format", format_arg, "LATEX or PDF");
  rp->add_option("--evidence", evidence_sel, "Selected evidence item (repeatable; default all readable)");
  rp->add_option("--excerpt", excerpts, "EVIDENCE:OFFSET:LENGTH hexdump window (repeatable)");
  rp->add_flag("--no-notes", no_notes);
  rp->add_flag("--no-custody", no_custody);
  rp->add_flag("--no-printout", no_printout);
  rp->add_option("--out", out_arg, "Output file (default: artifact name in the current directory)");
  rp->callback([&] {
    action = [&] {
      for (auto& ch : format_arg) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      json ex = json::object();
      for (const auto& e : excerpts) {
        auto a = e.find(':');
        auto b = a == std::string::npos ? a : e.find(':', a + 1);
        if (b == std::string::npos) throw Failure{CUST_INVALID_ARGUMENT, "--excerpt expects EVIDENCE:OFFSET:LENGTH"};
        ex[e.substr(0, a)].push_back({{"offset", e.substr(a + 1, b - a - 1)}, {"length", e.substr(b + 1)}});
      }
      json args{{"case_id", case_id},
                {"evidence", evidence_sel},
                {"format", format_arg},
                {"include", {{"notes", !no_notes}, {"custody_table", !no_custody}, {"evidence_printout", !no_printout}}}};
      if (!ex.empty()) args["excerpts"] = ex;
      auto r = s.call("reports.generate", args);
      auto path = out_arg.empty() ? r.body["file_name"].get<std::string>() : out_arg;
      if (path == "-") {
        write_stdout(r.bytes);
        return kOk;
      }
      write_file(path, r.bytes);
      r.body["written_to"] = path;
      emit(r.body);
      return kOk;
    };
  });

  // ---- ledger
  auto* lg = app.add_subcommand("ledger", "Chain of custody");
  lg->require_subcommand(1);
  std::uint64_t from_seq = 1, limit = 1000;
  std::string export_file;

  auto* lg_show = lg->add_subcommand("show", "List custody events");
  lg_show->add_option("--evidence", evidence_arg, "Only events touching this item");
  lg_show->add_option("--from", from_seq, "First seq");
  lg_show->add_option("--limit", limit, "Maximum events");
  lg_show->callback([&] {
    action = [&] {
      if (!evidence_arg.empty()) {
        emit_events(s.call("evidence.events", {{"evidence_id", evidence_arg}}).body["events"]);
      } else {
        emit_events(s.call("ledger.list", {{"from_seq", from_seq}, {"limit", limit}}).body["events"]);
      }
      return kOk;
    };
  });

  auto print_chain = [](const json& st) {
    if (json_mode) {
      std::cout << st.dump(2) << "\n";
    } else if (st["status"] == "OK") {
      std::cout << "OK " << st["events"].get<std::uint64_t>() << " events\n";
    } else {
      std::cout << "BROKEN_AT " << st["broken_at"].get<std::uint64_t>() << "\n";
    }
    return st["status"] == "OK" ? kOk : kIntegrity;
  };

  auto* lg_verify = lg->add_subcommand("verify", "Recompute the hash chain");
  lg_verify->add_option("--export-file", export_file, "Check an exported ledger file offline instead");
  lg_verify->callback([&] {
    action = [&] {
      if (!export_file.empty()) {
        std::uint64_t events = 0, broken = 0;
        auto st = cust_ledger_verify_export(export_file.c_str(), &events, &broken);
        if (st != CUST_OK && st != CUST_INTEGRITY_FAILURE) throw Failure{st, cust_last_error()};
        json j = broken ? json{{"status", "BROKEN_AT"}, {"broken_at", broken}, {"events", events}}
                        : json{{"status", "OK"}, {"events", events}};
        return print_chain(j);
      }
      return print_chain(s.call("ledger.verify", json::object()).body);
    };
  });

  auto* lg_export = lg->add_subcommand("export", "Write the ledger export file");
  lg_export->add_option("--out", out_arg, "Also copy the export to this file ('-' for stdout)");
  lg_export->callback([&] {
    action = [&] {
      auto r = s.call("ledger.export", json::object());
      if (out_arg == "-") {
        write_stdout(r.bytes);
        return kOk;
      }
      if (!out_arg.empty()) {
        write_file(out_arg, r.bytes);
        r.body["written_to"] = out_arg;
      }
      emit(r.body);
      return kOk;
    };
  });

  // ---- admin
  auto* ad = app.add_subcommand("admin", "Principals, access control entries and default rights");
  ad->require_subcommand(1);
  std::string role_arg, new_secret, display_name, category_arg, object_arg, right_arg;
  bool deny = false;

  auto* ad_user = ad->add_subcommand("user", "Create or list principals");
  ad_user->require_subcommand(1);
  auto* ad_user_add = ad_user->add_subcommand("add", "Create a principal");
  ad_user_add->add_option("username", principal_arg)->required();
  ad_user_add->add_option("--role", role_arg, "ADMINISTRATOR, INVESTIGATOR or AUDITOR")->required();
  ad_user_add->add_option("--password", new_secret, "Secret for the new principal")->required();
  ad_user_add->add_option("--display-name", display_name);
  ad_user_add->callback([&] {
    action = [&] {
      json args{{"username", principal_arg}, {"role", role_arg}, {"secret", new_secret}};
      if (!display_name.empty()) args["display_name"] = display_name;
      emit(s.call("admin.principals.create", args).body);
      return kOk;
    };
  });
  auto* ad_user_list = ad_user->add_subcommand("list", "List principals");
  ad_user_list->callback([&] {
    action = [&] {
      auto r = s.call("admin.principals.list", json::object()).body["principals"];
      if (json_mode) {
        emit(r);
      } else {
        for (const auto& p : r) {
          std::cout << scalar(p["id"]) << "  " << scalar(p["role"]) << "  " << scalar(p["username"]) << "\n";
        }
      }
      return kOk;
    };
  });

  auto* ad_grant = ad->add_subcommand("grant", "Add or replace an access control entry");
  ad_grant->add_option("username", principal_arg)->required();
  ad_grant->add_option("category", category_arg, "CASE, EVIDENCE or REPORT_INFO")->required();
  ad_grant->add_option("object_id", object_arg)->required();
  ad_grant->add_option("right", right_arg, "VIEW, READ or WRITE")->required();
  ad_grant->add_flag("--deny", deny, "Record a DENY entry");
  ad_grant->callback([&] {
    action = [&] {
      emit(s.call("admin.acl.grant", {{"username", principal_arg},
                                      {"category", category_arg},
                                      {"object_id", object_arg},
                                      {"right", right_arg},
                                      {"effect", deny ? "DENY" : "ALLOW"}})
               .body);
      return kOk;
    };
  });

  auto* ad_revoke = ad->add_subcommand("revoke", "Remove an access control entry");
  ad_revoke->add_option("username", principal_arg)->required();
  ad_revoke->add_option("category", category_arg)->required();
  ad_revoke->add_option("object_id", object_arg)->required();
  ad_revoke->add_option("right", right_arg)->required();
  ad_revoke->callback([&] {
    action = [&] {
      emit(s.call("admin.acl.revoke", {{"username", principal_arg},
                                       {"category", category_arg},
                                       {"object_id", object_arg},
                                       {"right", right_arg}})
               .body);
      return kOk;
    };
  });

  auto* ad_acl = ad->add_subcommand("acl", "List access control entries");
  ad_acl->callback([&] {
    action = [&] {
      emit(s.call("admin.acl.list", json::object()).body["entries"]);
      return kOk;
    };
  });

  auto* ad_default = ad->add_subcommand("default", "Show or set default rights");
  ad_default->add_option("category", category_arg, "CASE, EVIDENCE or REPORT_INFO");
  ad_default->add_option("right", right_arg, "NONE, VIEW, READ or WRITE");
  ad_default->add_option("--role", role_arg, "Set the role default instead of the category default");
  ad_default->callback([&] {
    action = [&] {
      if (category_arg.empty()) {
        emit(s.call("admin.defaults.get", json::object()).body);
        return kOk;
      }
      if (right_arg.empty()) throw Failure{CUST_INVALID_ARGUMENT, "a right (or NONE) is required"};
      json args{{"category", category_arg}, {"right", right_arg}, {"scope", role_arg.empty() ? "CATEGORY" : "ROLE"}};
      if (!role_arg.empty()) args["role"] = role_arg;
      emit(s.call("admin.defaults.set", args).body);
      return kOk;
    };
  });

  // ---- collect: acquisition only, no service and no LaTeX engine needed
  auto* co = app.add_subcommand("collect", "Acquire files into a case and verify them");
  std::vector<std::string> files;
  co->add_option("case_id", case_id)->required();
  co->add_option("files", files)->required();
  co->add_option("--source", source_arg, "Source description for every file");
  co->callback([&] {
    action = [&] {
      json out = json::array();
      int status = kOk;
      for (const auto& f : files) {
        json args{{"case_id", case_id}, {"path", f}};
        if (!source_arg.empty()) args["source"] = source_arg;
        auto item = s.call("evidence.ingest", args).body;
        auto v = s.call("evidence.verify", {{"evidence_id", item["id"]}}).body;
        if (v["outcome"] != "INTACT") status = kIntegrity;
        item["verify"] = v["outcome"];
        out.push_back(item);
      }
      if (json_mode) {
        emit(out);
      } else {
        for (const auto& i : out) {
          std::cout << scalar(i["id"]) << "  " << scalar(i["sha1"]) << "  " << scalar(i["verify"]) << "  "
                    << scalar(i["display_name"]) << "\n";
        }
      }
      return status;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return action ? action() : kUsage;
  } catch (const Failure& f) {
    if (json_mode) {
      std::cout << json{{"error", {{"code", cust_status_name(f.status)}, {"message", f.message}}}}.dump(2) << "\n";
    }
    std::cerr << "error: " << cust_status_name(f.status) << ": " << f.message << "\n";
    return exit_for(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: INTERNAL: " << e.what() << "\n";
    return kInternal;
  }
}
