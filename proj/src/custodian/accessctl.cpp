#include "custodian/accessctl.hpp"

#include "custodian/digest.hpp"
#include "custodian/hex.hpp"

namespace custodian {

Decision decide(Role role, Category category, Right requested,
                std::span<const AccessControlEntry> entries, const DefaultRightsPolicy& policy) {
  const int want = static_cast<int>(requested);
  for (const auto& e : entries) {
    if (e.effect == Effect::Deny && static_cast<int>(e.right) <= want) return Decision::Deny;
  }
  for (const auto& e : entries) {
    if (e.effect == Effect::Allow && static_cast<int>(e.right) >= want) return Decision::Allow;
  }
  if (implies(policy.role_default(role, category), requested)) return Decision::Allow;
  if (implies(policy.category_default(category), requested)) return Decision::Allow;
  return Decision::Deny;
}

namespace {

std::string role_scope(Role r) { return "ROLE:" + std::string(to_string(r)); }

Principal row_to_principal(const store::Statement& st) {
  Principal p;
  p.id = PrincipalId::parse(st.text(0));
  p.username = st.text(1);
  p.display_name = st.text(2);
  p.role = parse_role(st.text(3));
  p.created_at = Timestamp::parse(st.text(4)).value_or(Timestamp{});
  return p;
}

constexpr const char* kPrincipalCols = "SELECT id, username, display_name, role, created_at FROM principals ";

ErrorCode not_found_code(Category c) {
  return c == Category::Evidence ? ErrorCode::UnknownEvidence : ErrorCode::UnknownCase;
}

std::string describe(const ObjectRef& o) { return std::string(to_string(o.category)) + " " + o.id; }

}  // namespace

AccessControl::AccessControl(store::Store& store, Ledger& ledger, const Clock& clock,
                             AccessControlConfig config)
    : store_(store), ledger_(ledger), clock_(clock), config_(config) {
  if (config_.kdf_iterations < kMinIterations) config_.kdf_iterations = kMinIterations;
}

bool AccessControl::has_principals() const {
  return store_.read([](store::Database& db) {
    auto st = db.prepare("SELECT 1 FROM principals LIMIT 1");
    return st.step();
  });
}

Principal AccessControl::insert_principal(store::Database& db, const std::string& username,
                                          const std::string& display_name, Role role,
                                          const std::string& secret) {
  if (username.empty()) fail(ErrorCode::InvalidArgument, "username must be non-empty");
  if (secret.empty()) fail(ErrorCode::InvalidArgument, "secret must be non-empty");
  {
    auto st = db.prepare("SELECT 1 FROM principals WHERE username = ?");
    st.bind(1, username);
    if (st.step()) fail(ErrorCode::Duplicate, "username '" + username + "' already exists");
  }
  Principal p;
  p.id = PrincipalId::generate();
  p.username = username;
  p.display_name = display_name.empty() ? username : display_name;
  p.role = role;
  p.created_at = clock_.now();
  auto salt = random_bytes(kSaltBytes);
  auto credential = pbkdf2_sha256(secret, salt, config_.kdf_iterations, 32);
  auto ins = db.prepare(
      "INSERT INTO principals (id, username, display_name, role, salt, iterations, credential, created_at) "
      "VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
  ins.bind(1, p.id.str())
      .bind(2, p.username)
      .bind(3, p.display_name)
      .bind(4, to_string(role))
      .bind(5, std::span<const std::uint8_t>(salt))
      .bind(6, static_cast<std::int64_t>(config_.kdf_iterations))
      .bind(7, std::span<const std::uint8_t>(credential))
      .bind(8, p.created_at.iso8601());
  ins.run();
  return p;
}

Principal AccessControl::create_principal(const PrincipalId& admin, const std::string& username,
                                          const std::string& display_name, Role role,
                                          const std::string& secret) {
  std::lock_guard lock(admin_mu_);
  return store_.write([&](store::Database& db) {
    require_admin(db, admin);
    auto p = insert_principal(db, username, display_name, role, secret);
    ledger_.append(db, EventDraft{.principal = admin,
                                  .kind = EventKind::AclChange,
                                  .description = "principal created: " + p.username + " (" +
                                                 std::string(to_string(role)) + ") id " + p.id.str()});
    return p;
  });
}

Principal AccessControl::principal(const PrincipalId& id) const {
  return store_.read([&](store::Database& db) { return principal(db, id); });
}

Principal AccessControl::principal(store::Database& db, const PrincipalId& id) const {
  auto st = db.prepare(std::string(kPrincipalCols) + "WHERE id = ?");
  st.bind(1, id.str());
  if (!st.step()) fail(ErrorCode::UnknownPrincipal, "unknown principal " + id.str());
  return row_to_principal(st);
}

std::optional<Principal> AccessControl::find_username(const std::string& username) const {
  return store_.read([&](store::Database& db) -> std::optional<Principal> {
    auto st = db.prepare(std::string(kPrincipalCols) + "WHERE username = ?");
    st.bind(1, username);
    if (!st.step()) return std::nullopt;
    return row_to_principal(st);
  });
}

std::vector<Principal> AccessControl::principals(const PrincipalId& admin) const {
  return store_.read([&](store::Database& db) {
    require_admin(db, admin);
    std::vector<Principal> out;
    auto st = db.prepare(std::string(kPrincipalCols) + "ORDER BY username");
    while (st.step()) out.push_back(row_to_principal(st));
    return out;
  });
}

SessionToken AccessControl::authenticate(const std::string& username, const std::string& secret) {
  struct Stored {
    PrincipalId id;
    std::vector<std::uint8_t> salt;
    int iterations;
    std::vector<std::uint8_t> credential;
  };
  auto stored = store_.read([&](store::Database& db) -> std::optional<Stored> {
    auto st = db.prepare("SELECT id, salt, iterations, credential FROM principals WHERE username = ?");
    st.bind(1, username);
    if (!st.step()) return std::nullopt;
    return Stored{PrincipalId::parse(st.text(0)), st.blob(1), static_cast<int>(st.integer(2)), st.blob(3)};
  });

  // The unknown-user path derives against a throwaway salt so both failure
  // modes cost the same.
  bool ok = false;
  if (stored) {
    auto derived = pbkdf2_sha256(secret, stored->salt, stored->iterations, stored->credential.size());
    ok = constant_time_equal(derived, stored->credential);
  } else {
    auto dummy_salt = random_bytes(kSaltBytes);
    auto derived = pbkdf2_sha256(secret, dummy_salt, config_.kdf_iterations, 32);
    (void)derived;
  }

  store_.write([&](store::Database& db) {
    EventDraft d{.kind = EventKind::Auth};
    if (ok) {
      d.principal = stored->id;
      d.description = "login succeeded for " + username;
    } else {
      if (stored) d.principal = stored->id;
      d.description = "login failed for " + username;
    }
    ledger_.append(db, d);
  });
  if (!ok) fail(ErrorCode::BadCredentials, "bad credentials");

  SessionToken token{random_id_hex(), stored->id, Timestamp{}};
  auto now = clock_.now().ms;
  token.expires_at = Timestamp{now + config_.session_idle.count()};
  std::lock_guard lock(sessions_mu_);
  sessions_[token.token] = Session{stored->id, now};
  return token;
}

PrincipalId AccessControl::resolve_session(const std::string& token) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) fail(ErrorCode::AuthRequired, "authentication required");
  auto now = clock_.now().ms;
  if (now - it->second.last_used_ms > config_.session_idle.count()) {
    sessions_.erase(it);
    fail(ErrorCode::AuthRequired, "authentication required");
  }
  it->second.last_used_ms = now;
  return it->second.principal;
}

void AccessControl::logout(const std::string& token) {
  std::lock_guard lock(sessions_mu_);
  sessions_.erase(token);
}

bool AccessControl::object_exists(store::Database& db, const ObjectRef& object) const {
  const char* sql = object.category == Category::Evidence ? "SELECT 1 FROM evidence WHERE id = ?"
                                                          : "SELECT 1 FROM cases WHERE id = ?";
  auto st = db.prepare(sql);
  st.bind(1, object.id);
  return st.step();
}

DefaultRightsPolicy AccessControl::policy() const {
  return store_.read([&](store::Database& db) { return policy(db); });
}

DefaultRightsPolicy AccessControl::policy(store::Database& db) const {
  DefaultRightsPolicy p;
  auto st = db.prepare("SELECT scope, category, right FROM default_rights");
  while (st.step()) {
    auto scope = st.text(0);
    auto cat = static_cast<int>(parse_category(st.text(1)));
    MaybeRight r;
    if (!st.is_null(2)) r = parse_right(st.text(2));
    if (scope == "CATEGORY") {
      p.category_defaults[cat] = r;
    } else if (scope.rfind("ROLE:", 0) == 0) {
      p.role_defaults[static_cast<int>(parse_role(scope.substr(5)))][cat] = r;
    }
  }
  return p;
}

Decision AccessControl::authorize(const PrincipalId& principal, Right right, const ObjectRef& object) const {
  return store_.read([&](store::Database& db) { return authorize(db, principal, right, object); });
}

Decision AccessControl::authorize(store::Database& db, const PrincipalId& principal_id, Right right,
                                  const ObjectRef& object) const {
  auto who = principal(db, principal_id);
  if (!object_exists(db, object)) fail(ErrorCode::UnknownObject, "unknown object " + describe(object));
  std::vector<AccessControlEntry> entries;
  auto st = db.prepare(
      "SELECT right, effect FROM acl_entries WHERE principal_id = ? AND category = ? AND object_id = ?");
  st.bind(1, principal_id.str()).bind(2, to_string(object.category)).bind(3, object.id);
  while (st.step()) {
    entries.push_back({principal_id, object, parse_right(st.text(0)), parse_effect(st.text(1))});
  }
  return decide(who.role, object.category, right, entries, policy(db));
}

bool AccessControl::can_view(store::Database& db, const PrincipalId& principal,
                             const ObjectRef& object) const {
  if (!object_exists(db, object)) return false;
  return authorize(db, principal, Right::View, object) == Decision::Allow;
}

void AccessControl::require(const PrincipalId& principal, Right right, const ObjectRef& object) {
  enum class Outcome { Allowed, Missing, Hidden, Denied };
  auto outcome = store_.read([&](store::Database& db) {
    (void)this->principal(db, principal);
    if (!object_exists(db, object)) return Outcome::Missing;
    if (authorize(db, principal, Right::View, object) == Decision::Deny) return Outcome::Hidden;
    if (authorize(db, principal, right, object) == Decision::Deny) return Outcome::Denied;
    return Outcome::Allowed;
  });
  if (outcome == Outcome::Allowed) return;

  const ErrorCode hidden = not_found_code(object.category);
  const std::string hidden_msg =
      (object.category == Category::Evidence ? "unknown evidence " : "unknown case ") + object.id;
  if (outcome == Outcome::Missing) fail(hidden, hidden_msg);

  store_.write([&](store::Database& db) {
    EventDraft d{.principal = principal, .kind = EventKind::Auth};
    d.description = "access denied: " + std::string(to_string(outcome == Outcome::Hidden ? Right::View : right)) +
                    " on " + describe(object);
    if (object.category == Category::Evidence) {
      auto st = db.prepare("SELECT case_id FROM evidence WHERE id = ?");
      st.bind(1, object.id);
      if (st.step()) d.case_id = CaseId::parse(st.text(0));
      d.evidence_id = EvidenceId::parse(object.id);
    } else {
      d.case_id = CaseId::parse(object.id);
    }
    ledger_.append(db, d);
  });
  if (outcome == Outcome::Hidden) fail(hidden, hidden_msg);
  fail(ErrorCode::AccessDenied,
       "access denied: " + std::string(to_string(right)) + " on " + describe(object));
}

void AccessControl::require_admin(store::Database& db, const PrincipalId& id) const {
  if (principal(db, id).role != Role::Administrator) {
    fail(ErrorCode::AccessDenied, "administrator role required");
  }
}

void AccessControl::require_role(const PrincipalId& id, std::initializer_list<Role> roles) const {
  auto p = principal(id);
  for (auto r : roles) {
    if (p.role == r) return;
  }
  fail(ErrorCode::AccessDenied, "role " + std::string(to_string(p.role)) + " may not perform this operation");
}

void AccessControl::put_entry(store::Database& db, const AccessControlEntry& e) {
  auto st = db.prepare(
      "INSERT INTO acl_entries (principal_id, category, object_id, right, effect) VALUES (?, ?, ?, ?, ?) "
      "ON CONFLICT (principal_id, category, object_id, right) DO UPDATE SET effect = excluded.effect");
  st.bind(1, e.principal.str())
      .bind(2, to_string(e.object.category))
      .bind(3, e.object.id)
      .bind(4, to_string(e.right))
      .bind(5, to_string(e.effect));
  st.run();
}

AccessControlEntry AccessControl::grant(const PrincipalId& admin, const AccessControlEntry& entry) {
  std::lock_guard lock(admin_mu_);
  return store_.write([&](store::Database& db) {
    require_admin(db, admin);
    (void)principal(db, entry.principal);
    if (!object_exists(db, entry.object)) fail(ErrorCode::UnknownObject, "unknown object " + describe(entry.object));
    put_entry(db, entry);
    EventDraft d{.principal = admin, .kind = EventKind::AclChange};
    d.description = "grant " + std::string(to_string(entry.effect)) + " " +
                    std::string(to_string(entry.right)) + " on " + describe(entry.object) +
                    " to " + entry.principal.str();
    if (entry.object.category == Category::Evidence) {
      auto st = db.prepare("SELECT case_id FROM evidence WHERE id = ?");
      st.bind(1, entry.object.id);
      if (st.step()) d.case_id = CaseId::parse(st.text(0));
      d.evidence_id = EvidenceId::parse(entry.object.id);
    } else {
      d.case_id = CaseId::parse(entry.object.id);
    }
    ledger_.append(db, d);
    return entry;
  });
}

void AccessControl::revoke(const PrincipalId& admin, const PrincipalId& who, const ObjectRef& object, Right right) {
  std::lock_guard lock(admin_mu_);
  store_.write([&](store::Database& db) {
    require_admin(db, admin);
    (void)principal(db, who);
    if (!object_exists(db, object)) fail(ErrorCode::UnknownObject, "unknown object " + describe(object));
    auto st = db.prepare(
        "DELETE FROM acl_entries WHERE principal_id = ? AND category = ? AND object_id = ? AND right = ?");
    st.bind(1, who.str()).bind(2, to_string(object.category)).bind(3, object.id).bind(4, to_string(right));
    st.run();
    if (db.changes() == 0) return;  // idempotent: nothing to revoke, nothing to log
    EventDraft d{.principal = admin, .kind = EventKind::AclChange};
    d.description = "revoke " + std::string(to_string(right)) + " on " + describe(object) + " from " + who.str();
    if (object.category == Category::Evidence) {
      auto q = db.prepare("SELECT case_id FROM evidence WHERE id = ?");
      q.bind(1, object.id);
      if (q.step()) d.case_id = CaseId::parse(q.text(0));
      d.evidence_id = EvidenceId::parse(object.id);
    } else {
      d.case_id = CaseId::parse(object.id);
    }
    ledger_.append(db, d);
  });
}

namespace {
std::string right_or_none(MaybeRight r) { return r ? std::string(to_string(*r)) : "NONE"; }
}  // namespace

DefaultRightsPolicy AccessControl::set_role_default(const PrincipalId& admin, Role role, Category category,
                                                    MaybeRight right) {
  std::lock_guard lock(admin_mu_);
  return store_.write([&](store::Database& db) {
    require_admin(db, admin);
    auto st = db.prepare("UPDATE default_rights SET right = ? WHERE scope = ? AND category = ?");
    if (right) {
      st.bind(1, to_string(*right));
    } else {
      st.bind(1, std::nullopt);
    }
    st.bind(2, role_scope(role)).bind(3, to_string(category));
    st.run();
    ledger_.append(db, EventDraft{.principal = admin,
                                  .kind = EventKind::AclChange,
                                  .description = "role default " + std::string(to_string(role)) + " on " +
                                                 std::string(to_string(category)) + " set to " +
                                                 right_or_none(right)});
    return policy(db);
  });
}

DefaultRightsPolicy AccessControl::set_category_default(const PrincipalId& admin, Category category,
                                                        MaybeRight right) {
  std::lock_guard lock(admin_mu_);
  return store_.write([&](store::Database& db) {
    require_admin(db, admin);
    auto st = db.prepare("UPDATE default_rights SET right = ? WHERE scope = 'CATEGORY' AND category = ?");
    if (right) {
      st.bind(1, to_string(*right));
    } else {
      st.bind(1, std::nullopt);
    }
    st.bind(2, to_string(category));
    st.run();
    ledger_.append(db, EventDraft{.principal = admin,
                                  .kind = EventKind::AclChange,
                                  .description = "category default on " + std::string(to_string(category)) +
                                                 " set to " + right_or_none(right)});
    return policy(db);
  });
}

std::vector<AccessControlEntry> AccessControl::entries(const PrincipalId& admin) const {
  return store_.read([&](store::Database& db) {
    require_admin(db, admin);
    std::vector<AccessControlEntry> out;
    auto st = db.prepare(
        "SELECT principal_id, category, object_id, right, effect FROM acl_entries "
        "ORDER BY principal_id, category, object_id, right");
    while (st.step()) {
      out.push_back({PrincipalId::parse(st.text(0)),
                     {parse_category(st.text(1)), st.text(2)},
                     parse_right(st.text(3)),
                     parse_effect(st.text(4))});
    }
    return out;
  });
}

}  // namespace custodian
