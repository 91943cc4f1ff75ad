#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "custodian/clock.hpp"
#include "custodian/ledger.hpp"
#include "custodian/model.hpp"
#include "custodian/store.hpp"

namespace custodian {

// The access decision. Entries must already be filtered to one
// (principal, object) pair. Precedence, first match wins:
//   1. a DENY entry at or below the requested right (denying READ also denies WRITE)
//   2. an ALLOW entry at or above the requested right
//   3. the role default for the object's category
//   4. the category default
//   5. deny
Decision decide(Role role, Category category, Right requested,
                std::span<const AccessControlEntry> entries, const DefaultRightsPolicy& policy);

inline bool implies(MaybeRight held, Right wanted) {
  return held && static_cast<int>(*held) >= static_cast<int>(wanted);
}

struct AccessControlConfig {
  std::chrono::milliseconds session_idle{std::chrono::hours(8)};
  int kdf_iterations = 100'000;
};

class AccessControl {
 public:
  static constexpr std::size_t kSaltBytes = 16;
  static constexpr int kMinIterations = 100'000;

  AccessControl(store::Store& store, Ledger& ledger, const Clock& clock, AccessControlConfig config);

  // ---- principals
  [[nodiscard]] bool has_principals() const;
  // Unchecked creation; used for bootstrap and by create_principal.
  Principal insert_principal(store::Database& db, const std::string& username,
                             const std::string& display_name, Role role, const std::string& secret);
  Principal create_principal(const PrincipalId& admin, const std::string& username,
                             const std::string& display_name, Role role, const std::string& secret);
  [[nodiscard]] Principal principal(const PrincipalId& id) const;
  [[nodiscard]] Principal principal(store::Database& db, const PrincipalId& id) const;
  [[nodiscard]] std::optional<Principal> find_username(const std::string& username) const;
  [[nodiscard]] std::vector<Principal> principals(const PrincipalId& admin) const;

  // ---- sessions
  SessionToken authenticate(const std::string& username, const std::string& secret);
  PrincipalId resolve_session(const std::string& token);
  void logout(const std::string& token);

  // ---- decisions
  [[nodiscard]] Decision authorize(const PrincipalId& principal, Right right, const ObjectRef& object) const;
  [[nodiscard]] Decision authorize(store::Database& db, const PrincipalId& principal, Right right,
                                   const ObjectRef& object) const;

  // Throws when the decision is DENY. A principal lacking even VIEW gets the
  // object's not-found error (existence hiding); otherwise ACCESS_DENIED.
  // Denials on existing objects are recorded as AUTH events. Not to be called
  // inside a write transaction.
  void require(const PrincipalId& principal, Right right, const ObjectRef& object);
  [[nodiscard]] bool can_view(store::Database& db, const PrincipalId& principal, const ObjectRef& object) const;

  // ---- administration
  AccessControlEntry grant(const PrincipalId& admin, const AccessControlEntry& entry);
  void revoke(const PrincipalId& admin, const PrincipalId& principal, const ObjectRef& object, Right right);
  DefaultRightsPolicy set_role_default(const PrincipalId& admin, Role role, Category category, MaybeRight right);
  DefaultRightsPolicy set_category_default(const PrincipalId& admin, Category category, MaybeRight right);
  [[nodiscard]] DefaultRightsPolicy policy() const;
  [[nodiscard]] DefaultRightsPolicy policy(store::Database& db) const;
  [[nodiscard]] std::vector<AccessControlEntry> entries(const PrincipalId& admin) const;

  // Upsert without an admin check; materializes the defaults that come with
  // case creation and evidence acquisition.
  void put_entry(store::Database& db, const AccessControlEntry& entry);

  void require_role(const PrincipalId& principal, std::initializer_list<Role> roles) const;

 private:
  [[nodiscard]] bool object_exists(store::Database& db, const ObjectRef& object) const;
  void require_admin(store::Database& db, const PrincipalId& principal) const;

  struct Session {
    PrincipalId principal;
    std::int64_t last_used_ms;
  };

  store::Store& store_;
  Ledger& ledger_;
  const Clock& clock_;
  AccessControlConfig config_;
  std::mutex sessions_mu_;
  std::unordered_map<std::string, Session> sessions_;
  std::mutex admin_mu_;  // serializes ACL and policy mutations
};

}  // namespace custodian
