#ifndef MISO_IDP_FIXTURES_H_
#define MISO_IDP_FIXTURES_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace miso::idp {

struct FixtureUser {
  std::string username;
  std::string password;
  std::string uid;
  std::map<std::string, std::string> attributes;
};

struct FixtureClient {
  std::string client_id;
  std::string client_secret;
  std::string redirect_uri;
  std::string client_name;
};

// Seed data for an IdP instance, stored as JSON:
//   {"pbkdf2_iterations": N, "users": [...], "clients": [...]}
struct Fixtures {
  int pbkdf2_iterations = 1000;
  std::vector<FixtureUser> users;
  std::vector<FixtureClient> clients;

  nlohmann::json ToJson() const;
  static Fixtures FromJson(const nlohmann::json& j);
  static Fixtures Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
};

// Deterministic user set shared by every generated IdP: alice, bob, carol,
// dave, then user-0004 onwards. Passwords are "pw-<username>", uids
// "<username>-<index>", emails "<username>@<idp_id>.test".
Fixtures GenerateFixtures(const std::string& idp_id, int user_count);

// Username of the i-th generated user.
std::string FixtureUsername(int index);
// Password of a generated user.
std::string FixturePassword(const std::string& username);

}  // namespace miso::idp

#endif  // MISO_IDP_FIXTURES_H_
