#include "miso/idp/fixtures.h"

#include <cctype>
#include <cstdio>
#include <stdexcept>

#include "miso/common/file_util.h"

namespace miso::idp {

nlohmann::json Fixtures::ToJson() const {
  nlohmann::json users_json = nlohmann::json::array();
  for (const auto& u : users) {
    users_json.push_back({{"username", u.username},
                          {"password", u.password},
                          {"uid", u.uid},
                          {"attributes", u.attributes}});
  }
  nlohmann::json clients_json = nlohmann::json::array();
  for (const auto& c : clients) {
    clients_json.push_back({{"client_id", c.client_id},
                            {"client_secret", c.client_secret},
                            {"redirect_uri", c.redirect_uri},
                            {"client_name", c.client_name}});
  }
  return {{"pbkdf2_iterations", pbkdf2_iterations},
          {"users", std::move(users_json)},
          {"clients", std::move(clients_json)}};
}

Fixtures Fixtures::FromJson(const nlohmann::json& j) {
  Fixtures f;
  f.pbkdf2_iterations = j.value("pbkdf2_iterations", 1000);
  for (const auto& u : j.value("users", nlohmann::json::array())) {
    FixtureUser user;
    user.username = u.at("username").get<std::string>();
    user.password = u.at("password").get<std::string>();
    user.uid = u.at("uid").get<std::string>();
    user.attributes =
        u.value("attributes", std::map<std::string, std::string>{});
    if (user.uid.empty() || user.username.empty()) {
      throw std::invalid_argument("fixture user with empty uid or username");
    }
    f.users.push_back(std::move(user));
  }
  for (const auto& c : j.value("clients", nlohmann::json::array())) {
    f.clients.push_back({c.at("client_id").get<std::string>(),
                         c.at("client_secret").get<std::string>(),
                         c.at("redirect_uri").get<std::string>(),
                         c.value("client_name", "")});
  }
  return f;
}

Fixtures Fixtures::Load(const std::filesystem::path& path) {
  return FromJson(nlohmann::json::parse(ReadFileOrThrow(path)));
}

void Fixtures::Save(const std::filesystem::path& path) const {
  AtomicWriteFile(path, ToJson().dump(2));
}

std::string FixtureUsername(int index) {
  static const char* kNamed[] = {"alice", "bob", "carol", "dave"};
  if (index < 4) return kNamed[index];
  char buf[16];
  std::snprintf(buf, sizeof(buf), "user-%04d", index);
  return buf;
}

std::string FixturePassword(const std::string& username) { return "pw-" + username; }

Fixtures GenerateFixtures(const std::string& idp_id, int user_count) {
  Fixtures f;
  for (int i = 0; i < user_count; ++i) {
    FixtureUser u;
    u.username = FixtureUsername(i);
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%03d", i + 1);
    u.password = FixturePassword(u.username);
    u.uid = u.username + "-" + idx;
    std::string display = u.username;
    display[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(display[0])));
    u.attributes = {{"email", u.username + "@" + idp_id + ".test"},
                    {"display_name", display}};
    f.users.push_back(std::move(u));
  }
  return f;
}

}  // namespace miso::idp
