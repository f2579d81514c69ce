#ifndef MISO_HARNESS_TOPOLOGY_H_
#define MISO_HARNESS_TOPOLOGY_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace miso::harness {

struct IdpNode {
  std::string id;
  std::string url;
  // The mixer's client id at this IdP, when known to the launcher.
  std::string mixer_client_id;
};

struct RpNode {
  std::string id;
  std::string url;
  std::string client_id;
  bool baseline = false;
  // For baseline RPs: the IdP they talk to directly.
  std::string idp;
};

// Where every service of a running stack lives. Written by the launcher as
// the stack descriptor and read by the harness.
struct Topology {
  std::string mixer_url;
  std::string measurement;     // hex
  std::string tee_public_key;  // hex
  std::string seal_mode;
  std::vector<IdpNode> idps;
  std::vector<RpNode> rps;
  int users_per_idp = 0;

  const IdpNode* FindIdp(const std::string& id) const;
  const RpNode* FindRp(const std::string& id) const;
  std::vector<const RpNode*> MisoRps() const;
  std::vector<const RpNode*> BaselineRps() const;
  std::vector<std::string> IdpIds() const;

  nlohmann::json ToJson() const;
  static Topology FromJson(const nlohmann::json& j);
  static Topology Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
};

}  // namespace miso::harness

#endif  // MISO_HARNESS_TOPOLOGY_H_
