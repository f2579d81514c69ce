#include "miso/harness/topology.h"

#include "miso/common/file_util.h"

namespace miso::harness {

using nlohmann::json;

const IdpNode* Topology::FindIdp(const std::string& id) const {
  for (const auto& idp : idps) {
    if (idp.id == id) return &idp;
  }
  return nullptr;
}

const RpNode* Topology::FindRp(const std::string& id) const {
  for (const auto& rp : rps) {
    if (rp.id == id) return &rp;
  }
  return nullptr;
}

std::vector<const RpNode*> Topology::MisoRps() const {
  std::vector<const RpNode*> out;
  for (const auto& rp : rps) {
    if (!rp.baseline) out.push_back(&rp);
  }
  return out;
}

std::vector<const RpNode*> Topology::BaselineRps() const {
  std::vector<const RpNode*> out;
  for (const auto& rp : rps) {
    if (rp.baseline) out.push_back(&rp);
  }
  return out;
}

std::vector<std::string> Topology::IdpIds() const {
  std::vector<std::string> out;
  for (const auto& idp : idps) out.push_back(idp.id);
  return out;
}

json Topology::ToJson() const {
  json idps_json = json::array();
  for (const auto& i : idps) {
    idps_json.push_back({{"id", i.id}, {"url", i.url}, {"mixer_client_id", i.mixer_client_id}});
  }
  json rps_json = json::array();
  for (const auto& r : rps) {
    rps_json.push_back({{"id", r.id},
                        {"url", r.url},
                        {"client_id", r.client_id},
                        {"baseline", r.baseline},
                        {"idp", r.idp}});
  }
  return {{"mixer", {{"url", mixer_url},
                     {"measurement", measurement},
                     {"tee_public_key", tee_public_key},
                     {"seal_mode", seal_mode}}},
          {"idps", idps_json},
          {"rps", rps_json},
          {"users_per_idp", users_per_idp}};
}

Topology Topology::FromJson(const json& j) {
  Topology t;
  const json& mixer = j.at("mixer");
  t.mixer_url = mixer.value("url", "");
  t.measurement = mixer.value("measurement", "");
  t.tee_public_key = mixer.value("tee_public_key", "");
  t.seal_mode = mixer.value("seal_mode", "");
  for (const auto& i : j.at("idps")) {
    t.idps.push_back({i.at("id"), i.at("url"), i.value("mixer_client_id", "")});
  }
  for (const auto& r : j.at("rps")) {
    t.rps.push_back({r.at("id"), r.at("url"), r.value("client_id", ""),
                     r.value("baseline", false), r.value("idp", "")});
  }
  t.users_per_idp = j.value("users_per_idp", 0);
  return t;
}

Topology Topology::Load(const std::filesystem::path& path) {
  return FromJson(json::parse(ReadFileOrThrow(path)));
}

void Topology::Save(const std::filesystem::path& path) const {
  AtomicWriteFile(path, ToJson().dump(2));
}

}  // namespace miso::harness
