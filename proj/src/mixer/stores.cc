#include "miso/mixer/stores.h"

#include "miso/crypto/random.h"

namespace miso::mixer {
namespace {

using crypto::Digest;
using nlohmann::json;

json LoadOr(const SealedFile& file, json fallback) {
  auto doc = file.ReadJson();
  return doc ? *doc : std::move(fallback);
}

}  // namespace

SealedFile::SealedFile(std::shared_ptr<const enclave::AttestationPlatform> platform,
                       enclave::EnclaveId eid, std::filesystem::path dir,
                       std::string label, enclave::SealMode mode)
    : platform_(std::move(platform)),
      eid_(eid),
      dir_(std::move(dir)),
      label_(std::move(label)),
      mode_(mode) {}

std::filesystem::path SealedFile::path() const {
  return enclave::SealedFilePath(dir_, label_);
}

std::optional<crypto::Bytes> SealedFile::Read() const {
  auto blob = enclave::ReadSealedFile(dir_, label_);
  if (!blob) return std::nullopt;
  return platform_->Unseal(eid_, label_, *blob, mode_);
}

void SealedFile::Write(crypto::ByteView plaintext) const {
  enclave::WriteSealedFile(dir_, label_, platform_->Seal(eid_, label_, plaintext, mode_));
}

std::optional<json> SealedFile::ReadJson() const {
  auto bytes = Read();
  if (!bytes) return std::nullopt;
  json doc = json::parse(bytes->begin(), bytes->end(), nullptr, false);
  if (doc.is_discarded()) {
    throw enclave::SealTamperError("sealed document " + label_ + " is not valid JSON");
  }
  return doc;
}

void SealedFile::WriteJson(const json& doc) const {
  std::string text = doc.dump();
  Write(crypto::AsBytes(text));
  crypto::SecureWipe(text);
}

SaltTable::SaltTable(SealedFile file) : file_(std::move(file)) {
  const json doc = LoadOr(file_, json::object());
  for (const auto& [pre, salt] : doc.items()) {
    salts_[crypto::DigestFromHex(pre)] = crypto::DigestFromHex(salt.get<std::string>());
  }
}

crypto::Salt SaltTable::GetOrCreate(const Digest& pre_uid) {
  std::lock_guard lock(mu_);
  auto it = salts_.find(pre_uid);
  if (it != salts_.end()) return it->second;
  crypto::Salt salt = crypto::GenSecret();
  salts_.emplace(pre_uid, salt);
  json doc = json::object();
  for (const auto& [pre, s] : salts_) doc[crypto::HexEncode(pre)] = crypto::HexEncode(s);
  file_.WriteJson(doc);
  return salt;
}

std::optional<crypto::Salt> SaltTable::Find(const Digest& pre_uid) const {
  std::lock_guard lock(mu_);
  auto it = salts_.find(pre_uid);
  if (it == salts_.end()) return std::nullopt;
  return it->second;
}

size_t SaltTable::size() const {
  std::lock_guard lock(mu_);
  return salts_.size();
}

TagTable::TagTable(SealedFile file) : file_(std::move(file)) {
  for (const auto& r : LoadOr(file_, json::array())) {
    TagRecord record;
    for (const auto& t : r.at("tags")) record.tags.insert(crypto::DigestFromHex(t.get<std::string>()));
    record.n = r.at("n");
    record.m = r.at("m");
    record.cid_rp = r.at("cid_rp");
    record.uid = crypto::DigestFromHex(r.at("uid").get<std::string>());
    record.policy_key = crypto::DigestFromHex(r.at("policy_key").get<std::string>());
    records_.push_back(std::move(record));
  }
}

TagMatch TagTable::Match(const std::string& cid_rp, const std::set<Digest>& tags) const {
  std::lock_guard lock(mu_);
  return MatchLocked(cid_rp, tags);
}

TagMatch TagTable::MatchLocked(const std::string& cid_rp,
                               const std::set<Digest>& tags) const {
  TagMatch result;
  int matched = 0;
  bool overlap = false;
  for (const auto& record : records_) {
    if (record.cid_rp != cid_rp) continue;
    int common = 0;
    for (const auto& t : tags) common += record.tags.count(t);
    if (common == 0) continue;
    overlap = true;
    if (common >= record.m) {
      ++matched;
      result.record = record;
    }
  }
  if (matched > 1) {
    result.kind = TagMatch::Kind::kAmbiguous;
    result.record.reset();
  } else if (matched == 1) {
    result.kind = TagMatch::Kind::kMatched;
  } else if (overlap) {
    result.kind = TagMatch::Kind::kPartial;
  }
  return result;
}

TagRecord TagTable::EnrollOrGet(TagRecord record) {
  std::lock_guard lock(mu_);
  TagMatch existing = MatchLocked(record.cid_rp, record.tags);
  if (existing.kind == TagMatch::Kind::kMatched) return *existing.record;
  records_.push_back(record);
  PersistLocked();
  return record;
}

void TagTable::PersistLocked() const {
  json doc = json::array();
  for (const auto& r : records_) {
    json tags = json::array();
    for (const auto& t : r.tags) tags.push_back(crypto::HexEncode(t));
    doc.push_back({{"tags", tags},
                   {"n", r.n},
                   {"m", r.m},
                   {"cid_rp", r.cid_rp},
                   {"uid", crypto::HexEncode(r.uid)},
                   {"policy_key", crypto::HexEncode(r.policy_key)}});
  }
  file_.WriteJson(doc);
}

size_t TagTable::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

RpRegistry::RpRegistry(SealedFile file) : file_(std::move(file)) {
  for (const auto& r : LoadOr(file_, json::array())) {
    RpRecord record{r.at("client_id"), r.at("client_secret"), r.at("redirect_uri")};
    rps_[record.client_id] = record;
  }
}

RpRecord RpRegistry::Register(const std::string& redirect_uri) {
  crypto::Bytes nonce = crypto::RandomBytes(32);
  RpRecord record{crypto::DeriveClientId(nonce, redirect_uri), crypto::GenSecretToken(),
                  redirect_uri};
  std::lock_guard lock(mu_);
  rps_[record.client_id] = record;
  json doc = json::array();
  for (const auto& [id, r] : rps_) {
    doc.push_back({{"client_id", r.client_id},
                   {"client_secret", r.client_secret},
                   {"redirect_uri", r.redirect_uri}});
  }
  file_.WriteJson(doc);
  return record;
}

std::optional<RpRecord> RpRegistry::Find(const std::string& client_id) const {
  std::lock_guard lock(mu_);
  auto it = rps_.find(client_id);
  if (it == rps_.end()) return std::nullopt;
  return it->second;
}

size_t RpRegistry::size() const {
  std::lock_guard lock(mu_);
  return rps_.size();
}

IdpCredentialStore::IdpCredentialStore(SealedFile file) : file_(std::move(file)) {
  const json doc = LoadOr(file_, json::object());
  for (const auto& [idp, c] : doc.items()) {
    credentials_[idp] = {c.at("client_id"), c.at("client_secret"), c.at("redirect_uri")};
  }
}

std::optional<IdpCredential> IdpCredentialStore::Find(const std::string& idp_id) const {
  std::lock_guard lock(mu_);
  auto it = credentials_.find(idp_id);
  if (it == credentials_.end()) return std::nullopt;
  return it->second;
}

void IdpCredentialStore::Put(const std::string& idp_id, const IdpCredential& credential) {
  std::lock_guard lock(mu_);
  credentials_[idp_id] = credential;
  json doc = json::object();
  for (const auto& [id, c] : credentials_) {
    doc[id] = {{"client_id", c.client_id},
               {"client_secret", c.client_secret},
               {"redirect_uri", c.redirect_uri}};
  }
  file_.WriteJson(doc);
}

PolicyStore::PolicyStore(SealedFile file) : file_(std::move(file)) {
  const json doc = LoadOr(file_, json::object());
  for (const auto& [key, attrs] : doc.items()) {
    policies_[crypto::DigestFromHex(key)] = attrs.get<std::set<std::string>>();
  }
}

std::set<std::string> PolicyStore::Allowed(const Digest& key) const {
  std::lock_guard lock(mu_);
  auto it = policies_.find(key);
  return it == policies_.end() ? std::set<std::string>{} : it->second;
}

void PolicyStore::Set(const Digest& key, const std::set<std::string>& attributes) {
  std::lock_guard lock(mu_);
  policies_[key] = attributes;
  json doc = json::object();
  for (const auto& [k, attrs] : policies_) doc[crypto::HexEncode(k)] = attrs;
  file_.WriteJson(doc);
}

}  // namespace miso::mixer
