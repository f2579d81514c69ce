#include "miso/harness/local_stack.h"

#include "miso/crypto/bytes.h"
#include "miso/idp/fixtures.h"

namespace miso::harness {

std::string IdpIdForIndex(int index) {
  return std::string("idp-") + static_cast<char>('a' + index);
}

LocalStack::LocalStack(StackOptions options)
    : options_(std::move(options)), descriptor_(options_.program_descriptor) {
  std::filesystem::create_directories(options_.state_dir);
  for (int i = 0; i < options_.idp_count; ++i) {
    idp::IdpOptions o;
    o.idp_id = IdpIdForIndex(i);
    o.state_dir = options_.state_dir / o.idp_id;
    o.fixtures = idp::GenerateFixtures(o.idp_id, options_.users_per_idp);
    o.fixtures.pbkdf2_iterations = options_.pbkdf2_iterations;
    o.record_transcript = options_.record_transcript;
    o.server.worker_threads = options_.worker_threads;
    o.clock = options_.clock;
    idps_.push_back(std::make_unique<idp::IdpService>(std::move(o)));
    idps_.back()->Listen(options_.host, 0);
  }

  mixer_ = std::make_unique<mixer::MixerService>(MixerOptionsFor(descriptor_));
  mixer_port_ = mixer_->Listen(options_.host, 0);

  for (int i = 0; i < options_.rp_count; ++i) {
    rps_.push_back(std::make_unique<rp::RpService>(RpOptionsFor(i)));
    rp_ports_.push_back(rps_.back()->Listen(options_.host, 0));
  }
  if (options_.baseline_rp && !idps_.empty()) {
    rp::RpOptions o;
    o.rp_id = "rp-baseline";
    o.state_dir = options_.state_dir / o.rp_id;
    o.provider_url = idps_.front()->base_url();
    o.baseline_mode = true;
    o.record_transcript = options_.record_transcript;
    o.server.worker_threads = options_.worker_threads;
    o.clock = options_.clock;
    baseline_ = std::make_unique<rp::RpService>(std::move(o));
    baseline_->Listen(options_.host, 0);
  }
  RefreshTopology();
}

LocalStack::~LocalStack() {
  baseline_.reset();
  rps_.clear();
  mixer_.reset();
  idps_.clear();
}

mixer::MixerOptions LocalStack::MixerOptionsFor(const std::string& descriptor) const {
  mixer::MixerOptions o;
  o.state_dir = options_.state_dir / "mixer";
  o.seal_mode = options_.seal_mode;
  o.program_descriptor = descriptor;
  o.record_transcript = options_.record_transcript;
  o.insecure_leak_cid_rp = options_.insecure_leak_cid_rp;
  o.insecure_passthrough_uid = options_.insecure_passthrough_uid;
  o.server.worker_threads = options_.worker_threads;
  o.clock = options_.clock;
  for (const auto& idp : idps_) {
    const std::string base = idp->base_url();
    o.idps.push_back({idp->idp_id(), base + "/auth_IdP", base + "/token_IdP",
                      base + "/res_IdP", base + "/register", "", ""});
  }
  return o;
}

rp::RpOptions LocalStack::RpOptionsFor(size_t i) const {
  rp::RpOptions o;
  o.rp_id = "rp-" + std::to_string(i);
  o.state_dir = options_.state_dir / o.rp_id;
  o.provider_url = mixer_->base_url();
  o.expected_measurement = crypto::Sha256(crypto::AsBytes(descriptor_));
  o.tee_public_key = mixer_->platform_public_key();
  o.record_transcript = options_.record_transcript;
  o.server.worker_threads = options_.worker_threads;
  o.clock = options_.clock;
  return o;
}

void LocalStack::RestartMixer(std::optional<std::string> program_descriptor) {
  mixer_.reset();
  if (program_descriptor) descriptor_ = *program_descriptor;
  mixer_ = std::make_unique<mixer::MixerService>(MixerOptionsFor(descriptor_));
  mixer_->Listen(options_.host, mixer_port_);
  RefreshTopology();
}

void LocalStack::RestartRp(size_t i) {
  rps_.at(i).reset();
  rps_[i] = std::make_unique<rp::RpService>(RpOptionsFor(i));
  rps_[i]->Listen(options_.host, rp_ports_.at(i));
  RefreshTopology();
}

void LocalStack::RefreshTopology() {
  Topology t;
  t.mixer_url = mixer_->base_url();
  t.measurement = crypto::HexEncode(mixer_->identity().measurement);
  t.tee_public_key = crypto::HexEncode(mixer_->platform_public_key());
  t.seal_mode = std::string(enclave::SealModeName(options_.seal_mode));
  t.users_per_idp = options_.users_per_idp;
  for (const auto& idp : idps_) {
    auto credential = mixer_->idp_credential(idp->idp_id());
    t.idps.push_back({idp->idp_id(), idp->base_url(), credential ? credential->client_id : ""});
  }
  for (const auto& rp : rps_) {
    if (rp) t.rps.push_back({rp->rp_id(), rp->base_url(), rp->client_id(), false, ""});
  }
  if (baseline_) {
    t.rps.push_back({baseline_->rp_id(), baseline_->base_url(), baseline_->client_id(), true,
                     idps_.front()->idp_id()});
  }
  topology_ = std::move(t);
}

}  // namespace miso::harness
