#ifndef MISO_HARNESS_LOCAL_STACK_H_
#define MISO_HARNESS_LOCAL_STACK_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "miso/common/clock.h"
#include "miso/enclave/sealing.h"
#include "miso/harness/topology.h"
#include "miso/idp/idp_service.h"
#include "miso/mixer/mixer_service.h"
#include "miso/rp/rp_service.h"

namespace miso::harness {

struct StackOptions {
  std::filesystem::path state_dir;
  std::string host = "127.0.0.1";
  int idp_count = 3;
  int rp_count = 2;
  bool baseline_rp = true;
  int users_per_idp = 8;
  int pbkdf2_iterations = 1000;
  enclave::SealMode seal_mode = enclave::SealMode::kMrEnclave;
  std::string program_descriptor = mixer::kDefaultProgramDescriptor;
  bool record_transcript = true;
  bool insecure_leak_cid_rp = false;
  bool insecure_passthrough_uid = false;
  int worker_threads = 16;
  Clock clock = SystemClock();
};

// IdP ids used by generated stacks: idp-a, idp-b, ...
std::string IdpIdForIndex(int index);

// A whole deployment inside the current process on loopback ports: IdPs
// first, then the mixer (which registers at every IdP), then the RPs (which
// verify and pin the mixer's attestation and register there).
class LocalStack {
 public:
  explicit LocalStack(StackOptions options);
  ~LocalStack();

  const Topology& topology() const { return topology_; }
  const StackOptions& options() const { return options_; }
  idp::IdpService& idp(size_t i) { return *idps_.at(i); }
  mixer::MixerService& mixer() { return *mixer_; }
  rp::RpService& rp(size_t i) { return *rps_.at(i); }
  rp::RpService* baseline_rp() { return baseline_.get(); }

  // Stops the mixer and starts a new instance on the same port over the same
  // state directory, optionally with a different program descriptor.
  void RestartMixer(std::optional<std::string> program_descriptor = std::nullopt);
  // Restarts RP |i| on its port; throws rp::RepinRequired on a changed mixer.
  void RestartRp(size_t i);

 private:
  mixer::MixerOptions MixerOptionsFor(const std::string& descriptor) const;
  rp::RpOptions RpOptionsFor(size_t i) const;
  void RefreshTopology();

  StackOptions options_;
  std::vector<std::unique_ptr<idp::IdpService>> idps_;
  std::unique_ptr<mixer::MixerService> mixer_;
  std::vector<std::unique_ptr<rp::RpService>> rps_;
  std::unique_ptr<rp::RpService> baseline_;
  int mixer_port_ = 0;
  std::vector<int> rp_ports_;
  std::string descriptor_;
  Topology topology_;
};

}  // namespace miso::harness

#endif  // MISO_HARNESS_LOCAL_STACK_H_
