#ifndef MISO_DEPLOY_STACK_MANAGER_H_
#define MISO_DEPLOY_STACK_MANAGER_H_

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "miso/enclave/sealing.h"
#include "miso/harness/topology.h"

namespace miso::deploy {

inline constexpr char kStateDirEnv[] = "MISO_STATE_DIR";
inline constexpr char kStackFile[] = "stack.json";
inline constexpr int kDefaultBasePort = 18000;

class DeployError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --state-dir if given, else $MISO_STATE_DIR, else ./miso-state.
std::filesystem::path ResolveStateDir(const std::string& flag);

struct UpOptions {
  std::filesystem::path state_dir;
  // Binary providing the serve-idp, serve-mixer and serve-rp subcommands.
  std::filesystem::path executable;
  std::string host = "127.0.0.1";
  // Used on first start only; later starts reuse the recorded ports.
  int base_port = kDefaultBasePort;
  int idp_count = 3;
  int rp_count = 2;
  bool baseline_rp = true;
  int users_per_idp = 256;
  int pbkdf2_iterations = 1000;
  enclave::SealMode seal_mode = enclave::SealMode::kMrEnclave;
  bool record_transcript = true;
  int worker_threads = 16;
  std::chrono::seconds startup_timeout{20};
};

// One launched service.
struct ServiceSpec {
  std::string name;  // idp-a, mixer, rp-0, rp-baseline
  std::string kind;  // idp, mixer, rp
  int port = 0;
  std::filesystem::path config;
};

// Fixed layout of a stack, recorded in <state_dir>/layout.json on first start.
struct StackLayout {
  std::string host;
  enclave::SealMode seal_mode = enclave::SealMode::kMrEnclave;
  int users_per_idp = 0;
  std::vector<ServiceSpec> services;  // in start order: IdPs, mixer, RPs

  nlohmann::json ToJson() const;
  static StackLayout FromJson(const nlohmann::json& j);
};

// Generates configs and fixtures on first use, checks every port, starts the
// services in dependency order and waits for each /healthz. On any failure
// the partial stack is torn down and DeployError is thrown. Writes and
// returns the stack descriptor.
harness::Topology Up(const UpOptions& options);

// Stops a running stack with SIGTERM in reverse dependency order (RPs, then
// the mixer, then IdPs). A stopped stack is left alone. With |wipe| the
// state directory is emptied afterwards.
void Down(const std::filesystem::path& state_dir, bool wipe);

struct ServiceStatus {
  std::string name;
  int port = 0;
  std::optional<int> pid;
  bool alive = false;
  bool healthy = false;
};

struct StackStatus {
  std::vector<ServiceStatus> services;
  bool running() const;
  nlohmann::json ToJson() const;
  std::string FormatTable() const;
};

StackStatus Status(const std::filesystem::path& state_dir);

// Runs one service from its config file until SIGTERM or SIGINT. |kind| is
// idp, mixer or rp. Returns the process exit code.
int Serve(const std::string& kind, const std::filesystem::path& config_path);

}  // namespace miso::deploy

#endif  // MISO_DEPLOY_STACK_MANAGER_H_
