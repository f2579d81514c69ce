#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "miso/deploy/stack_manager.h"

namespace {

namespace fs = std::filesystem;
using miso::deploy::DeployError;

constexpr int kExitNotRunning = 3;

fs::path SelfExecutable(const char* argv0) {
  std::error_code ec;
  fs::path self = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::absolute(argv0) : self;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Launches and manages a local MISO deployment."};
  app.require_subcommand(1);
  std::string state_dir;
  app.add_option("--state-dir", state_dir, "State directory (default $MISO_STATE_DIR)");

  miso::deploy::UpOptions up;
  std::string seal_mode = "mrenclave";
  bool no_baseline = false;
  bool no_transcript = false;
  bool json_output = false;
  auto* up_cmd = app.add_subcommand("up", "Start IdPs, the mixer and RPs");
  up_cmd->add_option("--idps", up.idp_count, "Number of IdPs")->capture_default_str();
  up_cmd->add_option("--rps", up.rp_count, "Number of MISO relying parties")
      ->capture_default_str();
  up_cmd->add_flag("--no-baseline", no_baseline, "Skip the baseline RP");
  up_cmd->add_option("--seal-mode", seal_mode, "mrenclave or mrsigner")->capture_default_str();
  up_cmd->add_option("--base-port", up.base_port, "First port of the stack")
      ->capture_default_str();
  up_cmd->add_option("--host", up.host, "Loopback address to bind")->capture_default_str();
  up_cmd->add_option("--users", up.users_per_idp, "Fixture users per IdP")
      ->capture_default_str();
  up_cmd->add_option("--workers", up.worker_threads, "Worker threads per service")
      ->capture_default_str();
  up_cmd->add_flag("--no-transcript", no_transcript, "Disable the debug transcript taps");
  up_cmd->add_flag("--json", json_output, "Print the stack descriptor as JSON");

  bool wipe = false;
  auto* down_cmd = app.add_subcommand("down", "Stop the stack");
  down_cmd->add_flag("--wipe", wipe, "Remove all state afterwards");

  auto* status_cmd = app.add_subcommand("status", "Show service state");
  status_cmd->add_flag("--json", json_output, "Print JSON");

  std::string config;
  std::string serve_kind;
  for (const char* kind : {"idp", "mixer", "rp"}) {
    auto* cmd = app.add_subcommand(std::string("serve-") + kind, "Run one service in the foreground");
    cmd->add_option("--config", config, "Service config file")->required();
    cmd->callback([&serve_kind, kind] { serve_kind = kind; });
  }

  CLI11_PARSE(app, argc, argv);

  if (!serve_kind.empty()) return miso::deploy::Serve(serve_kind, config);

  const fs::path dir = miso::deploy::ResolveStateDir(state_dir);
  try {
    if (up_cmd->parsed()) {
      up.state_dir = dir;
      up.executable = SelfExecutable(argv[0]);
      up.seal_mode = miso::enclave::ParseSealMode(seal_mode);
      up.baseline_rp = !no_baseline;
      up.record_transcript = !no_transcript;
      auto topology = miso::deploy::Up(up);
      if (json_output) {
        std::printf("%s\n", topology.ToJson().dump(2).c_str());
      } else {
        std::printf("stack up in %s\n", dir.c_str());
        std::printf("%s", miso::deploy::Status(dir).FormatTable().c_str());
        std::printf("descriptor: %s\n", (dir / miso::deploy::kStackFile).c_str());
      }
      return 0;
    }
    if (down_cmd->parsed()) {
      miso::deploy::Down(dir, wipe);
      std::printf("stack down%s\n", wipe ? " (state wiped)" : "");
      return 0;
    }
    if (status_cmd->parsed()) {
      auto status = miso::deploy::Status(dir);
      if (json_output) {
        std::printf("%s\n", status.ToJson().dump(2).c_str());
      } else {
        std::printf("%s", status.FormatTable().c_str());
      }
      return status.running() ? 0 : kExitNotRunning;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "miso: %s\n", e.what());
    return 1;
  }
  return 0;
}
