#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "miso/common/file_util.h"
#include "miso/deploy/stack_manager.h"
#include "miso/harness/driver.h"
#include "miso/harness/games.h"
#include "miso/harness/load.h"
#include "miso/harness/topology.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> SplitCommas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void WriteJson(const std::string& path, const json& doc) {
  if (path.empty()) return;
  miso::AtomicWriteFile(path, doc.dump(2) + "\n");
}

const miso::harness::RpNode& RequireRp(const miso::harness::Topology& t, const std::string& id) {
  const miso::harness::RpNode* rp = id.empty() ? nullptr : t.FindRp(id);
  if (rp == nullptr && id.empty() && !t.MisoRps().empty()) rp = t.MisoRps().front();
  if (rp == nullptr) throw std::invalid_argument("unknown RP " + id);
  return *rp;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drives logins, privacy games and load against a running MISO stack."};
  app.require_subcommand(1);
  std::string stack_path;
  std::string state_dir;
  std::string json_out;
  std::string rp_id;
  std::string idps;
  std::optional<int> m;
  std::string user = "alice";
  app.add_option("--stack", stack_path, "Stack descriptor (default <state dir>/stack.json)");
  app.add_option("--state-dir", state_dir, "State directory (default $MISO_STATE_DIR)");
  app.add_option("--json-out", json_out, "Write the report as JSON to this file");

  auto* login = app.add_subcommand("login", "Run one login through the redirect chain");
  login->add_option("--rp", rp_id, "Relying party id (default: first MISO RP)");
  login->add_option("--idps", idps, "Comma-separated IdP ids");
  login->add_option("--m", m, "Threshold for multi-IdP login");
  login->add_option("--user", user, "Fixture username")->capture_default_str();

  miso::harness::GameOptions game_options;
  std::string game_users;
  auto* game = app.add_subcommand("game", "Run a privacy game");
  game->require_subcommand(1);
  std::string game_kind;
  for (const char* kind : {"idp", "rp", "collusive"}) {
    auto* cmd = game->add_subcommand(kind, std::string(kind) + " unlinkability game");
    cmd->add_option("--trials", game_options.trials)->capture_default_str();
    cmd->add_option("--seed", game_options.seed)->capture_default_str();
    cmd->add_option("--users", game_users, "Comma-separated fixture users");
    cmd->add_option("--idps", game_options.idp, "IdP to log in through");
    cmd->callback([&game_kind, kind] { game_kind = kind; });
  }

  auto* subsets = app.add_subcommand("subsets", "Enroll, then try every IdP subset");
  subsets->add_option("--rp", rp_id, "Relying party id (default: first MISO RP)");
  subsets->add_option("--idps", idps, "Comma-separated IdP ids (default: all)");
  subsets->add_option("--m", m, "Threshold (default 2)");
  subsets->add_option("--user", user, "Fixture username")->capture_default_str();

  miso::harness::LoadOptions load_options;
  std::string scenarios = "baseline_sso,miso_single,miso_multi_2of3";
  auto* load = app.add_subcommand("load", "Open-loop latency measurement");
  load->add_option("--scenario", scenarios, "Comma-separated scenarios")->capture_default_str();
  load->add_option("--rate", load_options.rate, "Logins per second")->capture_default_str();
  load->add_option("--duration", load_options.duration_s, "Seconds of arrivals")
      ->capture_default_str();
  load->add_option("--pool", load_options.user_pool, "Distinct users")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path descriptor =
        stack_path.empty()
            ? miso::deploy::ResolveStateDir(state_dir) / miso::deploy::kStackFile
            : fs::path(stack_path);
    const auto topology = miso::harness::Topology::Load(descriptor);

    if (login->parsed()) {
      auto result = miso::harness::DriveLogin(topology, RequireRp(topology, rp_id),
                                              {user, SplitCommas(idps), m});
      json report = {{"ok", result.ok},
                     {"sub", result.sub},
                     {"account", result.account},
                     {"status", result.status},
                     {"error", result.error},
                     {"failing_url", result.failing_url},
                     {"hops", result.hops.size()},
                     {"latency_ms", result.latency_ms}};
      std::printf("%s\n", report.dump(2).c_str());
      WriteJson(json_out, report);
      return result.ok ? 0 : 1;
    }

    if (game->parsed()) {
      if (!game_users.empty()) game_options.users = SplitCommas(game_users);
      miso::harness::GameReport report;
      if (game_kind == "idp") {
        report = miso::harness::RunIdpUnlinkabilityGame(topology, game_options);
      } else if (game_kind == "rp") {
        report = miso::harness::RunRpUnlinkabilityGame(topology, game_options);
      } else {
        report = miso::harness::RunCollusiveGame(topology, game_options);
      }
      std::printf("%s\n", report.ToJson().dump(2).c_str());
      std::printf("%s: %s\n", report.game.c_str(), report.passed() ? "PASS" : "FAIL");
      WriteJson(json_out, report.ToJson());
      return report.passed() ? 0 : 1;
    }

    if (subsets->parsed()) {
      std::vector<std::string> ids = idps.empty() ? topology.IdpIds() : SplitCommas(idps);
      auto report = miso::harness::RunSubsetOracle(topology, RequireRp(topology, rp_id), user,
                                                   ids, m.value_or(2));
      std::printf("%s", report.FormatTable().c_str());
      std::printf("subsets: %s\n", report.passed() ? "PASS" : "FAIL");
      WriteJson(json_out, report.ToJson());
      return report.passed() ? 0 : 1;
    }

    if (load->parsed()) {
      std::vector<miso::harness::LoadSample> samples;
      json arr = json::array();
      bool ok = true;
      for (const auto& name : SplitCommas(scenarios)) {
        auto scenario = miso::harness::ParseScenario(name);
        if (!scenario) throw std::invalid_argument("unknown scenario " + name);
        load_options.scenario = *scenario;
        samples.push_back(miso::harness::RunLoad(topology, load_options));
        ok = ok && samples.back().errors == 0;
        arr.push_back(samples.back().ToJson());
      }
      std::printf("%s", miso::harness::FormatLoadTable(samples).c_str());
      WriteJson(json_out, {{"samples", arr}});
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "harness: %s\n", e.what());
    return 2;
  }
  return 0;
}
