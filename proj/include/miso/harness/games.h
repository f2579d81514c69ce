#ifndef MISO_HARNESS_GAMES_H_
#define MISO_HARNESS_GAMES_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "miso/harness/topology.h"

namespace miso::harness {

// Executable restatements of the unlinkability games. They check literal
// non-leakage (transcript equality, value inequality), which is sound but
// weaker than bounding a computational adversary's advantage.
struct GameOptions {
  int trials = 50;
  uint64_t seed = 1;
  std::vector<std::string> users = {"alice", "bob"};
  // IdP used for single-IdP logins; empty means the first IdP.
  std::string idp;
};

struct GameReport {
  std::string game;
  int trials = 0;
  int logins = 0;
  int login_failures = 0;
  std::vector<std::string> violations;
  std::vector<std::string> failures;  // first few login failures, for diagnosis

  bool passed() const { return login_failures == 0 && violations.empty(); }
  nlohmann::json ToJson() const;
};

// The IdP must not be able to tell which RP a login originated at: its
// parameter-name sets and every non-nonce value are identical across RPs, it
// sees the mixer's client id and never an RP's.
GameReport RunIdpUnlinkabilityGame(const Topology& topology, const GameOptions& options);

// Two RPs must not be able to link a user: subs differ across RPs, never equal
// or contain a raw uid, and the RPs share no high-entropy value.
GameReport RunRpUnlinkabilityGame(const Topology& topology, const GameOptions& options);

// As above with the IdP colluding: additionally, no high-entropy value seen by
// the IdP reaches either RP, and no RP-visible value contains a raw uid or an
// IdP-held attribute value.
GameReport RunCollusiveGame(const Topology& topology, const GameOptions& options);

struct SubsetOutcome {
  std::vector<std::string> idps;
  bool expected_success = false;
  bool success = false;
  std::string sub;
  std::string error;
  bool matches = false;
};

struct SubsetReport {
  std::string enrollment_sub;
  std::string enrollment_error;
  std::vector<SubsetOutcome> rows;

  bool passed() const;
  nlohmann::json ToJson() const;
  std::string FormatTable() const;
};

// Enrolls |username| with all of |idps| at threshold |m|, then attempts every
// non-empty subset. Subsets of size >= m must succeed with the enrollment sub;
// smaller ones must fail with threshold_not_met.
SubsetReport RunSubsetOracle(const Topology& topology, const RpNode& rp,
                             const std::string& username, const std::vector<std::string>& idps,
                             int m);

}  // namespace miso::harness

#endif  // MISO_HARNESS_GAMES_H_
