// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "miso/common/clock.h"
#include "miso/crypto/bytes.h"
#include "miso/crypto/identity.h"
#include "miso/crypto/prf.h"
#include "miso/crypto/random.h"
#include "miso/enclave/attestation_platform.h"
#include "miso/harness/driver.h"
#include "miso/harness/games.h"
#include "miso/harness/load.h"
#include "miso/harness/local_stack.h"
#include "miso/harness/user_agent.h"
#include "miso/idp/fixtures.h"
#include "miso/net/http_client.h"
#include "miso/net/url.h"
#include "../unit/test_util.h"

namespace miso::acceptance {
namespace {

using crypto::Bytes;
using crypto::HexEncode;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double runtime_limit_s;  // 0 for no limit
  std::function<Outcome()> run;
};

std::string Fmt(const char* format, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

harness::StackOptions StackFor(const std::filesystem::path& dir, bool transcripts, Clock clock) {
  harness::StackOptions o;
  o.state_dir = dir;
  o.idp_count = 3;
  o.rp_count = 2;
  o.baseline_rp = true;
  o.users_per_idp = 256;
  o.record_transcript = transcripts;
  o.clock = std::move(clock);
  return o;
}

// 20 logins of one user at RP0 give one sub; RP1 differs; a mixer restart
// keeps the RP0 sub.
Outcome Determinism() {
  testing::TempDir dir;
  harness::LocalStack stack(StackFor(dir.path(), false, SystemClock()));
  const auto& t = stack.topology();
  std::set<std::string> subs0;
  for (int i = 0; i < 20; ++i) {
    auto r = harness::DriveLogin(t, t.rps[0], {"alice", {"idp-a"}});
    if (!r.ok) return {false, "login " + std::to_string(i) + " failed: " + r.error};
    subs0.insert(r.sub);
  }
  auto rp1 = harness::DriveLogin(t, t.rps[1], {"alice", {"idp-a"}});
  if (!rp1.ok) return {false, "RP1 login failed: " + rp1.error};
  stack.RestartMixer();
  auto after = harness::DriveLogin(stack.topology(), stack.topology().rps[0], {"alice", {"idp-a"}});
  if (!after.ok) return {false, "login after restart failed: " + after.error};
  const std::string sub0 = *subs0.begin();
  bool pass = subs0.size() == 1 && rp1.sub != sub0 && after.sub == sub0;
  std::ostringstream d;
  d << "distinct RP0 subs=" << subs0.size() << ", RP1 differs=" << (rp1.sub != sub0)
    << ", stable across restart=" << (after.sub == sub0);
  return {pass, d.str()};
}

// IdP, RP and collusive games, 50 randomized logins each.
Outcome TranscriptPrivacy() {
  testing::TempDir dir;
  harness::LocalStack stack(StackFor(dir.path(), true, SystemClock()));
  harness::GameOptions o;
  o.trials = 50;
  o.seed = static_cast<uint64_t>(std::random_device{}());
  o.users = {"alice", "bob"};
  auto idp = harness::RunIdpUnlinkabilityGame(stack.topology(), o);
  auto rp = harness::RunRpUnlinkabilityGame(stack.topology(), o);
  auto col = harness::RunCollusiveGame(stack.topology(), o);
  std::ostringstream d;
  d << "seed=" << o.seed;
  bool pass = true;
  for (const auto* r : {&idp, &rp, &col}) {
    d << ", " << r->game << ": logins=" << r->logins << " failures=" << r->login_failures
      << " violations=" << r->violations.size();
    if (!r->violations.empty()) d << " (" << r->violations.front() << ")";
    if (!r->failures.empty()) d << " (" << r->failures.front() << ")";
    pass = pass && r->passed() && r->logins > 0;
  }
  return {pass, d.str()};
}

Outcome SubsetOracle() {
  testing::TempDir dir;
  harness::LocalStack stack(StackFor(dir.path(), false, SystemClock()));
  auto report = harness::RunSubsetOracle(stack.topology(), stack.topology().rps[0], "carol",
                                         {"idp-a", "idp-b", "idp-c"}, 2);
  int successes = 0;
  int threshold_failures = 0;
  for (const auto& row : report.rows) {
    if (row.success) ++successes;
    if (!row.success && row.error == "threshold_not_met") ++threshold_failures;
  }
  std::ostringstream d;
  d << "rows=" << report.rows.size() << ", size>=2 successes with enrollment sub=" << successes
    << "/4, threshold_not_met singletons=" << threshold_failures << "/3";
  if (!report.enrollment_error.empty()) d << ", enrollment error " << report.enrollment_error;
  return {report.passed() && report.rows.size() == 7, d.str()};
}

std::string OracleOutput(const std::string& script) {
  std::string out;
  FILE* pipe = ::popen(("python3 " + script + " 2>/dev/null").c_str(), "r");
  if (pipe == nullptr) return out;
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) out += buf;
  ::pclose(pipe);
  return out;
}

// RFC 4231 vectors, then the derivation vectors against the Python oracle.
Outcome CryptoConformance(const std::string& oracle_script) {
  struct Vector {
    Bytes key;
    Bytes msg;
    std::string expected;
  };
  const std::vector<Vector> rfc4231 = {
      {Bytes(20, 0x0b), crypto::ToBytes("Hi There"),
       "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"},
      {crypto::ToBytes("Jefe"), crypto::ToBytes("what do ya want for nothing?"),
       "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"},
      {Bytes(20, 0xaa), Bytes(50, 0xdd),
       "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"},
      {Bytes(131, 0xaa),
       crypto::ToBytes("Test Using Larger Than Block-Size Key - Hash Key First"),
       "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"},
  };
  int rfc_ok = 0;
  for (const auto& v : rfc4231) {
    if (HexEncode(crypto::HmacSha256(v.key, v.msg)) == v.expected) ++rfc_ok;
  }

  const auto key = crypto::PrfKey::FromBytes(Bytes(32, 0));
  crypto::Salt salt;
  salt.fill(0x01);
  const crypto::RawUserId alice{"idp-a", "alice"};
  const std::vector<crypto::RawUserId> abc = {
      {"idp-a", "alice"}, {"idp-b", "alice-b"}, {"idp-c", "alice-c"}};
  const std::vector<std::pair<std::string, std::string>> ours = {
      {"pre_uid_cid1", HexEncode(crypto::DerivePreUid(key, alice, "cid-1"))},
      {"uid_salt1", HexEncode(crypto::DeriveUid(key, alice, "cid-1", salt))},
      {"multi_abc", HexEncode(crypto::DeriveMultiUid(key, abc, "cid-1", salt))},
  };

  std::map<std::string, std::string> oracle;
  std::istringstream lines(OracleOutput(oracle_script));
  std::string name, value;
  while (lines >> name >> value) oracle[name] = value;
  int golden_ok = 0;
  for (const auto& [n, v] : ours) {
    if (oracle.count(n) && oracle[n] == v) ++golden_ok;
  }
  std::ostringstream d;
  d << "RFC 4231 " << rfc_ok << "/4, golden vectors matching oracle " << golden_ok << "/3";
  if (oracle.empty()) d << " (oracle did not run)";
  return {rfc_ok == 4 && golden_ok == 3, d.str()};
}

// Seal round trips in both modes, cross-measurement refusal, attestation tampers.
Outcome SealingAndAttestation() {
  testing::TempDir dir;
  auto platform = enclave::AttestationPlatform::Open(dir.path());
  const auto v1 = platform->Install(crypto::AsBytes("miso-mixer-v1"), "miso-dev-signer");
  const auto v2 = platform->Install(crypto::AsBytes("miso-mixer-v2"), "miso-dev-signer");
  std::mt19937_64 rng(std::random_device{}());

  int round_trips = 0;
  int refused = 0;
  int signer_shared = 0;
  for (int i = 0; i < 100; ++i) {
    Bytes record = crypto::RandomBytes(1 + rng() % 512);
    for (auto mode : {enclave::SealMode::kMrEnclave, enclave::SealMode::kMrSigner}) {
      auto blob = enclave::SealedBlob::Parse(
          platform->Seal(v1.eid, "record", record, mode).Serialize());
      if (platform->Unseal(v1.eid, "record", blob, mode) == record) ++round_trips;
      if (mode == enclave::SealMode::kMrEnclave) {
        try {
          platform->Unseal(v2.eid, "record", blob, mode);
        } catch (const enclave::SealTamperError&) {
          ++refused;
        }
      } else if (platform->Unseal(v2.eid, "record", blob, mode) == record) {
        ++signer_shared;
      }
    }
  }

  const Bytes payload = crypto::RandomBytes(32);
  const auto report = platform->Attest(v1.eid, payload);
  const Bytes pk = platform->GetPublicKey();
  bool genuine = enclave::VerifyAttestation(pk, report, v1.measurement);
  int rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    enclave::AttestationReport t = report;
    const uint8_t flip = static_cast<uint8_t>(1 + rng() % 255);
    switch (rng() % 3) {
      case 0: t.measurement[rng() % t.measurement.size()] ^= flip; break;
      case 1: t.payload[rng() % t.payload.size()] ^= flip; break;
      default: t.signature[rng() % t.signature.size()] ^= flip; break;
    }
    if (!enclave::VerifyAttestation(pk, t, v1.measurement)) ++rejected;
  }
  std::ostringstream d;
  d << "round trips " << round_trips << "/200, MRENCLAVE refused under other measurement "
    << refused << "/100, MRSIGNER shared " << signer_shared << "/100, genuine report verifies="
    << genuine << ", tampered reports rejected " << rejected << "/1000";
  return {round_trips == 200 && refused == 100 && signer_shared == 100 && genuine &&
              rejected == 1000,
          d.str()};
}

// Code replay, token expiry, wrong secret and stale state, 20 attempts each.
Outcome OAuthHygiene() {
  testing::TempDir dir;
  SkewedClock clock;
  harness::LocalStack stack(StackFor(dir.path(), false, clock.AsClock()));
  const std::string mixer_url = stack.mixer().base_url();
  const auto client = stack.mixer().RegisterRp("http://127.0.0.1:1/cb");
  net::HttpClient http;
  std::mt19937_64 rng(std::random_device{}());

  auto obtain_code = [&](const std::string& user) -> std::string {
    harness::UserAgent ua;
    for (const auto& idp : stack.topology().idps) {
      ua.SetCredentials(net::ParseUrl(idp.url)->Origin(), user, idp::FixturePassword(user));
    }
    auto nav = ua.Navigate(net::AppendQuery(mixer_url + "/auth_mixer",
                                            {{"response_type", "code"},
                                             {"client_id", client.client_id},
                                             {"redirect_uri", client.redirect_uri},
                                             {"state", crypto::GenSecretToken()},
                                             {"idp_list", "idp-a"}}),
                           client.redirect_uri);
    return nav.stopped_at ? net::ParseUrl(*nav.stopped_at)->query["code"] : "";
  };
  auto redeem = [&](const std::string& code, const std::string& secret) {
    return http.PostForm(mixer_url + "/token_mixer", {{"grant_type", "authorization_code"},
                                                      {"code", code},
                                                      {"redirect_uri", client.redirect_uri},
                                                      {"client_id", client.client_id},
                                                      {"client_secret", secret}});
  };
  auto random_user = [&] { return idp::FixtureUsername(static_cast<int>(rng() % 8)); };

  int replay_ok = 0, expiry_ok = 0, secret_ok = 0, csrf_ok = 0;
  int setup_failures = 0;
  for (int i = 0; i < 20; ++i) {
    std::string code = obtain_code(random_user());
    auto first = redeem(code, client.client_secret);
    if (code.empty() || first.status != 200) {
      ++setup_failures;
    } else {
      auto replay = redeem(code, client.client_secret);
      if (replay.status == 400 && replay.OAuthError() == "invalid_grant") ++replay_ok;
    }

    code = obtain_code(random_user());
    auto token = redeem(code, client.client_secret);
    if (token.status != 200) {
      ++setup_failures;
    } else {
      const std::string access = token.Json()["access_token"];
      clock.Advance(std::chrono::seconds(3600 + 1 + static_cast<int64_t>(rng() % 7200)));
      auto res = http.Get(mixer_url + "/res_mixer", {{"Authorization", "Bearer " + access}});
      clock.Reset();
      if (res.status == 401 && res.OAuthError() == "invalid_token") ++expiry_ok;
    }

    code = obtain_code(random_user());
    auto wrong = redeem(code, crypto::GenSecretToken());
    auto right = redeem(code, client.client_secret);
    if (wrong.status == 401 && wrong.OAuthError() == "invalid_client") ++secret_ok;
    if (right.status != 200) ++setup_failures;

    const auto& rp = stack.topology().rps[rng() % 2];
    harness::UserAgent ua;
    const std::string user = random_user();
    for (const auto& idp : stack.topology().idps) {
      ua.SetCredentials(net::ParseUrl(idp.url)->Origin(), user, idp::FixturePassword(user));
    }
    auto nav = ua.Navigate(rp.url + "/login?idp_list=idp-a", rp.url + "/cb");
    if (!nav.stopped_at) {
      ++setup_failures;
      continue;
    }
    net::HttpResponse stale;
    switch (rng() % 3) {
      case 0: {  // replayed after a completed login
        ua.Get(*nav.stopped_at);
        stale = ua.Get(*nav.stopped_at);
        break;
      }
      case 1: {  // forged state value
        auto url = *net::ParseUrl(*nav.stopped_at);
        url.query["state"] = crypto::GenSecretToken();
        stale = ua.Get(net::AppendQuery(rp.url + "/cb", url.query));
        break;
      }
      default: {  // expired session
        clock.Advance(std::chrono::seconds(901 + static_cast<int64_t>(rng() % 3600)));
        stale = ua.Get(*nav.stopped_at);
        clock.Reset();
        break;
      }
    }
    if (stale.status == 403 && stale.OAuthError() == "state_mismatch") ++csrf_ok;
  }
  std::ostringstream d;
  d << "code replay " << replay_ok << "/20, token expiry " << expiry_ok
    << "/20, wrong secret " << secret_ok << "/20, stale state " << csrf_ok
    << "/20, setup failures " << setup_failures;
  return {replay_ok == 20 && expiry_ok == 20 && secret_ok == 20 && csrf_ok == 20 &&
              setup_failures == 0,
          d.str()};
}

// 50 logins/s for 30 s per scenario, transcripts off.
Outcome LatencyRatio(double rate, double duration_s) {
  testing::TempDir dir;
  harness::LocalStack stack(StackFor(dir.path(), false, SystemClock()));
  std::map<harness::Scenario, harness::LoadSample> samples;
  for (auto s : {harness::Scenario::kBaselineSso, harness::Scenario::kMisoSingle,
                 harness::Scenario::kMisoMulti2of3}) {
    harness::LoadOptions o;
    o.scenario = s;
    o.rate = rate;
    o.duration_s = duration_s;
    o.user_pool = 16;
    samples[s] = harness::RunLoad(stack.topology(), o);
  }
  const auto& base = samples[harness::Scenario::kBaselineSso];
  const auto& single = samples[harness::Scenario::kMisoSingle];
  const auto& multi = samples[harness::Scenario::kMisoMulti2of3];
  const double ratio = base.mean_ms > 0 ? single.mean_ms / base.mean_ms : 0;
  const int errors = base.errors + single.errors + multi.errors;
  const bool complete = base.completed > 0 && single.completed > 0 && multi.completed > 0;
  std::string d = Fmt("mean baseline=%.2f ms, single=%.2f ms, ", base.mean_ms, single.mean_ms) +
                  Fmt("multi_2of3=%.2f ms, ratio single/baseline=%.3f (band [1.5, 3.5]), ",
                      multi.mean_ms, ratio) +
                  "multi>single=" + (multi.mean_ms > single.mean_ms ? "1" : "0") +
                  ", errors=" + std::to_string(errors);
  return {complete && errors == 0 && ratio >= 1.5 && ratio <= 3.5 &&
              multi.mean_ms > single.mean_ms,
          d};
}

Outcome ConcurrencySoak() {
  testing::TempDir dir;
  harness::LocalStack stack(StackFor(dir.path(), false, SystemClock()));
  auto report = harness::RunConcurrentSoak(stack.topology(), 200);
  std::ostringstream d;
  d << "logins=" << report.logins << ", errors=" << report.errors
    << ", distinct users=" << report.distinct_users << ", distinct subs=" << report.distinct_subs;
  if (!report.error_samples.empty()) d << " (" << report.error_samples.front() << ")";
  return {report.passed() && report.logins == 200, d.str()};
}

}  // namespace
}  // namespace miso::acceptance

int main(int argc, char** argv) {
  using namespace miso::acceptance;
  CLI::App app{"Primary acceptance criteria"};
  std::string only;
  std::string oracle = MISO_ORACLE_SCRIPT;
  app.add_option("--only", only, "Run only criteria whose name contains this text");
  app.add_option("--oracle", oracle, "Golden-vector oracle script")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {"determinism_per_rp_blinding", 30, Determinism},
      {"transcript_privacy", 120, TranscriptPrivacy},
      {"multi_idp_2of3_subset_oracle", 60, SubsetOracle},
      {"crypto_conformance", 0, [&] { return CryptoConformance(oracle); }},
      {"sealing_and_attestation", 30, SealingAndAttestation},
      {"oauth_hygiene", 0, OAuthHygiene},
      {"latency_ratio", 0, [] { return LatencyRatio(50, 30); }},
      {"concurrency_soak", 120, ConcurrencySoak},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && c.name.find(only) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.runtime_limit_s > 0 && secs >= c.runtime_limit_s) {
      outcome.pass = false;
      outcome.detail += Fmt(", runtime limit %.0f s exceeded", c.runtime_limit_s);
    }
    if (!outcome.pass) ++failed;
    std::printf("%s %s: %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", c.name.c_str(),
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
