#ifndef MISO_TESTS_UNIT_STACK_TEST_UTIL_H_
#define MISO_TESTS_UNIT_STACK_TEST_UTIL_H_

#include <memory>
#include <string>

#include "miso/harness/driver.h"
#include "miso/harness/local_stack.h"
#include "miso/harness/user_agent.h"
#include "miso/idp/fixtures.h"
#include "miso/net/http_client.h"
#include "miso/net/url.h"
#include "test_util.h"

namespace miso::testing {

// A registered client driving the mixer directly, standing in for an RP.
struct DirectClient {
  mixer::RpRecord record;

  net::Params AuthParams(const std::string& state, const std::string& idp_list = "idp-a") const {
    net::Params p = {{"response_type", "code"},
                     {"client_id", record.client_id},
                     {"redirect_uri", record.redirect_uri},
                     {"state", state}};
    if (!idp_list.empty()) p["idp_list"] = idp_list;
    return p;
  }
};

class StackFixture {
 public:
  explicit StackFixture(harness::StackOptions options = {}) {
    options.state_dir = dir_.path() / "stack";
    options.clock = clock_.AsClock();
    stack_ = std::make_unique<harness::LocalStack>(std::move(options));
  }

  harness::LocalStack& stack() { return *stack_; }
  const harness::Topology& topology() const { return stack_->topology(); }
  SkewedClock& clock() { return clock_; }
  const std::filesystem::path& dir() const { return dir_.path(); }

  harness::LoginResult Login(size_t rp, const std::string& user,
                             std::vector<std::string> idps = {"idp-a"},
                             std::optional<int> m = std::nullopt) {
    return harness::DriveLogin(topology(), topology().rps.at(rp), {user, std::move(idps), m});
  }

  DirectClient RegisterDirectClient(const std::string& uri = "http://127.0.0.1:1/cb") {
    return {stack_->mixer().RegisterRp(uri)};
  }

  harness::UserAgent AgentFor(const std::string& user) const {
    harness::UserAgent ua;
    for (const auto& idp : topology().idps) {
      ua.SetCredentials(net::ParseUrl(idp.url)->Origin(), user, idp::FixturePassword(user));
    }
    return ua;
  }

  // Runs the mixer flow for |client| and returns the code_rp it issues.
  std::string ObtainCode(const DirectClient& client, const std::string& user = "alice",
                         const std::string& idp_list = "idp-a") {
    harness::UserAgent ua = AgentFor(user);
    auto nav = ua.Navigate(
        net::AppendQuery(stack_->mixer().base_url() + "/auth_mixer", client.AuthParams("s", idp_list)),
        client.record.redirect_uri);
    if (!nav.stopped_at) return "";
    return net::ParseUrl(*nav.stopped_at)->query["code"];
  }

  net::HttpResponse Redeem(const DirectClient& client, const std::string& code,
                           const std::string& secret = "") const {
    return http_.PostForm(stack_->mixer().base_url() + "/token_mixer",
                          {{"grant_type", "authorization_code"},
                           {"code", code},
                           {"redirect_uri", client.record.redirect_uri},
                           {"client_id", client.record.client_id},
                           {"client_secret",
                            secret.empty() ? client.record.client_secret : secret}});
  }

  net::HttpResponse Resource(const std::string& token) const {
    return http_.Get(stack_->mixer().base_url() + "/res_mixer",
                     {{"Authorization", "Bearer " + token}});
  }

  const net::HttpClient& http() const { return http_; }

 private:
  TempDir dir_;
  SkewedClock clock_;
  std::unique_ptr<harness::LocalStack> stack_;
  net::HttpClient http_;
};

}  // namespace miso::testing

#endif  // MISO_TESTS_UNIT_STACK_TEST_UTIL_H_
