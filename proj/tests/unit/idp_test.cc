#include "miso/idp/idp_service.h"

#include <gtest/gtest.h>

#include "miso/net/http_client.h"
#include "miso/net/url.h"
#include "test_util.h"

namespace miso::idp {
namespace {

constexpr char kRedirect[] = "http://127.0.0.1:9/callback";

class IdpServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    IdpOptions options;
    options.idp_id = "idp-a";
    options.state_dir = dir_.path();
    options.fixtures = GenerateFixtures("idp-a", 4);
    options.clock = clock_.AsClock();
    service_ = std::make_unique<IdpService>(std::move(options));
    service_->Listen("127.0.0.1", 0);
    client_ = service_->RegisterClient(kRedirect, "mixer");
  }

  net::Params AuthParams(const std::string& state = "st-1") const {
    return {{"response_type", "code"},
            {"client_id", client_.client_id},
            {"redirect_uri", kRedirect},
            {"state", state}};
  }

  net::HttpResponse Authorize(net::Params form) const {
    return http_.PostForm(service_->base_url() + "/auth_IdP", form);
  }

  std::string LoginCode(const std::string& user = "alice") const {
    net::Params form = AuthParams();
    form["username"] = user;
    form["password"] = "pw-" + user;
    form["consent"] = "grant";
    auto resp = Authorize(form);
    EXPECT_EQ(resp.status, 302);
    auto loc = net::ParseUrl(resp.Header("location").value_or(""));
    return loc ? loc->query["code"] : "";
  }

  net::HttpResponse Redeem(const std::string& code,
                           const std::string& secret = "") const {
    return http_.PostForm(service_->base_url() + "/token_IdP",
                          {{"grant_type", "authorization_code"},
                           {"code", code},
                           {"redirect_uri", kRedirect},
                           {"client_id", client_.client_id},
                           {"client_secret", secret.empty() ? client_.client_secret : secret}});
  }

  miso::testing::TempDir dir_;
  SkewedClock clock_;
  std::unique_ptr<IdpService> service_;
  IdpClient client_;
  net::HttpClient http_;
};

TEST_F(IdpServiceTest, AuthorizeGetRendersLoginForm) {
  auto resp = http_.Get(net::AppendQuery(service_->base_url() + "/auth_IdP", AuthParams()));
  EXPECT_EQ(resp.status, 200);
  EXPECT_NE(resp.body.find("name=\"password\""), std::string::npos);
  EXPECT_NE(resp.body.find("mixer"), std::string::npos);
}

TEST_F(IdpServiceTest, GrantRedirectsWithCodeAndEchoedState) {
  net::Params form = AuthParams("opaque-state");
  form["username"] = "alice";
  form["password"] = "pw-alice";
  form["consent"] = "grant";
  auto resp = Authorize(form);
  ASSERT_EQ(resp.status, 302);
  auto loc = net::ParseUrl(*resp.Header("location"));
  ASSERT_TRUE(loc);
  EXPECT_EQ(loc->Origin() + loc->path, kRedirect);
  EXPECT_EQ(loc->query["state"], "opaque-state");
  EXPECT_FALSE(loc->query["code"].empty());
}

TEST_F(IdpServiceTest, DenyRedirectsWithAccessDeniedAndNoCode) {
  net::Params form = AuthParams();
  form["consent"] = "deny";
  auto resp = Authorize(form);
  ASSERT_EQ(resp.status, 302);
  auto loc = net::ParseUrl(*resp.Header("location"));
  EXPECT_EQ(loc->query["error"], "access_denied");
  EXPECT_EQ(loc->query.count("code"), 0u);
}

TEST_F(IdpServiceTest, RedirectMismatchIsRejectedWithoutRedirect) {
  net::Params form = AuthParams();
  form["redirect_uri"] = "http://127.0.0.1:9/callbacK";
  auto resp = http_.Get(net::AppendQuery(service_->base_url() + "/auth_IdP", form));
  EXPECT_EQ(resp.status, 400);
  EXPECT_FALSE(resp.Header("location"));
}

TEST_F(IdpServiceTest, UnknownClientAndBadResponseTypeRejected) {
  net::Params form = AuthParams();
  form["client_id"] = "nope";
  EXPECT_EQ(Authorize(form).OAuthError(), "invalid_client");
  form = AuthParams();
  form["response_type"] = "token";
  EXPECT_EQ(Authorize(form).OAuthError(), "unsupported_response_type");
}

TEST_F(IdpServiceTest, BadPasswordRepromptsWith401) {
  net::Params form = AuthParams();
  form["username"] = "alice";
  form["password"] = "wrong";
  form["consent"] = "grant";
  auto resp = Authorize(form);
  EXPECT_EQ(resp.status, 401);
  EXPECT_NE(resp.body.find("<form"), std::string::npos);
}

TEST_F(IdpServiceTest, TokenAndResourceReturnStoredUser) {
  auto token = Redeem(LoginCode());
  ASSERT_EQ(token.status, 200);
  auto j = token.Json();
  EXPECT_EQ(j["token_type"], "Bearer");
  EXPECT_EQ(j["expires_in"], 3600);
  EXPECT_EQ(j["access_token"].get<std::string>().size(), 43u);

  auto res = http_.Get(service_->base_url() + "/res_IdP",
                       {{"Authorization", "Bearer " + j["access_token"].get<std::string>()}});
  ASSERT_EQ(res.status, 200);
  auto body = res.Json();
  EXPECT_EQ(body["uid"], "alice-001");
  EXPECT_EQ(body["attributes"]["email"], "alice@idp-a.test");
}

TEST_F(IdpServiceTest, CodeReplayIsInvalidGrant) {
  std::string code = LoginCode();
  ASSERT_EQ(Redeem(code).status, 200);
  auto replay = Redeem(code);
  EXPECT_EQ(replay.status, 400);
  EXPECT_EQ(replay.OAuthError(), "invalid_grant");
}

TEST_F(IdpServiceTest, WrongSecretIsInvalidClient) {
  auto resp = Redeem(LoginCode(), "not-the-secret");
  EXPECT_EQ(resp.status, 401);
  EXPECT_EQ(resp.OAuthError(), "invalid_client");
}

TEST_F(IdpServiceTest, ExpiredCodeAndTokenRejected) {
  std::string code = LoginCode();
  clock_.Advance(std::chrono::seconds(601));
  EXPECT_EQ(Redeem(code).OAuthError(), "invalid_grant");
  clock_.Reset();

  auto token = Redeem(LoginCode()).Json()["access_token"].get<std::string>();
  clock_.Advance(std::chrono::seconds(3601));
  auto res = http_.Get(service_->base_url() + "/res_IdP",
                       {{"Authorization", "Bearer " + token}});
  EXPECT_EQ(res.status, 401);
  EXPECT_EQ(res.OAuthError(), "invalid_token");
}

TEST_F(IdpServiceTest, RegisterEndpointPersistsClients) {
  auto resp = http_.PostJson(service_->base_url() + "/register",
                             {{"redirect_uri", "https://mixer.example/callback"},
                              {"client_name", "mixer"}});
  ASSERT_EQ(resp.status, 201);
  std::string id = resp.Json()["client_id"];
  service_->Stop();

  IdpOptions options;
  options.idp_id = "idp-a";
  options.state_dir = dir_.path();
  IdpService reopened(std::move(options));
  auto found = reopened.FindClient(id);
  ASSERT_TRUE(found);
  EXPECT_EQ(found->redirect_uri, "https://mixer.example/callback");
}

TEST_F(IdpServiceTest, RegisterRejectsMalformedUri) {
  auto resp = http_.PostJson(service_->base_url() + "/register",
                             {{"redirect_uri", "not a url"}});
  EXPECT_EQ(resp.status, 400);
  EXPECT_EQ(resp.OAuthError(), "invalid_redirect_uri");
}

}  // namespace
}  // namespace miso::idp
