#include "miso/harness/driver.h"

#include <chrono>
#include <stdexcept>

#include "miso/idp/fixtures.h"
#include "miso/net/http_client.h"
#include "miso/net/url.h"

namespace miso::harness {

std::string JoinIdps(const std::vector<std::string>& idps) {
  std::string out;
  for (const auto& id : idps) out += (out.empty() ? "" : ",") + id;
  return out;
}

LoginResult DriveLogin(const Topology& topology, const RpNode& rp, const LoginRequest& request,
                       UserAgent* agent) {
  UserAgent local;
  UserAgent& ua = agent ? *agent : local;
  for (const auto& idp : topology.idps) {
    auto url = net::ParseUrl(idp.url);
    if (url) {
      ua.SetCredentials(url->Origin(), request.username,
                        idp::FixturePassword(request.username), request.consent);
    }
  }
  net::Params params;
  if (!request.idps.empty()) params["idp_list"] = JoinIdps(request.idps);
  if (request.m) params["m"] = std::to_string(*request.m);

  const auto start = std::chrono::steady_clock::now();
  Navigation nav = ua.Navigate(net::AppendQuery(rp.url + "/login", params));
  LoginResult result;
  result.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  result.hops = std::move(nav.hops);
  result.status = nav.response.status;

  auto final_url = net::ParseUrl(nav.url);
  nlohmann::json body = nav.response.Json();
  if (nav.response.status == 200 && final_url && final_url->path == "/me" &&
      body.is_object() && body.contains("sub") && body["sub"].is_string()) {
    result.ok = true;
    result.sub = body["sub"].get<std::string>();
    result.account = std::move(body);
    return result;
  }
  result.failing_step = static_cast<int>(result.hops.size()) - 1;
  result.failing_url = nav.url;
  if (nav.loop_detected) {
    result.error = "redirect_loop";
  } else if (nav.response.status == 0) {
    result.error = "transport: " + nav.response.error;
  } else if (auto oauth_error = nav.response.OAuthError()) {
    result.error = *oauth_error;
  } else {
    result.error = "http_" + std::to_string(nav.response.status);
  }
  return result;
}

std::vector<net::TranscriptEntry> FetchTranscript(const std::string& base_url) {
  net::HttpClient http;
  auto resp = http.Get(base_url + "/debug/transcript");
  if (!resp.ok()) {
    throw std::runtime_error("no transcript at " + base_url + " (status " +
                             std::to_string(resp.status) + ")");
  }
  return net::Transcript::FromJson(resp.Json());
}

void ClearTranscript(const std::string& base_url) {
  net::HttpClient http;
  auto resp = http.PostForm(base_url + "/debug/transcript/clear", {});
  if (!resp.ok()) throw std::runtime_error("cannot clear transcript at " + base_url);
}

std::vector<nlohmann::json> FetchRpLog(const std::string& rp_url) {
  net::HttpClient http;
  auto resp = http.Get(rp_url + "/debug/log");
  if (!resp.ok()) throw std::runtime_error("no log at " + rp_url);
  return resp.Json().get<std::vector<nlohmann::json>>();
}

}  // namespace miso::harness
