#ifndef MISO_HARNESS_USER_AGENT_H_
#define MISO_HARNESS_USER_AGENT_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "miso/net/http.h"
#include "miso/net/http_client.h"

namespace miso::harness {

// The login form an IdP renders: its action and hidden fields.
struct LoginForm {
  std::string action;
  net::Params hidden;
};

// Finds a form containing a password input. Only the markup the IdP emits is
// understood; this is not a general HTML parser.
std::optional<LoginForm> ParseLoginForm(const std::string& html);

struct Hop {
  std::string method;
  std::string url;
  int status = 0;
  std::string location;
};

struct Navigation {
  net::HttpResponse response;  // last response received
  std::string url;             // URL that produced |response|
  std::vector<Hop> hops;
  // Set when navigation stopped at a redirect whose target matched the prefix.
  std::optional<std::string> stopped_at;
  bool loop_detected = false;
};

// Headless browser: follows 302s, keeps per-origin cookies and fills IdP
// login forms with per-origin credentials.
class UserAgent {
 public:
  explicit UserAgent(net::ClientOptions options = {});

  // consent is "grant" or "deny".
  void SetCredentials(const std::string& origin, std::string username, std::string password,
                      std::string consent = "grant");

  // GETs |url| and follows redirects and login forms. Stops before requesting
  // any URL starting with |stop_prefix| (if non-empty).
  Navigation Navigate(const std::string& url, const std::string& stop_prefix = "",
                      int max_hops = 30);

  net::HttpResponse Get(const std::string& url);
  net::HttpResponse PostForm(const std::string& url, const net::Params& form);

  std::optional<std::string> Cookie(const std::string& origin, const std::string& name) const;
  void ClearCookies() { cookies_.clear(); }

 private:
  struct Credential {
    std::string username;
    std::string password;
    std::string consent;
  };

  net::Headers CookieHeader(const std::string& url) const;
  void StoreCookies(const std::string& url, const net::HttpResponse& response);

  net::HttpClient http_;
  std::map<std::string, Credential> credentials_;
  std::map<std::string, std::map<std::string, std::string>> cookies_;
};

}  // namespace miso::harness

#endif  // MISO_HARNESS_USER_AGENT_H_
