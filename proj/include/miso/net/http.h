#ifndef MISO_NET_HTTP_H_
#define MISO_NET_HTTP_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "miso/net/url.h"

namespace miso::net {

// Header names are stored lowercased.
using Headers = std::map<std::string, std::string>;

struct Request {
  std::string method;
  std::string path;
  Params query;
  Params form;  // parsed from an x-www-form-urlencoded body
  Headers headers;
  std::string body;

  // Query parameter, falling back to a form field.
  std::optional<std::string> Param(const std::string& name) const;
  std::optional<std::string> Header(const std::string& name) const;
  std::optional<std::string> Cookie(std::string_view name) const;
  // Value of "Authorization: Bearer <token>".
  std::optional<std::string> BearerToken() const;
};

struct Reply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;

  static Reply Json(int status, const nlohmann::json& body);
  // OAuth 2.0 error shape: {"error": code}.
  static Reply Error(int status, std::string_view code);
  static Reply Redirect(std::string location);
  static Reply Html(int status, std::string body);
  static Reply Text(int status, std::string body);

  Reply& SetCookie(std::string_view name, std::string_view value);
  Reply& AddHeader(std::string name, std::string value);
  std::optional<std::string> Location() const;
};

struct HttpResponse {
  int status = 0;       // 0 when the request never completed
  std::string error;    // transport error when status == 0
  Headers headers;
  std::string body;

  std::optional<std::string> Header(const std::string& name) const;
  bool ok() const { return status >= 200 && status < 300; }
  bool redirect() const { return status >= 300 && status < 400; }
  // Parsed JSON body, or a discarded value on parse failure.
  nlohmann::json Json() const;
  // The "error" member of a JSON error body, if any.
  std::optional<std::string> OAuthError() const;
};

}  // namespace miso::net

#endif  // MISO_NET_HTTP_H_
