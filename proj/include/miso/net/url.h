#ifndef MISO_NET_URL_H_
#define MISO_NET_URL_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace miso::net {

using Params = std::map<std::string, std::string>;

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path = "/";
  Params query;

  // scheme://host:port
  std::string Origin() const;
  // path?query
  std::string Target() const;
  std::string ToString() const;
  bool IsLoopback() const;
};

// Absolute http(s) URLs only; nullopt for anything else.
std::optional<Url> ParseUrl(std::string_view text);

std::string PercentEncode(std::string_view s);
std::string PercentDecode(std::string_view s);

// application/x-www-form-urlencoded, keys in map order.
std::string EncodeQuery(const Params& params);
Params ParseQuery(std::string_view text);

// Appends |params| with '?' or '&' as appropriate.
std::string AppendQuery(std::string_view url, const Params& params);

struct HostPort {
  std::string host;
  int port = 0;
};
// "host:port" with port in [0, 65535]; nullopt otherwise.
std::optional<HostPort> ParseHostPort(std::string_view text);

}  // namespace miso::net

#endif  // MISO_NET_URL_H_
