#include "miso/oauth/oauth.h"

#include "miso/net/url.h"

namespace miso::oauth {

bool IsAcceptableRedirectUri(std::string_view uri, bool allow_http_loopback) {
  auto url = net::ParseUrl(uri);
  if (!url) return false;
  if (url->scheme == "https") return true;
  return allow_http_loopback && url->IsLoopback();
}

}  // namespace miso::oauth
