#ifndef MISO_NET_HTTP_CLIENT_H_
#define MISO_NET_HTTP_CLIENT_H_

#include <chrono>
#include <memory>
#include <string>

#include "json.hpp"
#include "miso/net/http.h"
#include "miso/net/transcript.h"

namespace miso::net {

struct ClientOptions {
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{60};
  // For https: verify against this CA bundle, or skip verification if empty.
  std::string ca_cert_file;
};

// One connection per request ("Connection: close"), never follows redirects.
// With a transcript attached, every response received is recorded.
class HttpClient {
 public:
  explicit HttpClient(ClientOptions options = {},
                      std::shared_ptr<Transcript> tap = nullptr);

  HttpResponse Get(const std::string& url, const Headers& headers = {}) const;
  HttpResponse PostForm(const std::string& url, const Params& form,
                        const Headers& headers = {}) const;
  HttpResponse PostJson(const std::string& url, const nlohmann::json& body,
                        const Headers& headers = {}) const;

 private:
  HttpResponse Send(const std::string& method, const std::string& url,
                    const std::string& body, const std::string& content_type,
                    const Headers& headers) const;

  ClientOptions options_;
  std::shared_ptr<Transcript> tap_;
};

}  // namespace miso::net

#endif  // MISO_NET_HTTP_CLIENT_H_
