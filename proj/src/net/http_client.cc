#include "miso/net/http_client.h"

#include <cctype>

#include "httplib.h"

namespace miso::net {
namespace {

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

HttpClient::HttpClient(ClientOptions options, std::shared_ptr<Transcript> tap)
    : options_(std::move(options)), tap_(std::move(tap)) {}

HttpResponse HttpClient::Get(const std::string& url, const Headers& headers) const {
  return Send("GET", url, "", "", headers);
}

HttpResponse HttpClient::PostForm(const std::string& url, const Params& form,
                                  const Headers& headers) const {
  return Send("POST", url, EncodeQuery(form), "application/x-www-form-urlencoded",
              headers);
}

HttpResponse HttpClient::PostJson(const std::string& url, const nlohmann::json& body,
                                  const Headers& headers) const {
  return Send("POST", url, body.dump(), "application/json", headers);
}

HttpResponse HttpClient::Send(const std::string& method, const std::string& url,
                              const std::string& body, const std::string& content_type,
                              const Headers& headers) const {
  HttpResponse out;
  auto parsed = ParseUrl(url);
  if (!parsed) {
    out.error = "malformed url: " + url;
    return out;
  }
  httplib::Client client(parsed->Origin());
  client.set_connection_timeout(options_.connect_timeout);
  client.set_read_timeout(options_.read_timeout);
  client.set_write_timeout(options_.read_timeout);
  client.set_keep_alive(false);
  if (parsed->scheme == "https") {
    if (options_.ca_cert_file.empty()) {
      client.enable_server_certificate_verification(false);
    } else {
      client.set_ca_cert_path(options_.ca_cert_file);
    }
  }

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  const std::string target = parsed->Target();

  httplib::Result result =
      method == "GET" ? client.Get(target, hdrs)
                      : client.Post(target, hdrs, body, content_type);
  if (!result) {
    out.error = httplib::to_string(result.error());
    return out;
  }
  out.status = result->status;
  out.body = result->body;
  for (const auto& [k, v] : result->headers) out.headers[Lower(k)] = v;
  if (tap_) tap_->RecordResponse(method, *parsed, out);
  return out;
}

}  // namespace miso::net
