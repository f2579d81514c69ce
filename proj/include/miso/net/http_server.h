#ifndef MISO_NET_HTTP_SERVER_H_
#define MISO_NET_HTTP_SERVER_H_

#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "miso/net/http.h"
#include "miso/net/transcript.h"

namespace miso::net {

struct ServerOptions {
  int worker_threads = 16;
  // Both set -> HTTPS; both empty -> plaintext.
  std::string tls_cert_file;
  std::string tls_key_file;
};

// Thin wrapper over cpp-httplib so the services deal only in Request/Reply.
// Always serves GET /healthz. With a transcript attached it also records every
// request and serves GET /debug/transcript and POST /debug/transcript/clear.
class HttpServer {
 public:
  using Handler = std::function<Reply(const Request&)>;

  explicit HttpServer(ServerOptions options = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  void Get(const std::string& path, Handler handler);
  void Post(const std::string& path, Handler handler);
  void AttachTranscript(std::shared_ptr<Transcript> transcript);

  // Binds the listening socket. |port| 0 picks an ephemeral port. Returns the
  // bound port; throws std::runtime_error if the address is unavailable.
  int Bind(const std::string& host, int port);
  // Serves on a background thread. Bind must have succeeded.
  void Start();
  void Stop();

  bool tls() const;
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace miso::net

#endif  // MISO_NET_HTTP_SERVER_H_
