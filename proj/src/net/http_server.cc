#include "miso/net/http_server.h"

#include <sys/socket.h>

#include <cctype>
#include <stdexcept>

#include "httplib.h"

namespace miso::net {
namespace {

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Request Convert(const httplib::Request& in) {
  Request out;
  out.method = in.method;
  out.path = in.path;
  if (size_t q = in.target.find('?'); q != std::string::npos) {
    out.query = ParseQuery(std::string_view(in.target).substr(q + 1));
  }
  for (const auto& [k, v] : in.headers) out.headers[Lower(k)] = v;
  out.body = in.body;
  auto ct = out.Header("content-type");
  if (ct && ct->find("application/x-www-form-urlencoded") != std::string::npos) {
    out.form = ParseQuery(out.body);
  }
  return out;
}

void Apply(const Reply& reply, httplib::Response& res) {
  res.status = reply.status;
  for (const auto& [k, v] : reply.headers) res.set_header(k, v);
  res.set_content(reply.body, reply.content_type);
}

}  // namespace

struct HttpServer::Impl {
  std::unique_ptr<httplib::Server> server;
  std::shared_ptr<Transcript> transcript;

  httplib::Server::Handler Wrap(Handler handler) {
    return [this, handler = std::move(handler)](const httplib::Request& in,
                                                httplib::Response& res) {
      Request req = Convert(in);
      if (transcript) transcript->RecordRequest(req);
      Apply(handler(req), res);
    };
  }
};

HttpServer::HttpServer(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  if (!options.tls_cert_file.empty() || !options.tls_key_file.empty()) {
    auto ssl = std::make_unique<httplib::SSLServer>(options.tls_cert_file.c_str(),
                                                    options.tls_key_file.c_str());
    if (!ssl->is_valid()) {
      throw std::runtime_error("cannot load TLS certificate/key");
    }
    impl_->server = std::move(ssl);
  } else {
    impl_->server = std::make_unique<httplib::Server>();
  }
  auto& server = *impl_->server;
  const int threads = options.worker_threads;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  // No SO_REUSEPORT: a second listener on a busy port must fail.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal_error";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        Apply(Reply::Json(500, {{"error", "server_error"}, {"error_description", what}}),
              res);
      });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
}

HttpServer::~HttpServer() { Stop(); }

void HttpServer::Get(const std::string& path, Handler handler) {
  impl_->server->Get(path, impl_->Wrap(std::move(handler)));
}

void HttpServer::Post(const std::string& path, Handler handler) {
  impl_->server->Post(path, impl_->Wrap(std::move(handler)));
}

void HttpServer::AttachTranscript(std::shared_ptr<Transcript> transcript) {
  impl_->transcript = transcript;
  impl_->server->Get("/debug/transcript",
                     [transcript](const httplib::Request&, httplib::Response& res) {
                       res.set_content(transcript->ToJson().dump(), "application/json");
                     });
  impl_->server->Post("/debug/transcript/clear",
                      [transcript](const httplib::Request&, httplib::Response& res) {
                        transcript->Clear();
                        res.set_content("{}", "application/json");
                      });
}

int HttpServer::Bind(const std::string& host, int port) {
  auto& server = *impl_->server;
  if (port == 0) {
    int bound = server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":0");
    port_ = bound;
  } else {
    if (!server.bind_to_port(host, port)) {
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) +
                               " (address in use?)");
    }
    port_ = port;
  }
  return port_;
}

void HttpServer::Start() {
  auto* server = impl_->server.get();
  thread_ = std::thread([server] { server->listen_after_bind(); });
  server->wait_until_ready();
}

void HttpServer::Stop() {
  if (impl_ && impl_->server) impl_->server->stop();
  if (thread_.joinable()) thread_.join();
}

bool HttpServer::tls() const {
  return dynamic_cast<httplib::SSLServer*>(impl_->server.get()) != nullptr;
}

}  // namespace miso::net
