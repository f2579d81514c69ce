#include "miso/net/http.h"

#include <cctype>

namespace miso::net {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view TrimSpaces(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<std::string> Request::Param(const std::string& name) const {
  if (auto it = query.find(name); it != query.end()) return it->second;
  if (auto it = form.find(name); it != form.end()) return it->second;
  return std::nullopt;
}

std::optional<std::string> Request::Header(const std::string& name) const {
  auto it = headers.find(Lower(name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Request::Cookie(std::string_view name) const {
  auto header = Header("cookie");
  if (!header) return std::nullopt;
  std::string_view rest = *header;
  while (!rest.empty()) {
    size_t semi = rest.find(';');
    std::string_view pair = TrimSpaces(rest.substr(0, semi));
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    size_t eq = pair.find('=');
    if (eq != std::string_view::npos && pair.substr(0, eq) == name) {
      return std::string(pair.substr(eq + 1));
    }
  }
  return std::nullopt;
}

std::optional<std::string> Request::BearerToken() const {
  auto header = Header("authorization");
  if (!header) return std::nullopt;
  constexpr std::string_view kPrefix = "Bearer ";
  if (header->size() <= kPrefix.size() ||
      Lower(header->substr(0, kPrefix.size())) != "bearer ") {
    return std::nullopt;
  }
  return std::string(TrimSpaces(std::string_view(*header).substr(kPrefix.size())));
}

Reply Reply::Json(int status, const nlohmann::json& body) {
  Reply r;
  r.status = status;
  r.body = body.dump();
  return r;
}

Reply Reply::Error(int status, std::string_view code) {
  Reply r = Json(status, {{"error", std::string(code)}});
  r.headers.emplace_back("Cache-Control", "no-store");
  return r;
}

Reply Reply::Redirect(std::string location) {
  Reply r;
  r.status = 302;
  r.content_type = "text/plain";
  r.headers.emplace_back("Location", std::move(location));
  return r;
}

Reply Reply::Html(int status, std::string body) {
  Reply r;
  r.status = status;
  r.content_type = "text/html; charset=utf-8";
  r.body = std::move(body);
  return r;
}

Reply Reply::Text(int status, std::string body) {
  Reply r;
  r.status = status;
  r.content_type = "text/plain";
  r.body = std::move(body);
  return r;
}

Reply& Reply::SetCookie(std::string_view name, std::string_view value) {
  headers.emplace_back("Set-Cookie", std::string(name) + "=" + std::string(value) +
                                         "; Path=/; HttpOnly; SameSite=Lax");
  return *this;
}

Reply& Reply::AddHeader(std::string name, std::string value) {
  headers.emplace_back(std::move(name), std::move(value));
  return *this;
}

std::optional<std::string> Reply::Location() const {
  for (const auto& [k, v] : headers) {
    if (Lower(k) == "location") return v;
  }
  return std::nullopt;
}

std::optional<std::string> HttpResponse::Header(const std::string& name) const {
  auto it = headers.find(Lower(name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

nlohmann::json HttpResponse::Json() const {
  return nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
}

std::optional<std::string> HttpResponse::OAuthError() const {
  auto j = Json();
  if (j.is_object() && j.contains("error") && j["error"].is_string()) {
    return j["error"].get<std::string>();
  }
  return std::nullopt;
}

}  // namespace miso::net
