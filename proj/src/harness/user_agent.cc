#include "miso/harness/user_agent.h"

#include <regex>

#include "miso/net/url.h"

namespace miso::harness {
namespace {

std::string Unescape(std::string s) {
  static const std::pair<const char*, const char*> kEntities[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&amp;", "&"}};
  for (const auto& [from, to] : kEntities) {
    for (size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += 1) {
      s.replace(pos, std::char_traits<char>::length(from), to);
    }
  }
  return s;
}

std::string OriginOf(const std::string& url) {
  auto parsed = net::ParseUrl(url);
  return parsed ? parsed->Origin() : "";
}

std::string Resolve(const std::string& base, const std::string& target) {
  if (net::ParseUrl(target)) return target;
  auto parsed = net::ParseUrl(base);
  if (!parsed || target.empty() || target[0] != '/') return target;
  return parsed->Origin() + target;
}

}  // namespace

std::optional<LoginForm> ParseLoginForm(const std::string& html) {
  static const std::regex kForm(R"re(<form[^>]*action="([^"]*)"[^>]*>([\s\S]*?)</form>)re");
  static const std::regex kHidden(
      R"re(<input type="hidden" name="([^"]*)" value="([^"]*)">)re");
  for (auto it = std::sregex_iterator(html.begin(), html.end(), kForm);
       it != std::sregex_iterator(); ++it) {
    const std::string body = (*it)[2];
    if (body.find("type=\"password\"") == std::string::npos) continue;
    LoginForm form;
    form.action = Unescape((*it)[1]);
    for (auto h = std::sregex_iterator(body.begin(), body.end(), kHidden);
         h != std::sregex_iterator(); ++h) {
      form.hidden[Unescape((*h)[1])] = Unescape((*h)[2]);
    }
    return form;
  }
  return std::nullopt;
}

UserAgent::UserAgent(net::ClientOptions options) : http_(std::move(options)) {}

void UserAgent::SetCredentials(const std::string& origin, std::string username,
                               std::string password, std::string consent) {
  credentials_[origin] = {std::move(username), std::move(password), std::move(consent)};
}

net::Headers UserAgent::CookieHeader(const std::string& url) const {
  auto jar = cookies_.find(OriginOf(url));
  if (jar == cookies_.end() || jar->second.empty()) return {};
  std::string value;
  for (const auto& [name, v] : jar->second) {
    if (!value.empty()) value += "; ";
    value += name + "=" + v;
  }
  return {{"Cookie", value}};
}

void UserAgent::StoreCookies(const std::string& url, const net::HttpResponse& response) {
  auto header = response.Header("set-cookie");
  if (!header) return;
  std::string pair = header->substr(0, header->find(';'));
  size_t eq = pair.find('=');
  if (eq == std::string::npos) return;
  cookies_[OriginOf(url)][pair.substr(0, eq)] = pair.substr(eq + 1);
}

net::HttpResponse UserAgent::Get(const std::string& url) {
  net::HttpResponse response = http_.Get(url, CookieHeader(url));
  StoreCookies(url, response);
  return response;
}

net::HttpResponse UserAgent::PostForm(const std::string& url, const net::Params& form) {
  net::HttpResponse response = http_.PostForm(url, form, CookieHeader(url));
  StoreCookies(url, response);
  return response;
}

std::optional<std::string> UserAgent::Cookie(const std::string& origin,
                                              const std::string& name) const {
  auto jar = cookies_.find(origin);
  if (jar == cookies_.end()) return std::nullopt;
  auto it = jar->second.find(name);
  if (it == jar->second.end()) return std::nullopt;
  return it->second;
}

Navigation UserAgent::Navigate(const std::string& start, const std::string& stop_prefix,
                               int max_hops) {
  Navigation nav;
  std::string url = start;
  std::string method = "GET";
  net::Params form;
  for (int hop = 0; hop < max_hops; ++hop) {
    nav.url = url;
    nav.response = method == "GET" ? Get(url) : PostForm(url, form);
    Hop record{method, url, nav.response.status, nav.response.Header("location").value_or("")};
    nav.hops.push_back(record);

    if (nav.response.redirect() && !record.location.empty()) {
      std::string next = Resolve(url, record.location);
      if (!stop_prefix.empty() && next.rfind(stop_prefix, 0) == 0) {
        nav.stopped_at = next;
        return nav;
      }
      url = next;
      method = "GET";
      continue;
    }
    if (nav.response.status == 200 && method == "GET") {
      auto login = ParseLoginForm(nav.response.body);
      auto cred = credentials_.find(OriginOf(url));
      if (login && cred != credentials_.end()) {
        form = login->hidden;
        form["username"] = cred->second.username;
        form["password"] = cred->second.password;
        form["consent"] = cred->second.consent;
        url = Resolve(url, login->action);
        method = "POST";
        continue;
      }
    }
    return nav;
  }
  nav.loop_detected = true;
  return nav;
}

}  // namespace miso::harness
