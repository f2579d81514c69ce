#include "miso/common/config.h"

#include <set>

#include "miso/common/file_util.h"

namespace miso {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(std::string_view text) {
  KeyValueConfig config;
  size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    size_t eol = text.find('\n');
    std::string_view line = Trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty() || line.front() == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    std::string_view key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    config.Set(std::string(key), std::string(Trim(line.substr(eq + 1))));
  }
  return config;
}

KeyValueConfig KeyValueConfig::Load(const std::filesystem::path& path) {
  auto text = ReadFileIfExists(path);
  if (!text) throw ConfigError("config file not found: " + path.string());
  return Parse(*text);
}

std::string KeyValueConfig::Serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

bool KeyValueConfig::Has(std::string_view key) const {
  return entries_.find(key) != entries_.end();
}

std::optional<std::string> KeyValueConfig::Get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::GetOr(std::string_view key,
                                  std::string_view fallback) const {
  auto v = Get(key);
  return v ? *v : std::string(fallback);
}

std::string KeyValueConfig::Require(std::string_view key) const {
  auto v = Get(key);
  if (!v) throw ConfigError("missing required config key: " + std::string(key));
  return *v;
}

bool KeyValueConfig::GetBool(std::string_view key, bool fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key " + std::string(key) + " is not a boolean");
}

long KeyValueConfig::GetInt(std::string_view key, long fallback) const {
  auto v = Get(key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    long n = std::stol(*v, &pos);
    if (pos == v->size()) return n;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key " + std::string(key) + " is not an integer");
}

void KeyValueConfig::Set(std::string key, std::string value) {
  entries_[std::move(key)] = std::move(value);
}

std::vector<std::string> KeyValueConfig::SubKeys(std::string_view prefix) const {
  std::set<std::string> names;
  std::string lead = std::string(prefix) + ".";
  for (const auto& [k, v] : entries_) {
    if (k.rfind(lead, 0) != 0) continue;
    std::string_view rest = std::string_view(k).substr(lead.size());
    size_t dot = rest.rfind('.');
    if (dot == std::string_view::npos || dot == 0) continue;
    names.emplace(rest.substr(0, dot));
  }
  return {names.begin(), names.end()};
}

}  // namespace miso
