#ifndef MISO_COMMON_CONFIG_H_
#define MISO_COMMON_CONFIG_H_

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace miso {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" text config. Blank lines and lines starting with '#'
// are ignored; later duplicates override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig Parse(std::string_view text);
  static KeyValueConfig Load(const std::filesystem::path& path);

  std::string Serialize() const;

  bool Has(std::string_view key) const;
  std::optional<std::string> Get(std::string_view key) const;
  std::string GetOr(std::string_view key, std::string_view fallback) const;
  // Throws ConfigError naming the key when it is absent.
  std::string Require(std::string_view key) const;
  bool GetBool(std::string_view key, bool fallback) const;
  long GetInt(std::string_view key, long fallback) const;

  void Set(std::string key, std::string value);

  // Distinct middle components of keys shaped "<prefix>.<name>.<field>",
  // e.g. SubKeys("idp") -> {"idp-a", "idp-b"}.
  std::vector<std::string> SubKeys(std::string_view prefix) const;

  const std::map<std::string, std::string, std::less<>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace miso

#endif  // MISO_COMMON_CONFIG_H_
