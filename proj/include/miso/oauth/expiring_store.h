#ifndef MISO_OAUTH_EXPIRING_STORE_H_
#define MISO_OAUTH_EXPIRING_STORE_H_

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "miso/common/clock.h"
#include "miso/crypto/random.h"

namespace miso::oauth {

// Random bearer strings (authorization codes, access tokens) mapped to a
// payload with a fixed lifetime. Thread-safe.
template <typename Payload>
class ExpiringStore {
 public:
  ExpiringStore(Clock clock, std::chrono::seconds lifetime)
      : clock_(std::move(clock)), lifetime_(lifetime) {}

  std::chrono::seconds lifetime() const { return lifetime_; }

  std::string Issue(Payload payload) {
    std::string key = crypto::GenSecretToken();
    std::lock_guard lock(mu_);
    SweepLocked();
    entries_.insert_or_assign(key, Entry{std::move(payload), clock_() + lifetime_});
    return key;
  }

  // Removes the entry whatever its state; returns it only if unexpired.
  std::optional<Payload> Take(const std::string& key) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    Entry entry = std::move(it->second);
    entries_.erase(it);
    if (clock_() >= entry.expires_at) return std::nullopt;
    return std::move(entry.payload);
  }

  std::optional<Payload> Peek(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end() || clock_() >= it->second.expires_at) return std::nullopt;
    return it->second.payload;
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  struct Entry {
    Payload payload;
    TimePoint expires_at;
  };

  void SweepLocked() {
    if (++issued_since_sweep_ < 256) return;
    issued_since_sweep_ = 0;
    const TimePoint now = clock_();
    for (auto it = entries_.begin(); it != entries_.end();) {
      it = now >= it->second.expires_at ? entries_.erase(it) : std::next(it);
    }
  }

  Clock clock_;
  const std::chrono::seconds lifetime_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Entry> entries_;
  int issued_since_sweep_ = 0;
};

}  // namespace miso::oauth

#endif  // MISO_OAUTH_EXPIRING_STORE_H_
