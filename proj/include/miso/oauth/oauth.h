#ifndef MISO_OAUTH_OAUTH_H_
#define MISO_OAUTH_OAUTH_H_

#include <chrono>
#include <string_view>

namespace miso::oauth {

// RFC 6749 error codes used across the services.
inline constexpr std::string_view kInvalidRequest = "invalid_request";
inline constexpr std::string_view kInvalidClient = "invalid_client";
inline constexpr std::string_view kInvalidGrant = "invalid_grant";
inline constexpr std::string_view kUnsupportedGrantType = "unsupported_grant_type";
inline constexpr std::string_view kUnsupportedResponseType = "unsupported_response_type";
inline constexpr std::string_view kAccessDenied = "access_denied";
inline constexpr std::string_view kInvalidToken = "invalid_token";
inline constexpr std::string_view kInvalidRedirectUri = "invalid_redirect_uri";

inline constexpr std::chrono::seconds kCodeLifetime{600};
inline constexpr std::chrono::seconds kTokenLifetime{3600};
inline constexpr std::chrono::seconds kSessionLifetime{900};

// Redirect URIs must be absolute https, or http on a loopback host when
// |allow_http_loopback| is set. Fragments are never allowed.
bool IsAcceptableRedirectUri(std::string_view uri, bool allow_http_loopback);

}  // namespace miso::oauth

#endif  // MISO_OAUTH_OAUTH_H_
