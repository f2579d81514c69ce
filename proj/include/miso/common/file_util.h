#ifndef MISO_COMMON_FILE_UTIL_H_
#define MISO_COMMON_FILE_UTIL_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "miso/crypto/bytes.h"

namespace miso {

// Writes to a sibling temp file, fsyncs, then renames over |path|. Readers see
// either the old or the new contents, never a torn write.
void AtomicWriteFile(const std::filesystem::path& path, crypto::ByteView data,
                     bool owner_only = false);
void AtomicWriteFile(const std::filesystem::path& path, std::string_view data,
                     bool owner_only = false);

// nullopt if the file does not exist; throws std::runtime_error on I/O errors.
std::optional<std::string> ReadFileIfExists(const std::filesystem::path& path);
std::string ReadFileOrThrow(const std::filesystem::path& path);

}  // namespace miso

#endif  // MISO_COMMON_FILE_UTIL_H_
