#pragma once

#include <functional>
#include <iosfwd>
#include <string>

namespace neucredit {

/// Writes through a sibling temporary file renamed over `path` on success.
/// Throws std::runtime_error when the file cannot be created or renamed.
void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer);

std::string read_file(const std::string& path);

}  // namespace neucredit
