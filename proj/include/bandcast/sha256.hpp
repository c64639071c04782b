#pragma once

#include <cstdint>
#include <string>

namespace bandcast {

// SHA-256 of a byte string, returned as lowercase hex. Used to fingerprint
// effective run configurations in run_meta.json.
std::string sha256_hex(const std::string& data);

}  // namespace bandcast
