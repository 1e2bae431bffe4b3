#pragma once

#include <cstdint>
#include <string>

namespace fsde {

// FIPS 180-4 SHA-256, enough for content digests of emitted artifacts.
class Sha256 {
public:
  Sha256();
  void update(const void* data, std::size_t len);
  std::string hex_digest();  // finalizes; further updates are invalid

  static std::string of_string(const std::string& data);
  static std::string of_file(const std::string& path);  // throws on I/O failure

private:
  void process_block(const std::uint8_t* block);

  std::uint32_t state_[8];
  std::uint64_t bit_count_ = 0;
  std::uint8_t buffer_[64];
  std::size_t buffer_len_ = 0;
  bool finalized_ = false;
};

}  // namespace fsde
