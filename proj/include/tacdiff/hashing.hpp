// Copyright 2026 The tacdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace tacdiff {

// Incremental SHA-256 (OpenSSL EVP) producing lowercase hex digests.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(const void* data, std::size_t size);
  Sha256& update(std::string_view text) { return update(text.data(), text.size()); }
  template <class T>
  Sha256& update_values(const T* values, std::size_t count) {
    return update(values, count * sizeof(T));
  }
  std::string hex_digest();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view text);
// Digest of a file's bytes; throws PersistenceError if it cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace tacdiff
