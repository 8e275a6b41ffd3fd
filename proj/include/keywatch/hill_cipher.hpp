#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keywatch/error.hpp"

namespace keywatch {

/// Working modulus. `letters` maps A-Z (case-folded) to 0..25; `bytes` takes
/// any octet as its own symbol.
enum class Modulus : std::uint32_t { letters = 26, bytes = 256 };

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kMinBlockSize = 2;
inline constexpr std::size_t kMaxBlockSize = 8;

/// Invertible n x n matrix mod m. Only make_key() and invert_key() construct
/// one, so every instance satisfies gcd(det, m) == 1.
class HillKey {
 public:
  std::size_t n() const noexcept { return n_; }
  Modulus modulus() const noexcept { return modulus_; }
  std::uint32_t m() const noexcept { return static_cast<std::uint32_t>(modulus_); }
  /// Row-major, every entry in [0, m).
  const std::vector<std::uint32_t>& entries() const noexcept { return entries_; }
  std::uint32_t at(std::size_t row, std::size_t col) const { return entries_[row * n_ + col]; }

  friend bool operator==(const HillKey&, const HillKey&) = default;

 private:
  friend HillKey make_key(const std::vector<std::vector<std::int64_t>>&, std::uint32_t);
  friend HillKey invert_key(const HillKey&);

  HillKey(std::size_t n, Modulus modulus, std::vector<std::uint32_t> entries)
      : n_(n), modulus_(modulus), entries_(std::move(entries)) {}

  std::size_t n_;
  Modulus modulus_;
  std::vector<std::uint32_t> entries_;
};

/// Encrypted payload plus the parameters needed to undo it. In letters mode
/// the body holds uppercase ASCII letters; in byte mode raw octets.
struct CipherBlob {
  std::size_t n = 2;
  Modulus modulus = Modulus::bytes;
  std::uint64_t original_len = 0;
  Bytes body;

  friend bool operator==(const CipherBlob&, const CipherBlob&) = default;
};

/// On-disk header: "HCB1", n, modulus flag, 8-byte big-endian original_len.
inline constexpr std::size_t kCipherBlobHeaderSize = 14;

/// Reduces entries mod m and checks invertibility. Throws DimensionError for
/// a non-square matrix, n outside [2, 8] or m not in {26, 256}; KeyError when
/// det shares a factor with m.
HillKey make_key(const std::vector<std::vector<std::int64_t>>& entries, std::uint32_t m);

/// Adjugate times det^-1, mod m.
HillKey invert_key(const HillKey& key);

/// det(entries) reduced into [0, m).
std::uint32_t determinant_mod(const HillKey& key);

/// x in [0, m) with a*x == 1 (mod m). Throws ArithmeticError if gcd(a, m) != 1.
std::int64_t mod_inverse(std::int64_t a, std::int64_t m);

CipherBlob encrypt(std::span<const std::uint8_t> plaintext, const HillKey& key);
inline CipherBlob encrypt(std::string_view plaintext, const HillKey& key) {
  return encrypt(std::span(reinterpret_cast<const std::uint8_t*>(plaintext.data()), plaintext.size()), key);
}

/// Letters mode yields uppercase text. Throws DecryptError on a parameter
/// mismatch or a body that is not a well-formed blob for this key.
Bytes decrypt(const CipherBlob& blob, const HillKey& key);

Bytes serialize_blob(const CipherBlob& blob);
/// Throws FrameError(format) on any layout violation.
CipherBlob parse_blob(std::span<const std::uint8_t> bytes);

/// Key file: "n m" on the first line, then n rows of n integers.
HillKey parse_key(std::string_view text);
std::string format_key(const HillKey& key);
HillKey load_key_file(const std::filesystem::path& path);

}  // namespace keywatch
