#pragma once

// Reference implementations used only by tests. None of these call into
// keywatch_core; they exist to check it from an independent code path.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

// FIPS 180-1 SHA-1, straight from the message schedule definition.
inline std::string sha1_hex(std::string_view msg) {
  auto rotl = [](std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); };
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

  std::string data(msg);
  const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
  data.push_back(static_cast<char>(0x80));
  while (data.size() % 64 != 56) data.push_back('\0');
  for (int i = 7; i >= 0; --i) data.push_back(static_cast<char>((bit_len >> (i * 8)) & 0xff));

  for (std::size_t off = 0; off < data.size(); off += 64) {
    std::uint32_t w[80];
    for (int t = 0; t < 16; ++t) {
      w[t] = 0;
      for (int b = 0; b < 4; ++b) w[t] = (w[t] << 8) | static_cast<std::uint8_t>(data[off + t * 4 + b]);
    }
    for (int t = 16; t < 80; ++t) w[t] = rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int t = 0; t < 80; ++t) {
      std::uint32_t f, k;
      if (t < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (t < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (t < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[t];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (auto word : h) {
    for (int s = 28; s >= 0; s -= 4) out += digits[(word >> s) & 0xf];
  }
  return out;
}

inline std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

using Matrix = std::vector<std::vector<std::int64_t>>;

// Cofactor expansion along the first row, reducing as it goes.
inline std::int64_t det_mod(const Matrix& a, std::int64_t m) {
  const std::size_t n = a.size();
  if (n == 1) return ((a[0][0] % m) + m) % m;
  std::int64_t acc = 0;
  for (std::size_t col = 0; col < n; ++col) {
    Matrix minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<std::int64_t> row;
      for (std::size_t c = 0; c < n; ++c)
        if (c != col) row.push_back(a[r][c]);
      minor.push_back(row);
    }
    const std::int64_t term = ((a[0][col] % m) + m) % m * det_mod(minor, m) % m;
    acc = (col % 2 == 0) ? (acc + term) % m : (acc - term + m) % m;
  }
  return acc;
}

inline std::int64_t gcd(std::int64_t a, std::int64_t b) {
  while (b) {
    a %= b;
    std::swap(a, b);
  }
  return a;
}

// Exhaustive search, fine for m <= 256.
inline std::int64_t mod_inverse(std::int64_t a, std::int64_t m) {
  for (std::int64_t x = 0; x < m; ++x)
    if (((a % m + m) % m) * x % m == 1) return x;
  return -1;
}

inline Matrix mat_mul_mod(const Matrix& a, const Matrix& b, std::int64_t m) {
  const std::size_t n = a.size();
  Matrix out(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::int64_t s = 0;
      for (std::size_t k = 0; k < n; ++k) s += a[i][k] * b[k][j];
      out[i][j] = ((s % m) + m) % m;
    }
  return out;
}

// Textbook 2x2 Hill over A-Z: each pair (p0, p1) -> (k00 p0 + k01 p1, k10 p0 + k11 p1).
inline std::string hill2_letters(std::string_view upper_text, const std::array<int, 4>& k) {
  std::string s(upper_text);
  if (s.size() % 2) s.push_back('A');
  std::string out;
  for (std::size_t i = 0; i < s.size(); i += 2) {
    const int p0 = s[i] - 'A';
    const int p1 = s[i + 1] - 'A';
    out.push_back(static_cast<char>('A' + (k[0] * p0 + k[1] * p1) % 26));
    out.push_back(static_cast<char>('A' + (k[2] * p0 + k[3] * p1) % 26));
  }
  return out;
}

// Brute-force detector: walk every regular file (no symlinks), hash it,
// collect paths whose digest is in `digests`.
inline std::set<std::string> affected_paths(const std::filesystem::path& root, const std::set<std::string>& digests) {
  std::set<std::string> hits;
  for (auto it = std::filesystem::recursive_directory_iterator(root); it != std::filesystem::recursive_directory_iterator(); ++it) {
    if (it->is_symlink() || !it->is_regular_file()) continue;
    if (digests.count(sha1_hex(read_all(it->path())))) hits.insert(it->path().generic_string());
  }
  return hits;
}

}  // namespace oracle
