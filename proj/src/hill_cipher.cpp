#include "keywatch/hill_cipher.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace keywatch {

namespace {

constexpr std::array<std::uint8_t, 4> kBlobMagic = {'H', 'C', 'B', '1'};

std::int64_t reduce(std::int64_t v, std::int64_t m) {
  v %= m;
  return v < 0 ? v + m : v;
}

// Leibniz expansion folded into a DP over the set of columns already used by
// the leading rows: 2^n * n steps, exact mod m, no overflow for n <= 8.
std::uint32_t det_mod(const std::vector<std::uint32_t>& a, std::size_t n, std::uint32_t m) {
  if (n == 0) return 1 % m;
  std::vector<std::uint64_t> dp(std::size_t{1} << n, 0);
  dp[0] = 1;
  for (std::uint32_t mask = 0; mask < dp.size(); ++mask) {
    if (dp[mask] == 0) continue;
    const auto row = static_cast<std::size_t>(std::popcount(mask));
    if (row == n) continue;
    for (std::size_t col = 0; col < n; ++col) {
      if (mask & (1u << col)) continue;
      // Each already-used column to the right of `col` is one inversion.
      const int inversions = std::popcount(mask >> (col + 1));
      std::uint64_t term = dp[mask] * a[row * n + col] % m;
      if (inversions % 2 == 1) term = (m - term) % m;
      auto& slot = dp[mask | (1u << col)];
      slot = (slot + term) % m;
    }
  }
  return static_cast<std::uint32_t>(dp.back());
}

std::vector<std::uint32_t> minor_of(const std::vector<std::uint32_t>& a, std::size_t n,
                                    std::size_t skip_row, std::size_t skip_col) {
  std::vector<std::uint32_t> out;
  out.reserve((n - 1) * (n - 1));
  for (std::size_t r = 0; r < n; ++r) {
    if (r == skip_row) continue;
    for (std::size_t c = 0; c < n; ++c) {
      if (c != skip_col) out.push_back(a[r * n + c]);
    }
  }
  return out;
}

void put_be64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint64_t get_be64(std::span<const std::uint8_t> in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

std::uint8_t encode_symbol(std::uint8_t byte, std::size_t offset, Modulus modulus) {
  if (modulus == Modulus::bytes) return byte;
  if (byte >= 'A' && byte <= 'Z') return static_cast<std::uint8_t>(byte - 'A');
  if (byte >= 'a' && byte <= 'z') return static_cast<std::uint8_t>(byte - 'a');
  throw CodecError(offset, "letters-mode plaintext has non-letter byte 0x" +
                               [&] {
                                 std::ostringstream hex;
                                 hex << std::hex << static_cast<int>(byte);
                                 return hex.str();
                               }() +
                               " at offset " + std::to_string(offset));
}

// Blockwise c = K * p (mod m) over symbol values.
std::vector<std::uint8_t> apply_matrix(const HillKey& key, const std::vector<std::uint8_t>& symbols) {
  const std::size_t n = key.n();
  const std::uint32_t m = key.m();
  std::vector<std::uint8_t> out(symbols.size());
  for (std::size_t base = 0; base < symbols.size(); base += n) {
    for (std::size_t r = 0; r < n; ++r) {
      std::uint32_t acc = 0;
      for (std::size_t c = 0; c < n; ++c) acc = (acc + key.at(r, c) * symbols[base + c]) % m;
      out[base + r] = static_cast<std::uint8_t>(acc);
    }
  }
  return out;
}

void check_modulus(std::uint32_t m) {
  if (m != 26 && m != 256) throw DimensionError("modulus must be 26 or 256, got " + std::to_string(m));
}

}  // namespace

std::int64_t mod_inverse(std::int64_t a, std::int64_t m) {
  if (m <= 0) throw ArithmeticError("modulus must be positive");
  std::int64_t old_r = reduce(a, m), r = m;
  std::int64_t old_s = 1, s = 0;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    old_r = std::exchange(r, old_r - q * r);
    old_s = std::exchange(s, old_s - q * s);
  }
  if (old_r != 1) {
    throw ArithmeticError(std::to_string(a) + " has no inverse mod " + std::to_string(m) +
                          " (gcd " + std::to_string(old_r) + ")");
  }
  return reduce(old_s, m);
}

HillKey make_key(const std::vector<std::vector<std::int64_t>>& entries, std::uint32_t m) {
  check_modulus(m);
  const std::size_t n = entries.size();
  if (n < kMinBlockSize || n > kMaxBlockSize) {
    throw DimensionError("key dimension must be in [2, 8], got " + std::to_string(n));
  }
  std::vector<std::uint32_t> flat;
  flat.reserve(n * n);
  for (const auto& row : entries) {
    if (row.size() != n) {
      throw DimensionError("key matrix is not square: row of " + std::to_string(row.size()) +
                           " entries in a " + std::to_string(n) + "x" + std::to_string(n) + " key");
    }
    for (auto v : row) flat.push_back(static_cast<std::uint32_t>(reduce(v, m)));
  }

  const std::uint32_t det = det_mod(flat, n, m);
  if (std::gcd(det, m) != 1) {
    std::string msg = "key is not invertible mod " + std::to_string(m) + ": det = " + std::to_string(det);
    if (m == 256 && det % 2 == 0) msg += " is even; mod-256 keys need an odd determinant";
    else msg += ", gcd(det, " + std::to_string(m) + ") = " + std::to_string(std::gcd(det, m));
    throw KeyError(msg);
  }
  return HillKey(n, static_cast<Modulus>(m), std::move(flat));
}

std::uint32_t determinant_mod(const HillKey& key) { return det_mod(key.entries(), key.n(), key.m()); }

HillKey invert_key(const HillKey& key) {
  const std::size_t n = key.n();
  const std::uint32_t m = key.m();
  const auto det_inv = static_cast<std::uint64_t>(mod_inverse(determinant_mod(key), m));
  std::vector<std::uint32_t> inv(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      std::uint64_t cofactor = det_mod(minor_of(key.entries(), n, r, c), n - 1, m);
      if ((r + c) % 2 == 1) cofactor = (m - cofactor) % m;
      // adj(K) is the transposed cofactor matrix.
      inv[c * n + r] = static_cast<std::uint32_t>(cofactor * det_inv % m);
    }
  }
  return HillKey(n, key.modulus(), std::move(inv));
}

CipherBlob encrypt(std::span<const std::uint8_t> plaintext, const HillKey& key) {
  const std::size_t n = key.n();
  std::vector<std::uint8_t> symbols;
  symbols.reserve(plaintext.size() + n);
  for (std::size_t i = 0; i < plaintext.size(); ++i) {
    symbols.push_back(encode_symbol(plaintext[i], i, key.modulus()));
  }
  symbols.resize((symbols.size() + n - 1) / n * n, 0);

  CipherBlob blob;
  blob.n = n;
  blob.modulus = key.modulus();
  blob.original_len = plaintext.size();
  blob.body = apply_matrix(key, symbols);
  if (key.modulus() == Modulus::letters) {
    for (auto& s : blob.body) s = static_cast<std::uint8_t>('A' + s);
  }
  return blob;
}

Bytes decrypt(const CipherBlob& blob, const HillKey& key) {
  if (blob.n != key.n() || blob.modulus != key.modulus()) {
    throw DecryptError("blob parameters (n=" + std::to_string(blob.n) +
                       ", m=" + std::to_string(static_cast<std::uint32_t>(blob.modulus)) +
                       ") do not match key (n=" + std::to_string(key.n()) +
                       ", m=" + std::to_string(key.m()) + ")");
  }
  if (blob.body.size() % blob.n != 0 || blob.original_len > blob.body.size() ||
      blob.body.size() - blob.original_len >= blob.n) {
    throw DecryptError("blob body length " + std::to_string(blob.body.size()) +
                       " is inconsistent with original length " + std::to_string(blob.original_len));
  }

  std::vector<std::uint8_t> symbols = blob.body;
  if (blob.modulus == Modulus::letters) {
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (symbols[i] < 'A' || symbols[i] > 'Z') {
        throw DecryptError("letters-mode body has non-letter byte at offset " + std::to_string(i));
      }
      symbols[i] = static_cast<std::uint8_t>(symbols[i] - 'A');
    }
  }

  Bytes plain = apply_matrix(invert_key(key), symbols);
  plain.resize(blob.original_len);
  if (blob.modulus == Modulus::letters) {
    for (auto& s : plain) s = static_cast<std::uint8_t>('A' + s);
  }
  return plain;
}

Bytes serialize_blob(const CipherBlob& blob) {
  Bytes out(kBlobMagic.begin(), kBlobMagic.end());
  out.reserve(kCipherBlobHeaderSize + blob.body.size());
  out.push_back(static_cast<std::uint8_t>(blob.n));
  out.push_back(blob.modulus == Modulus::bytes ? 1 : 0);
  put_be64(out, blob.original_len);
  out.insert(out.end(), blob.body.begin(), blob.body.end());
  return out;
}

CipherBlob parse_blob(std::span<const std::uint8_t> bytes) {
  using K = FrameError::Kind;
  if (bytes.size() < kCipherBlobHeaderSize) {
    throw FrameError(K::format, "cipher blob shorter than its " + std::to_string(kCipherBlobHeaderSize) +
                                    "-byte header");
  }
  if (!std::equal(kBlobMagic.begin(), kBlobMagic.end(), bytes.begin())) {
    throw FrameError(K::format, "cipher blob has bad magic");
  }
  CipherBlob blob;
  blob.n = bytes[4];
  if (blob.n < kMinBlockSize || blob.n > kMaxBlockSize) {
    throw FrameError(K::format, "cipher blob block size " + std::to_string(blob.n) + " out of range");
  }
  if (bytes[5] > 1) throw FrameError(K::format, "cipher blob modulus flag must be 0 or 1");
  blob.modulus = bytes[5] == 1 ? Modulus::bytes : Modulus::letters;
  blob.original_len = get_be64(bytes.subspan(6, 8));
  blob.body.assign(bytes.begin() + kCipherBlobHeaderSize, bytes.end());
  if (blob.body.size() % blob.n != 0 || blob.original_len > blob.body.size() ||
      blob.body.size() - blob.original_len >= blob.n) {
    throw FrameError(K::format, "cipher blob body length " + std::to_string(blob.body.size()) +
                                    " inconsistent with n=" + std::to_string(blob.n) +
                                    " and original length " + std::to_string(blob.original_len));
  }
  return blob;
}

HillKey parse_key(std::string_view text) {
  std::vector<std::vector<std::int64_t>> rows;
  std::size_t n = 0;
  std::uint32_t m = 0;
  std::size_t line_no = 0;
  bool have_header = false;

  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty() || tokens[0].front() == '#') continue;

    std::vector<std::int64_t> values;
    for (const auto& t : tokens) {
      std::int64_t v{};
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc{} || ptr != t.data() + t.size()) throw ParseError(line_no, "'" + t + "' is not an integer");
      values.push_back(v);
    }
    if (!have_header) {
      if (values.size() != 2) throw ParseError(line_no, "expected header 'n m'");
      if (values[0] < 0 || values[1] < 0) throw ParseError(line_no, "n and m must be non-negative");
      n = static_cast<std::size_t>(values[0]);
      m = static_cast<std::uint32_t>(values[1]);
      have_header = true;
      continue;
    }
    if (rows.size() == n) throw ParseError(line_no, "more than " + std::to_string(n) + " matrix rows");
    if (values.size() != n) {
      throw ParseError(line_no, "expected " + std::to_string(n) + " entries, got " + std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (!have_header) throw ParseError(0, "key file is empty");
  if (rows.size() != n) {
    throw ParseError(0, "expected " + std::to_string(n) + " matrix rows, got " + std::to_string(rows.size()));
  }
  return make_key(rows, m);
}

std::string format_key(const HillKey& key) {
  std::string out = std::to_string(key.n()) + " " + std::to_string(key.m()) + "\n";
  for (std::size_t r = 0; r < key.n(); ++r) {
    for (std::size_t c = 0; c < key.n(); ++c) {
      if (c) out += ' ';
      out += std::to_string(key.at(r, c));
    }
    out += '\n';
  }
  return out;
}

HillKey load_key_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open key file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key(buf.str());
}

}  // namespace keywatch
