#include "distvote/bytes.hpp"

#include <openssl/evp.h>

#include <memory>

namespace distvote {

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  return out;
}

Digest sha256(std::string_view data) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()),
                          data.size()));
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
  buf_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

ByteWriter& ByteWriter::raw(std::span<const std::uint8_t> data) {
  buf_.insert(buf_.end(), data.begin(), data.end());
  return *this;
}

ByteWriter& ByteWriter::field(std::span<const std::uint8_t> data) {
  u32(static_cast<std::uint32_t>(data.size()));
  return raw(data);
}

ByteWriter& ByteWriter::field(std::string_view text) {
  return field(std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                         text.size()));
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  if (data_.size() - pos_ < n) {
    throw DecodeError("truncated input");
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint32_t ByteReader::u32() {
  std::uint32_t v = 0;
  for (auto b : raw(4)) v = (v << 8) | b;
  return v;
}

std::uint64_t ByteReader::u64() {
  std::uint64_t v = 0;
  for (auto b : raw(8)) v = (v << 8) | b;
  return v;
}

std::span<const std::uint8_t> ByteReader::field() { return raw(u32()); }

std::string ByteReader::text() {
  auto f = field();
  return {f.begin(), f.end()};
}

Digest ByteReader::digest() {
  Digest d{};
  auto r = raw(d.size());
  std::copy(r.begin(), r.end(), d.begin());
  return d;
}

void ByteReader::expect_done() const {
  if (!done()) throw DecodeError("trailing bytes");
}

}  // namespace distvote
