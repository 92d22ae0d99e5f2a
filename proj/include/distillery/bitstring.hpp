#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "distillery/error.hpp"
#include "distillery/random.hpp"

namespace distillery {

/// Fixed-length string over GF(2), packed into 64-bit words.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  /// From a string of '0'/'1' characters, character i is bit i.
  static BitString from_string(const std::string& s) {
    BitString out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      require(s[i] == '0' || s[i] == '1', ErrorCode::invalid_argument, "bit string must contain only 0 and 1");
      out.set(i, s[i] == '1');
    }
    return out;
  }

  /// Uniform over all non-zero strings of the given length.
  static BitString random_nonzero(Rng& rng, std::size_t bits) {
    require(bits >= 1, ErrorCode::invalid_argument, "cannot draw a non-zero empty string");
    BitString out(bits);
    do {
      for (auto& w : out.words_) w = rng();
      out.clear_tail();
    } while (out.is_zero());
    return out;
  }

  std::size_t size() const noexcept { return bits_; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }

  bool is_zero() const noexcept {
    for (auto w : words_)
      if (w != 0) return false;
    return true;
  }

  BitString& operator^=(const BitString& other) {
    require(bits_ == other.bits_, ErrorCode::dimension_mismatch, "bit strings differ in length");
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other.words_[k];
    return *this;
  }
  friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }

  /// GF(2) inner product.
  bool dot(const BitString& other) const {
    require(bits_ == other.bits_, ErrorCode::dimension_mismatch, "bit strings differ in length");
    unsigned acc = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) acc ^= static_cast<unsigned>(std::popcount(words_[k] & other.words_[k]));
    return (acc & 1U) != 0;
  }

  std::string to_string() const {
    std::string s(bits_, '0');
    for (std::size_t i = 0; i < bits_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  void clear_tail() {
    if (bits_ % 64 != 0) words_.back() &= (std::uint64_t{1} << (bits_ % 64)) - 1;
  }

  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace distillery
