#pragma once

#include <algorithm>
#include <bit>
#include <cassert>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace tbm {

// A subset of an enumerated product frame, one bit per configuration.
// Bits past `size()` in the last word are always zero.
class Subset {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  Subset() = default;

  explicit Subset(std::size_t size) : size_(size), words_(word_count(size), 0) {}

  static Subset full(std::size_t size) {
    Subset s(size);
    std::fill(s.words_.begin(), s.words_.end(), ~Word{0});
    s.trim();
    return s;
  }

  static Subset singleton(std::size_t size, std::size_t index) {
    Subset s(size);
    s.set(index);
    return s;
  }

  std::size_t size() const noexcept { return size_; }

  bool test(std::size_t i) const noexcept {
    assert(i < size_);
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1u;
  }

  void set(std::size_t i) noexcept {
    assert(i < size_);
    words_[i / kWordBits] |= Word{1} << (i % kWordBits);
  }

  void reset(std::size_t i) noexcept {
    assert(i < size_);
    words_[i / kWordBits] &= ~(Word{1} << (i % kWordBits));
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool empty() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](Word w) { return w == 0; });
  }

  bool is_full() const noexcept { return count() == size_; }

  bool is_subset_of(const Subset& other) const noexcept {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~other.words_[i]) return false;
    return true;
  }

  bool intersects(const Subset& other) const noexcept {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & other.words_[i]) return true;
    return false;
  }

  Subset& operator&=(const Subset& other) noexcept {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
  }

  Subset& operator|=(const Subset& other) noexcept {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }

  friend Subset operator&(Subset a, const Subset& b) noexcept { return a &= b; }
  friend Subset operator|(Subset a, const Subset& b) noexcept { return a |= b; }

  Subset complement() const {
    Subset s(*this);
    for (Word& w : s.words_) w = ~w;
    s.trim();
    return s;
  }

  // Calls fn(index) for every member in increasing order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      Word w = words_[wi];
      while (w) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(w));
        fn(wi * kWordBits + bit);
        w &= w - 1;
      }
    }
  }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  const std::vector<Word>& words() const noexcept { return words_; }

  friend bool operator==(const Subset&, const Subset&) = default;

  // Orders by size, then by bit pattern read from the highest word down.
  friend std::strong_ordering operator<=>(const Subset& a, const Subset& b) noexcept {
    if (auto c = a.size_ <=> b.size_; c != 0) return c;
    for (std::size_t i = a.words_.size(); i-- > 0;)
      if (auto c = a.words_[i] <=> b.words_[i]; c != 0) return c;
    return std::strong_ordering::equal;
  }

  std::size_t hash() const noexcept {
    std::size_t h = std::hash<std::size_t>{}(size_);
    for (Word w : words_) h ^= std::hash<Word>{}(w) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
  }

 private:
  static std::size_t word_count(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }

  void trim() noexcept {
    if (const std::size_t tail = size_ % kWordBits; tail != 0 && !words_.empty())
      words_.back() &= (Word{1} << tail) - 1;
  }

  std::size_t size_ = 0;
  std::vector<Word> words_;
};

struct SubsetHash {
  std::size_t operator()(const Subset& s) const noexcept { return s.hash(); }
};

}  // namespace tbm
