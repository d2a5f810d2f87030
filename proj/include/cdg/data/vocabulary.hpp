#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cdg {

inline constexpr int kPad = 0;
inline constexpr int kCls = 1;
inline constexpr int kSep = 2;
inline constexpr int kMask = 3;
inline constexpr int kUnk = 4;
inline constexpr int kBos = 5;
inline constexpr int kEos = 6;
inline constexpr int kNumReserved = 7;

using TokenCounts = std::map<std::string, std::size_t, std::less<>>;

// Word-level token <-> id bijection. Reserved tokens occupy ids 0..6 and every
// corpus token sorts after them.
class Vocabulary {
 public:
  Vocabulary();

  // Corpus tokens ordered by (-count, token). Tokens seen fewer than
  // min_count times are left out and later map to [UNK].
  static Vocabulary build(const TokenCounts& counts, std::size_t min_count);
  // Tokens in id order; the reserved prefix must match exactly.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  int id(std::string_view token) const;  // [UNK] when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }

  std::vector<int> encode(const std::vector<std::string>& words) const;
  std::string decode(const std::vector<int>& ids) const;  // space-joined

  // FNV-1a of the newline-joined token list.
  std::string hash() const;

  // One token per line, id order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  struct Empty {};
  explicit Vocabulary(Empty) {}

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

const std::vector<std::string>& reserved_tokens();

}  // namespace cdg
