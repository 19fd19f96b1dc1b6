#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hopqa {

// Official SQuAD/HotpotQA answer normalization: lowercase, drop ASCII
// punctuation, drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

// Whitespace split of normalize_answer().
std::vector<std::string> normalized_tokens(std::string_view text);

struct Token {
  std::string text;   // lowercased surface form
  std::size_t begin;  // byte offsets into the source text
  std::size_t end;
};

// Lowercased word/punctuation tokens. Runs of ASCII alphanumerics and non-ASCII
// bytes form words; every other non-space ASCII character is its own token.
std::vector<Token> tokenize_with_offsets(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

// Joins tokens with spaces, attaching closing punctuation to the previous token.
std::string detokenize(const std::vector<std::string>& tokens);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kSep = 4;
  static constexpr int kNumReserved = 5;
  static const std::vector<std::string>& reserved_tokens();

  Vocab();

  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  // One token per line after a '#' comment header naming the reserved block;
  // the i-th token line has id kNumReserved + i.
  void save(std::ostream& out) const;
  static Vocab load(std::istream& in);
  std::uint64_t fingerprint() const;

  void append(const std::string& token);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Keeps the most frequent tokens (ties: first occurrence) up to max_size entries
// including the reserved block.
Vocab build_vocab(const std::vector<std::vector<std::string>>& corpora, int max_size);

struct EncodedSource {
  std::vector<std::string> tokens;
  std::vector<int> ids;           // kUnk for out-of-vocabulary tokens
  std::vector<int> extended_ids;  // OOVs get vocab.size() + position in oov_list
  std::vector<std::string> oov_list;

  int extended_size(const Vocab& vocab) const { return extended_size_for(vocab.size()); }
  int extended_size_for(int vocab_size) const { return vocab_size + static_cast<int>(oov_list.size()); }
};

EncodedSource encode_source(const std::vector<std::string>& tokens, const Vocab& vocab);

// Maps an extended id (vocab or temporary OOV id) back to its surface token.
const std::string& extended_token(int id, const Vocab& vocab, const EncodedSource& source);

// Extended id for a target token: its vocab id, else its temporary source id,
// else kUnk.
int target_extended_id(const std::string& token, const Vocab& vocab, const EncodedSource& source);

// 64-bit FNV-1a, used for config and vocab fingerprints.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace hopqa
