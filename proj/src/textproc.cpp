#include "hopqa/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hopqa {

namespace {

bool is_ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c) != 0; }
bool is_space(unsigned char c) { return c < 128 && std::isspace(c) != 0; }
bool is_word_char(unsigned char c) { return c >= 128 || std::isalnum(c) != 0; }

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::string normalize_answer(std::string_view text) {
  // lower + remove punctuation
  std::string s;
  s.reserve(text.size());
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_ascii_punct(c)) continue;
    s.push_back(ascii_lower(ch));
  }
  // Articles are removed only as whole words, i.e. bounded by non-word chars.
  // Python's \w also matches '_', which is already gone as punctuation.
  std::string no_articles;
  no_articles.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_char(static_cast<unsigned char>(s[i]))) {
      no_articles.push_back(s[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
    std::string_view word(s.data() + i, j - i);
    if (word == "a" || word == "an" || word == "the") {
      no_articles.push_back(' ');
    } else {
      no_articles.append(word);
    }
    i = j;
  }
  // whitespace collapse
  std::string out;
  out.reserve(no_articles.size());
  std::istringstream words(no_articles);
  std::string w;
  while (words >> w) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream words(normalize_answer(text));
  std::string w;
  while (words >> w) out.push_back(std::move(w));
  return out;
}

std::vector<Token> tokenize_with_offsets(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
      std::string t(text.substr(i, j - i));
      std::transform(t.begin(), t.end(), t.begin(), ascii_lower);
      out.push_back(Token{std::move(t), i, j});
      i = j;
    } else {
      out.push_back(Token{std::string(1, text[i]), i, i + 1});
      ++i;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    bool attach = t.size() == 1 && (t == "?" || t == "." || t == "," || t == "!" || t == ";" || t == ":");
    if (!out.empty() && !attach) out.push_back(' ');
    out += t;
  }
  return out;
}

const std::vector<std::string>& Vocab::reserved_tokens() {
  static const std::vector<std::string> kReserved = {"<pad>", "<unk>", "<s>", "</s>", "<sep>"};
  return kReserved;
}

Vocab::Vocab() {
  for (const auto& t : reserved_tokens()) append(t);
}

void Vocab::append(const std::string& token) {
  if (token_to_id_.count(token) != 0) throw std::invalid_argument("duplicate vocab token: " + token);
  token_to_id_.emplace(token, size());
  id_to_token_.push_back(token);
}

int Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

const std::string& Vocab::token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }

void Vocab::save(std::ostream& out) const {
  out << "# hopqa vocab; reserved ids:";
  for (int i = 0; i < kNumReserved; ++i) out << ' ' << i << '=' << id_to_token_[i];
  out << "\n# line k below has id " << kNumReserved << "+k\n";
  for (int i = kNumReserved; i < size(); ++i) out << id_to_token_[i] << '\n';
}

Vocab Vocab::load(std::istream& in) {
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    v.append(line);
  }
  return v;
}

std::uint64_t Vocab::fingerprint() const {
  std::ostringstream s;
  save(s);
  return fnv1a(s.str());
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& corpora, int max_size) {
  if (max_size <= Vocab::kNumReserved) throw std::invalid_argument("vocab max_size must exceed the reserved block");
  Vocab reserved;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::pair<std::string, long>> counts;  // in first-occurrence order
  for (const auto& seq : corpora) {
    for (const auto& tok : seq) {
      if (reserved.contains(tok)) continue;
      auto [it, inserted] = index.emplace(tok, counts.size());
      if (inserted) counts.emplace_back(tok, 0);
      ++counts[it->second].second;
    }
  }
  std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, n] : counts) {
    if (v.size() >= max_size) break;
    v.append(tok);
  }
  return v;
}

EncodedSource encode_source(const std::vector<std::string>& tokens, const Vocab& vocab) {
  EncodedSource enc;
  enc.tokens = tokens;
  std::unordered_map<std::string, int> oov_ids;
  for (const auto& t : tokens) {
    int id = vocab.id(t);
    enc.ids.push_back(id);
    if (id != Vocab::kUnk || t == "<unk>") {
      enc.extended_ids.push_back(id);
      continue;
    }
    auto [it, inserted] = oov_ids.emplace(t, vocab.size() + static_cast<int>(enc.oov_list.size()));
    if (inserted) enc.oov_list.push_back(t);
    enc.extended_ids.push_back(it->second);
  }
  return enc;
}

const std::string& extended_token(int id, const Vocab& vocab, const EncodedSource& source) {
  if (id < vocab.size()) return vocab.token(id);
  return source.oov_list.at(static_cast<std::size_t>(id - vocab.size()));
}

int target_extended_id(const std::string& token, const Vocab& vocab, const EncodedSource& source) {
  if (vocab.contains(token)) return vocab.id(token);
  auto it = std::find(source.oov_list.begin(), source.oov_list.end(), token);
  if (it != source.oov_list.end()) return vocab.size() + static_cast<int>(it - source.oov_list.begin());
  return Vocab::kUnk;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace hopqa
