#include "cfi/tokenizer.hpp"

#include <fstream>
#include <sstream>

#include "cfi/error.hpp"

namespace cfi {

Vocabulary Vocabulary::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open vocabulary file '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) fail(path + ": empty vocabulary entry");
    tokens.push_back(line);
  }
  return from_tokens(tokens);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  v.tokens_ = tokens;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const TokenId id = kFirstDataToken + static_cast<TokenId>(k);
    if (!v.index_.emplace(tokens[k], id).second)
      fail("duplicate vocabulary entry '" + tokens[k] + "'");
  }
  return v;
}

std::uint32_t Vocabulary::size() const {
  return kFirstDataToken + static_cast<std::uint32_t>(tokens_.size());
}

TokenId Vocabulary::id_of(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end())
    fail("token '" + token + "' is not in the vocabulary");
  return it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  static const std::string kReserved[] = {"<q>", "<a>", "<eos>"};
  if (id < kFirstDataToken) return kReserved[id];
  const std::size_t k = id - kFirstDataToken;
  require(k < tokens_.size(), "token id out of range");
  return tokens_[k];
}

TokenSequence Vocabulary::tokenize_whitespace(const std::string& text) const {
  std::istringstream in(text);
  TokenSequence seq;
  std::string word;
  while (in >> word) seq.tokens.push_back(id_of(word));
  require(!seq.empty(), "tokenized text is empty");
  return seq;
}

TokenSequence Vocabulary::tokenize_characters(const std::string& text) const {
  TokenSequence seq;
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == '\t') continue;
    seq.tokens.push_back(id_of(std::string(1, c)));
  }
  require(!seq.empty(), "tokenized text is empty");
  return seq;
}

std::string Vocabulary::render(const TokenSequence& seq) const {
  std::string out;
  for (std::size_t k = 0; k < seq.tokens.size(); ++k) {
    if (k) out += ' ';
    out += token_of(seq.tokens[k]);
  }
  return out;
}

}  // namespace cfi
