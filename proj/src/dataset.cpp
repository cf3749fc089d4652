#include "cfi/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cfi/error.hpp"
#include "cfi/hashing.hpp"

namespace cfi {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  if (s.empty()) fail(what + ": empty integer field");
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size())
    fail(what + ": bad integer '" + s + "'");
  return v;
}

double parse_f64(const std::string& s, const std::string& what) {
  if (s.empty()) fail(what + ": empty number field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size())
    fail(what + ": bad number '" + s + "'");
  return v;
}

std::vector<TokenId> parse_token_list(const std::string& s,
                                      const std::string& what) {
  std::vector<TokenId> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) {
    const std::uint64_t v = parse_u64(tok, what);
    if (v > 0xFFFFFFFEull) fail(what + ": token id out of range");
    out.push_back(static_cast<TokenId>(v));
  }
  if (out.empty()) fail(what + ": empty token list");
  return out;
}

}  // namespace

std::vector<TokenId> render_training_tokens(std::span<const TokenId> question,
                                            std::span<const TokenId> answer) {
  std::vector<TokenId> out;
  out.reserve(question.size() + answer.size() + 3);
  out.push_back(kQSep);
  out.insert(out.end(), question.begin(), question.end());
  out.push_back(kASep);
  out.insert(out.end(), answer.begin(), answer.end());
  out.push_back(kEos);
  return out;
}

std::vector<TokenId> render_prompt_tokens(std::span<const TokenId> question) {
  std::vector<TokenId> out;
  out.reserve(question.size() + 2);
  out.push_back(kQSep);
  out.insert(out.end(), question.begin(), question.end());
  out.push_back(kASep);
  return out;
}

const char* modality_name(Modality m) {
  return m == Modality::kQa ? "qa" : "vector";
}

Modality modality_from_name(const std::string& name) {
  if (name == "qa") return Modality::kQa;
  if (name == "vector") return Modality::kVector;
  fail("unknown modality '" + name + "' (expected qa or vector)");
}

const char* dataset_extension(Modality m) {
  return m == Modality::kQa ? "qa" : "vec";
}

Dataset Dataset::qa(std::uint32_t vocab_size, std::vector<QARecord> records) {
  require(vocab_size >= 1, "vocab_size must be positive");
  std::unordered_set<std::uint64_t> seen;
  for (const auto& r : records) {
    require(seen.insert(r.record_id).second,
            "duplicate record_id " + std::to_string(r.record_id));
    require(!r.question.empty() && !r.answer.empty(),
            "record " + std::to_string(r.record_id) +
                ": question and answer must be non-empty");
    for (const auto& seq : {r.question, r.answer}) {
      for (TokenId t : seq.tokens) {
        if (t >= vocab_size)
          fail("record " + std::to_string(r.record_id) + ": token id " +
               std::to_string(t) + " >= vocab_size " +
               std::to_string(vocab_size));
      }
    }
  }
  Dataset d;
  d.modality_ = Modality::kQa;
  d.vocab_size_ = vocab_size;
  d.qa_ = std::move(records);
  return d;
}

Dataset Dataset::vectors(std::uint32_t n_classes,
                         std::vector<VectorRecord> records) {
  require(n_classes >= 1, "n_classes must be positive");
  std::unordered_set<std::uint64_t> seen;
  std::size_t dim = records.empty() ? 0 : records.front().features.size();
  for (const auto& r : records) {
    require(seen.insert(r.record_id).second,
            "duplicate record_id " + std::to_string(r.record_id));
    require(!r.features.empty(),
            "record " + std::to_string(r.record_id) + ": empty feature vector");
    require(r.features.size() == dim,
            "record " + std::to_string(r.record_id) +
                ": feature dimension mismatch");
    require(r.label < n_classes, "record " + std::to_string(r.record_id) +
                                     ": label " + std::to_string(r.label) +
                                     " >= n_classes " +
                                     std::to_string(n_classes));
  }
  Dataset d;
  d.modality_ = Modality::kVector;
  d.n_classes_ = n_classes;
  d.feature_dim_ = dim;
  d.vec_ = std::move(records);
  return d;
}

std::uint32_t Dataset::vocab_size() const {
  require(modality_ == Modality::kQa, "vocab_size: not a QA dataset");
  return vocab_size_;
}

std::uint32_t Dataset::n_classes() const {
  require(modality_ == Modality::kVector, "n_classes: not a vector dataset");
  return n_classes_;
}

std::size_t Dataset::feature_dim() const {
  require(modality_ == Modality::kVector, "feature_dim: not a vector dataset");
  return feature_dim_;
}

const QARecord& Dataset::qa_record(std::size_t index) const {
  require(modality_ == Modality::kQa, "qa_record: not a QA dataset");
  require(index < qa_.size(), "record index out of range");
  return qa_[index];
}

const VectorRecord& Dataset::vector_record(std::size_t index) const {
  require(modality_ == Modality::kVector, "vector_record: not a vector dataset");
  require(index < vec_.size(), "record index out of range");
  return vec_[index];
}

const std::vector<QARecord>& Dataset::qa_records() const {
  require(modality_ == Modality::kQa, "qa_records: not a QA dataset");
  return qa_;
}

const std::vector<VectorRecord>& Dataset::vector_records() const {
  require(modality_ == Modality::kVector, "vector_records: not a vector dataset");
  return vec_;
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  if (dataset.modality() == Modality::kQa) {
    out += "#qa vocab_size=" + std::to_string(dataset.vocab_size()) + "\n";
    for (const auto& r : dataset.qa_records()) {
      out += std::to_string(r.record_id);
      out += '\t';
      for (std::size_t k = 0; k < r.question.tokens.size(); ++k) {
        if (k) out += ' ';
        out += std::to_string(r.question.tokens[k]);
      }
      out += '\t';
      for (std::size_t k = 0; k < r.answer.tokens.size(); ++k) {
        if (k) out += ' ';
        out += std::to_string(r.answer.tokens[k]);
      }
      out += '\n';
    }
  } else {
    out += "#vec n_classes=" + std::to_string(dataset.n_classes()) + "\n";
    out += "record_id,label";
    for (std::size_t k = 0; k < dataset.feature_dim(); ++k)
      out += ",f" + std::to_string(k);
    out += '\n';
    for (const auto& r : dataset.vector_records()) {
      out += std::to_string(r.record_id);
      out += ',' + std::to_string(r.label);
      for (double f : r.features) out += ',' + fmt_double(f);
      out += '\n';
    }
  }
  return out;
}

Dataset parse_dataset(const std::string& content, Modality modality,
                      const std::string& context_name) {
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;

  auto where = [&](std::size_t n) {
    return context_name + ":" + std::to_string(n);
  };

  if (!std::getline(in, line)) fail(context_name + ": empty file");
  ++line_no;

  if (modality == Modality::kQa) {
    std::uint32_t vocab_size = 0;
    if (std::sscanf(line.c_str(), "#qa vocab_size=%u", &vocab_size) != 1)
      fail(where(line_no) + ": expected '#qa vocab_size=<n>' header");
    std::vector<QARecord> records;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split(line, '\t');
      if (fields.size() != 3)
        fail(where(line_no) + ": malformed record line (expected 3 fields)");
      QARecord r;
      r.record_id = parse_u64(fields[0], where(line_no));
      r.question = TokenSequence(parse_token_list(fields[1], where(line_no)));
      r.answer = TokenSequence(parse_token_list(fields[2], where(line_no)));
      records.push_back(std::move(r));
    }
    if (records.empty()) fail(context_name + ": contains no records");
    return Dataset::qa(vocab_size, std::move(records));
  }

  std::uint32_t n_classes = 0;
  if (std::sscanf(line.c_str(), "#vec n_classes=%u", &n_classes) != 1)
    fail(where(line_no) + ": expected '#vec n_classes=<k>' header");
  if (!std::getline(in, line)) fail(context_name + ": missing column header");
  ++line_no;
  std::vector<VectorRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() < 3)
      fail(where(line_no) + ": malformed record line (expected >= 3 fields)");
    VectorRecord r;
    r.record_id = parse_u64(fields[0], where(line_no));
    const std::uint64_t label = parse_u64(fields[1], where(line_no));
    if (label > 0xFFFFFFFFull) fail(where(line_no) + ": label out of range");
    r.label = static_cast<std::uint32_t>(label);
    for (std::size_t k = 2; k < fields.size(); ++k)
      r.features.push_back(parse_f64(fields[k], where(line_no)));
    records.push_back(std::move(r));
  }
  if (records.empty()) fail(context_name + ": contains no records");
  return Dataset::vectors(n_classes, std::move(records));
}

Dataset load_dataset(const std::string& path, Modality modality) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open dataset file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), modality, path);
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open '" + path + "' for writing");
  out << serialize_dataset(dataset);
  if (!out) fail("write failed for '" + path + "'");
}

std::uint64_t dataset_hash(const Dataset& dataset) {
  return fnv1a64(serialize_dataset(dataset));
}

}  // namespace cfi
