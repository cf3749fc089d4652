#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfi/tokens.hpp"

namespace cfi {

struct QARecord {
  std::uint64_t record_id = 0;
  TokenSequence question;
  TokenSequence answer;

  bool operator==(const QARecord&) const = default;
};

struct VectorRecord {
  std::uint64_t record_id = 0;
  std::vector<double> features;
  std::uint32_t label = 0;

  bool operator==(const VectorRecord&) const = default;
};

enum class Modality { kQa, kVector };

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);

// Immutable homogeneous record collection. The position of a record in the
// dataset is its canonical index: PartitionMatrix rows and InfluenceMatrix
// axes key on it, not on record_id.
class Dataset {
 public:
  static Dataset qa(std::uint32_t vocab_size, std::vector<QARecord> records);
  static Dataset vectors(std::uint32_t n_classes,
                         std::vector<VectorRecord> records);

  Modality modality() const { return modality_; }
  std::size_t size() const {
    return modality_ == Modality::kQa ? qa_.size() : vec_.size();
  }

  std::uint32_t vocab_size() const;
  std::uint32_t n_classes() const;
  std::size_t feature_dim() const;

  const QARecord& qa_record(std::size_t index) const;
  const VectorRecord& vector_record(std::size_t index) const;
  const std::vector<QARecord>& qa_records() const;
  const std::vector<VectorRecord>& vector_records() const;

  bool operator==(const Dataset&) const = default;

 private:
  Dataset() = default;

  Modality modality_ = Modality::kQa;
  std::uint32_t vocab_size_ = 0;  // QA
  std::uint32_t n_classes_ = 0;  // vector
  std::size_t feature_dim_ = 0;  // vector
  std::vector<QARecord> qa_;
  std::vector<VectorRecord> vec_;
};

// Documented line formats (see README): QA files are tab-separated token id
// lists under a "#qa vocab_size=<n>" header; vector files are CSV under a
// "#vec n_classes=<k>" comment plus a column header.
Dataset load_dataset(const std::string& path, Modality modality);
void save_dataset(const Dataset& dataset, const std::string& path);

// Exact bytes save_dataset writes; also the input to dataset_hash.
std::string serialize_dataset(const Dataset& dataset);
Dataset parse_dataset(const std::string& content, Modality modality,
                      const std::string& context_name);

std::uint64_t dataset_hash(const Dataset& dataset);

// Default file extension per modality ("qa" / "vec").
const char* dataset_extension(Modality m);

}  // namespace cfi
