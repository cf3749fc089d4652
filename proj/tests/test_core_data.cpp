#include <doctest.h>

#include <algorithm>

#include "cfi/config.hpp"
#include "cfi/dataset.hpp"
#include "cfi/error.hpp"
#include "test_util.hpp"

using namespace cfi;
using cfitest::TempDir;

namespace {

Dataset small_qa() {
  std::vector<QARecord> records;
  records.push_back({0, TokenSequence{5, 6}, TokenSequence{7, 8, 9}});
  records.push_back({1, TokenSequence{10}, TokenSequence{11}});
  records.push_back({2, TokenSequence{12, 13, 14}, TokenSequence{15}});
  return Dataset::qa(100, std::move(records));
}

}  // namespace

TEST_CASE("qa file round trip assigns canonical indices in file order") {
  TempDir dir("qa_roundtrip");
  const std::string path = dir.file("data.qa");
  cfitest::spit(path,
                "#qa vocab_size=50\n"
                "7\t3 4\t5 6\n"
                "9\t8\t9 10 11\n"
                "4\t12 13\t14\n");
  const Dataset d = load_dataset(path, Modality::kQa);
  CHECK(d.size() == 3);
  CHECK(d.vocab_size() == 50);
  // file order defines indices, record_id does not
  CHECK(d.qa_record(0).record_id == 7);
  CHECK(d.qa_record(1).record_id == 9);
  CHECK(d.qa_record(2).record_id == 4);
  CHECK(d.qa_record(1).answer.tokens == std::vector<TokenId>{9, 10, 11});

  const std::string out = dir.file("copy.qa");
  save_dataset(d, out);
  CHECK(load_dataset(out, Modality::kQa) == d);
}

TEST_CASE("save then load then save is byte-identical") {
  TempDir dir("double_save");
  const Dataset d = small_qa();
  const std::string p1 = dir.file("a.qa");
  const std::string p2 = dir.file("b.qa");
  save_dataset(d, p1);
  save_dataset(load_dataset(p1, Modality::kQa), p2);
  CHECK(cfitest::slurp(p1) == cfitest::slurp(p2));
  CHECK(!cfitest::slurp(p1).empty());
}

TEST_CASE("vector dataset round trip preserves doubles exactly") {
  TempDir dir("vec_roundtrip");
  std::vector<VectorRecord> records;
  records.push_back({0, {0.1, -2.5e-7, 3.0}, 1});
  records.push_back({1, {1.0 / 3.0, 2.0, -0.0}, 0});
  const Dataset d = Dataset::vectors(2, std::move(records));
  const std::string path = dir.file("data.vec");
  save_dataset(d, path);
  const Dataset back = load_dataset(path, Modality::kVector);
  CHECK(back == d);
  CHECK(back.feature_dim() == 3);
  CHECK(back.n_classes() == 2);

  const std::string again = dir.file("again.vec");
  save_dataset(back, again);
  CHECK(cfitest::slurp(path) == cfitest::slurp(again));
}

TEST_CASE("malformed line errors name the line number") {
  TempDir dir("malformed");
  const std::string path = dir.file("bad.qa");
  cfitest::spit(path,
                "#qa vocab_size=50\n"
                "0\t1 2\t3\n"
                "not a record\n");
  CHECK_THROWS_WITH_AS(load_dataset(path, Modality::kQa),
                       doctest::Contains(":3"), Error);
}

TEST_CASE("duplicate record ids are rejected") {
  TempDir dir("dup_ids");
  const std::string path = dir.file("dup.qa");
  cfitest::spit(path,
                "#qa vocab_size=50\n"
                "3\t1\t2\n"
                "3\t4\t5\n");
  CHECK_THROWS_WITH_AS(load_dataset(path, Modality::kQa),
                       doctest::Contains("duplicate record_id 3"), Error);
}

TEST_CASE("empty and header-only files are rejected") {
  TempDir dir("empty");
  const std::string path = dir.file("empty.qa");
  cfitest::spit(path, "");
  CHECK_THROWS_AS(load_dataset(path, Modality::kQa), Error);
  cfitest::spit(path, "#qa vocab_size=5\n");
  CHECK_THROWS_WITH_AS(load_dataset(path, Modality::kQa),
                       doctest::Contains("no records"), Error);
}

TEST_CASE("token id at or above vocab_size names the offending record") {
  TempDir dir("oov");
  const std::string path = dir.file("oov.qa");
  cfitest::spit(path,
                "#qa vocab_size=10\n"
                "0\t1 2\t3\n"
                "5\t4\t10\n");
  CHECK_THROWS_WITH_AS(load_dataset(path, Modality::kQa),
                       doctest::Contains("record 5"), Error);
}

TEST_CASE("modality mismatch is rejected at the header") {
  TempDir dir("modality");
  const std::string path = dir.file("data.qa");
  save_dataset(small_qa(), path);
  CHECK_THROWS_AS(load_dataset(path, Modality::kVector), Error);
}

TEST_CASE("vector labels must stay below n_classes") {
  CHECK_THROWS_WITH_AS(
      Dataset::vectors(2, {{0, {1.0, 2.0}, 2}}),
      doctest::Contains("label 2 >= n_classes 2"), Error);
  CHECK_THROWS_AS(Dataset::vectors(2, {{0, {1.0}, 0}, {1, {1.0, 2.0}, 1}}),
                  Error);  // dimension mismatch
}

TEST_CASE("training rendering wraps the pair in reserved tokens") {
  const auto tokens = render_training_tokens(std::vector<TokenId>{5, 6},
                                             std::vector<TokenId>{7});
  CHECK(tokens == std::vector<TokenId>{kQSep, 5, 6, kASep, 7, kEos});
  const auto prompt = render_prompt_tokens(std::vector<TokenId>{5, 6});
  CHECK(prompt == std::vector<TokenId>{kQSep, 5, 6, kASep});
}

TEST_CASE("run config round trips losslessly") {
  RunConfig c;
  c.master_seed = 987654321123456789ull;
  c.n_models = 77;
  c.inclusion_prob = 0.125;
  c.learner.kind = LearnerSpec::Kind::kLinearClassifier;
  c.learner.add_k = 0.25;
  c.learner.loss_tokens = LearnerSpec::LossTokens::kAnswerOnly;
  c.modality = Modality::kVector;
  c.dataset_path = "some/where.vec";
  c.out_dir = "runs/x";
  c.gen_perturb_scale = 0.125;
  c.stability_m_values = {4, 16};

  TempDir dir("config");
  const std::string path = dir.file("run.cfg");
  c.save(path);
  CHECK(RunConfig::load(path) == c);
  // serialize(parse(serialize())) is a fixed point
  CHECK(RunConfig::parse(c.serialize(), "mem").serialize() == c.serialize());
}

TEST_CASE("unknown config keys are an error") {
  CHECK_THROWS_WITH_AS(RunConfig::parse("master_seed=1\nbogus_key=2\n", "mem"),
                       doctest::Contains("unknown config key 'bogus_key'"),
                       Error);
}

TEST_CASE("config validates learner hyperparameters") {
  CHECK_THROWS_AS(RunConfig::parse("add_k=0\n", "mem"), Error);
  CHECK_THROWS_AS(RunConfig::parse("inclusion_prob=1\n", "mem"), Error);
  CHECK_THROWS_AS(RunConfig::parse("ngram_order=0\n", "mem"), Error);
}

TEST_CASE("a one-record dataset saves as one data line plus header") {
  std::vector<QARecord> records;
  records.push_back({0, TokenSequence{5}, TokenSequence{6, 7}});
  const Dataset d = Dataset::qa(10, std::move(records));
  const std::string text = serialize_dataset(d);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.rfind("#qa", 0) == 0);
}
