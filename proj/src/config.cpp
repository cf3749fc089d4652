#include "cfi/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cfi/error.hpp"
#include "cfi/hashing.hpp"

namespace cfi {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* kind_name(LearnerSpec::Kind k) {
  return k == LearnerSpec::Kind::kNgramLm ? "ngram_lm" : "linear_classifier";
}

const char* loss_tokens_name(LearnerSpec::LossTokens lt) {
  return lt == LearnerSpec::LossTokens::kFull ? "full" : "answer_only";
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || errno != 0 || end != v.c_str() + v.size())
    fail("config key " + key + ": bad integer '" + v + "'");
  return x;
}

std::uint32_t to_u32(const std::string& v, const std::string& key) {
  const std::uint64_t x = to_u64(v, key);
  if (x > 0xFFFFFFFFull) fail("config key " + key + ": value out of range");
  return static_cast<std::uint32_t>(x);
}

double to_f64(const std::string& v, const std::string& key) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || errno != 0 || end != v.c_str() + v.size())
    fail("config key " + key + ": bad number '" + v + "'");
  return x;
}

}  // namespace

void LearnerSpec::validate() const {
  require(ngram_order >= 1, "ngram_order must be >= 1");
  require(add_k > 0.0, "add_k must be positive");
  require(lc_learning_rate > 0.0, "lc_learning_rate must be positive");
  require(lc_iterations >= 1, "lc_iterations must be >= 1");
  require(lc_l2 >= 0.0, "lc_l2 must be non-negative");
}

std::string LearnerSpec::serialize() const {
  std::string s;
  s += "learner=";
  s += kind_name(kind);
  s += "\nngram_order=" + std::to_string(ngram_order);
  s += "\nadd_k=" + fmt_double(add_k);
  s += "\nloss_tokens=";
  s += loss_tokens_name(loss_tokens);
  s += "\nlc_learning_rate=" + fmt_double(lc_learning_rate);
  s += "\nlc_iterations=" + std::to_string(lc_iterations);
  s += "\nlc_l2=" + fmt_double(lc_l2);
  s += "\n";
  return s;
}

std::uint64_t learner_spec_hash(const LearnerSpec& spec) {
  return fnv1a64(spec.serialize());
}

std::string RunConfig::serialize() const {
  std::string s;
  s += "master_seed=" + std::to_string(master_seed) + "\n";
  s += "n_models=" + std::to_string(n_models) + "\n";
  s += "inclusion_prob=" + fmt_double(inclusion_prob) + "\n";
  s += learner.serialize();
  s += "modality=";
  s += modality_name(modality);
  s += "\n";
  s += "dataset=" + dataset_path + "\n";
  s += "out_dir=" + out_dir + "\n";
  s += "gen_unique=" + std::to_string(gen_unique) + "\n";
  s += "gen_dup_groups=" + std::to_string(gen_dup_groups) + "\n";
  s += "gen_n_dup=" + std::to_string(gen_n_dup) + "\n";
  s += "gen_vocab_size=" + std::to_string(gen_vocab_size) + "\n";
  s += "gen_q_len=" + std::to_string(gen_q_len) + "\n";
  s += "gen_a_len=" + std::to_string(gen_a_len) + "\n";
  s += "gen_overlap_order=" + std::to_string(gen_overlap_order) + "\n";
  s += "gen_dim=" + std::to_string(gen_dim) + "\n";
  s += "gen_n_classes=" + std::to_string(gen_n_classes) + "\n";
  s += "gen_perturb_scale=" + fmt_double(gen_perturb_scale) + "\n";
  s += "extract_model=" + std::to_string(extract_model) + "\n";
  s += "extract_max_len=" + std::to_string(extract_max_len) + "\n";
  s += "stability_m_values=";
  for (std::size_t i = 0; i < stability_m_values.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(stability_m_values[i]);
  }
  s += "\n";
  return s;
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open '" + path + "' for writing");
  out << serialize();
  if (!out) fail("write failed for '" + path + "'");
}

RunConfig RunConfig::parse(const std::string& content,
                           const std::string& context_name) {
  RunConfig c;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      fail(context_name + ":" + std::to_string(line_no) +
           ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));

    if (key == "master_seed") {
      c.master_seed = to_u64(val, key);
    } else if (key == "n_models") {
      c.n_models = to_u32(val, key);
    } else if (key == "inclusion_prob") {
      c.inclusion_prob = to_f64(val, key);
    } else if (key == "learner") {
      if (val == "ngram_lm")
        c.learner.kind = LearnerSpec::Kind::kNgramLm;
      else if (val == "linear_classifier")
        c.learner.kind = LearnerSpec::Kind::kLinearClassifier;
      else
        fail("config key learner: unknown kind '" + val + "'");
    } else if (key == "ngram_order") {
      c.learner.ngram_order = to_u32(val, key);
    } else if (key == "add_k") {
      c.learner.add_k = to_f64(val, key);
    } else if (key == "loss_tokens") {
      if (val == "full")
        c.learner.loss_tokens = LearnerSpec::LossTokens::kFull;
      else if (val == "answer_only")
        c.learner.loss_tokens = LearnerSpec::LossTokens::kAnswerOnly;
      else
        fail("config key loss_tokens: expected full or answer_only");
    } else if (key == "lc_learning_rate") {
      c.learner.lc_learning_rate = to_f64(val, key);
    } else if (key == "lc_iterations") {
      c.learner.lc_iterations = to_u32(val, key);
    } else if (key == "lc_l2") {
      c.learner.lc_l2 = to_f64(val, key);
    } else if (key == "modality") {
      c.modality = modality_from_name(val);
    } else if (key == "dataset") {
      c.dataset_path = val;
    } else if (key == "out_dir") {
      c.out_dir = val;
    } else if (key == "gen_unique") {
      c.gen_unique = to_u32(val, key);
    } else if (key == "gen_dup_groups") {
      c.gen_dup_groups = to_u32(val, key);
    } else if (key == "gen_n_dup") {
      c.gen_n_dup = to_u32(val, key);
    } else if (key == "gen_vocab_size") {
      c.gen_vocab_size = to_u32(val, key);
    } else if (key == "gen_q_len") {
      c.gen_q_len = to_u32(val, key);
    } else if (key == "gen_a_len") {
      c.gen_a_len = to_u32(val, key);
    } else if (key == "gen_overlap_order") {
      c.gen_overlap_order = to_u32(val, key);
    } else if (key == "gen_dim") {
      c.gen_dim = to_u32(val, key);
    } else if (key == "gen_n_classes") {
      c.gen_n_classes = to_u32(val, key);
    } else if (key == "gen_perturb_scale") {
      c.gen_perturb_scale = to_f64(val, key);
    } else if (key == "extract_model") {
      c.extract_model = to_u32(val, key);
    } else if (key == "extract_max_len") {
      c.extract_max_len = to_u32(val, key);
    } else if (key == "stability_m_values") {
      c.stability_m_values.clear();
      std::string item;
      std::istringstream vs(val);
      while (std::getline(vs, item, ','))
        c.stability_m_values.push_back(to_u32(trim(item), key));
    } else {
      fail(context_name + ":" + std::to_string(line_no) +
           ": unknown config key '" + key + "'");
    }
  }
  require(c.inclusion_prob > 0.0 && c.inclusion_prob < 1.0,
          "inclusion_prob must be in (0, 1)");
  c.learner.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string RunConfig::resolved_dataset_path() const {
  if (!dataset_path.empty()) return dataset_path;
  return out_dir + "/targets." + dataset_extension(modality);
}

}  // namespace cfi
