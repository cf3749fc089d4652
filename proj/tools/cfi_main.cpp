// cfi: counterfactual influence pipeline driver.
//
// Subcommands chain through files in the run's output directory:
//   gen-data -> craft-dups -> gen-partitions -> sweep -> influence -> stats
// with oracle, extract, stability, and report alongside. Every subcommand
// reads and writes only the documented artifact formats and is idempotent
// for identical inputs.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "cfi/config.hpp"
#include "cfi/duplicates.hpp"
#include "cfi/error.hpp"
#include "cfi/extraction.hpp"
#include "cfi/influence.hpp"
#include "cfi/learner.hpp"
#include "cfi/partition.hpp"
#include "cfi/report.hpp"
#include "cfi/rng.hpp"
#include "cfi/stats.hpp"
#include "cfi/sweep.hpp"
#include "cfi/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct CliArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::uint64_t> target;
  std::optional<std::string> out;
  std::string format = "csv";
  std::optional<std::uint32_t> extract_model;
  std::optional<std::string> m_values;
};

cfi::RunConfig effective_config(const CliArgs& args) {
  cfi::RunConfig config = cfi::RunConfig::load(args.config_path);
  if (args.seed) config.master_seed = *args.seed;
  if (args.out) config.out_dir = *args.out;
  if (args.extract_model) config.extract_model = *args.extract_model;
  if (args.m_values) {
    config.stability_m_values.clear();
    std::istringstream ss(*args.m_values);
    std::string item;
    while (std::getline(ss, item, ','))
      config.stability_m_values.push_back(
          static_cast<std::uint32_t>(std::stoul(item)));
  }
  return config;
}

void need_artifact(const std::string& path, const char* producer) {
  if (!fs::exists(path))
    cfi::fail("missing artifact '" + path + "': run '" + std::string(producer) +
              "' first");
}

std::string unique_path(const cfi::RunConfig& c) {
  return c.out_dir + "/unique." + cfi::dataset_extension(c.modality);
}
std::string sources_path(const cfi::RunConfig& c) {
  return c.out_dir + "/dup_sources." + cfi::dataset_extension(c.modality);
}
std::string partitions_path(const cfi::RunConfig& c) {
  return c.out_dir + "/partitions.bin";
}

cfi::Dataset load_targets(const cfi::RunConfig& config) {
  const std::string path = config.resolved_dataset_path();
  need_artifact(path, "craft-dups");
  return cfi::load_dataset(path, config.modality);
}

// ---------------------------------------------------------------- commands

void cmd_gen_data(const cfi::RunConfig& config) {
  fs::create_directories(config.out_dir);
  const std::size_t total = config.gen_unique + config.gen_dup_groups;
  cfi::require(config.gen_unique >= 1, "gen_unique must be >= 1");

  if (config.modality == cfi::Modality::kQa) {
    const cfi::Dataset all = cfi::generate_qa_dataset(
        total, config.gen_vocab_size, config.gen_q_len, config.gen_a_len,
        cfi::derive_seed(config.master_seed, 1, cfi::kTagSynthetic),
        config.gen_overlap_order);
    std::vector<cfi::QARecord> uniques(
        all.qa_records().begin(), all.qa_records().begin() + config.gen_unique);
    std::vector<cfi::QARecord> sources(
        all.qa_records().begin() + config.gen_unique, all.qa_records().end());
    cfi::save_dataset(cfi::Dataset::qa(config.gen_vocab_size, uniques),
                      unique_path(config));
    if (!sources.empty())
      cfi::save_dataset(cfi::Dataset::qa(config.gen_vocab_size, sources),
                        sources_path(config));
  } else {
    const cfi::Dataset all = cfi::generate_vector_dataset(
        total, config.gen_dim, config.gen_n_classes,
        cfi::derive_seed(config.master_seed, 1, cfi::kTagSynthetic));
    std::vector<cfi::VectorRecord> uniques(
        all.vector_records().begin(),
        all.vector_records().begin() + config.gen_unique);
    std::vector<cfi::VectorRecord> sources(
        all.vector_records().begin() + config.gen_unique,
        all.vector_records().end());
    cfi::save_dataset(cfi::Dataset::vectors(config.gen_n_classes, uniques),
                      unique_path(config));
    if (!sources.empty())
      cfi::save_dataset(cfi::Dataset::vectors(config.gen_n_classes, sources),
                        sources_path(config));
  }
  std::cout << "wrote " << unique_path(config) << " (" << config.gen_unique
            << " records)";
  if (config.gen_dup_groups > 0)
    std::cout << " and " << sources_path(config) << " ("
              << config.gen_dup_groups << " records)";
  std::cout << "\n";
}

void cmd_craft_dups(const cfi::RunConfig& config) {
  need_artifact(unique_path(config), "gen-data");
  const cfi::Dataset unique =
      cfi::load_dataset(unique_path(config), config.modality);
  const std::uint64_t craft_seed =
      cfi::derive_seed(config.master_seed, 2, cfi::kTagCraft);

  cfi::Dataset targets = unique;
  cfi::DuplicateGroupMap groups;
  groups.n_dup = config.gen_n_dup;
  if (config.gen_dup_groups > 0) {
    need_artifact(sources_path(config), "gen-data");
    const cfi::Dataset sources =
        cfi::load_dataset(sources_path(config), config.modality);
    if (config.modality == cfi::Modality::kQa) {
      auto [ds, map] = cfi::build_target_dataset(
          unique, sources.qa_records(), config.gen_n_dup, craft_seed);
      targets = std::move(ds);
      groups = std::move(map);
    } else {
      auto [ds, map] = cfi::build_target_dataset_vectors(
          unique, sources.vector_records(), config.gen_n_dup, craft_seed,
          config.gen_perturb_scale);
      targets = std::move(ds);
      groups = std::move(map);
    }
  } else if (config.modality == cfi::Modality::kQa) {
    auto [ds, map] =
        cfi::build_target_dataset(unique, {}, config.gen_n_dup, craft_seed);
    targets = std::move(ds);
    groups = std::move(map);
  } else {
    auto [ds, map] = cfi::build_target_dataset_vectors(
        unique, {}, config.gen_n_dup, craft_seed, config.gen_perturb_scale);
    targets = std::move(ds);
    groups = std::move(map);
  }

  cfi::save_dataset(targets, config.resolved_dataset_path());
  cfi::save_group_map(groups, cfi::group_map_path(config.out_dir));
  std::cout << "wrote " << config.resolved_dataset_path() << " ("
            << targets.size() << " records, " << groups.groups.size()
            << " duplicate groups)\n";
}

void cmd_gen_partitions(const cfi::RunConfig& config) {
  const cfi::Dataset targets = load_targets(config);
  const cfi::PartitionMatrix p = cfi::generate_partition_matrix(
      targets.size(), config.n_models, config.inclusion_prob,
      config.master_seed);
  cfi::save_partitions(p, partitions_path(config));
  std::cout << "wrote " << partitions_path(config) << " (" << p.n_records()
            << " x " << p.n_models() << ")\n";
}

void cmd_sweep(const cfi::RunConfig& config, const CliArgs& args) {
  const cfi::Dataset targets = load_targets(config);
  need_artifact(partitions_path(config), "gen-partitions");
  const cfi::PartitionMatrix p = cfi::load_partitions(partitions_path(config));
  cfi::SweepOptions options;
  if (args.workers) options.workers = *args.workers;
  const cfi::LossMatrix losses =
      cfi::run_sweep(targets, p, config.learner, config, options);
  cfi::write_loss_csv(losses, config.out_dir + "/losses.csv");
  std::cout << "wrote " << cfi::loss_matrix_path(config.out_dir) << " ("
            << losses.n_targets() << " x " << losses.n_models() << ")\n";
}

void cmd_influence(const cfi::RunConfig& config) {
  need_artifact(cfi::loss_matrix_path(config.out_dir), "sweep");
  need_artifact(partitions_path(config), "gen-partitions");
  const cfi::LossMatrix losses =
      cfi::load_loss_matrix(cfi::loss_matrix_path(config.out_dir));
  const cfi::PartitionMatrix p = cfi::load_partitions(partitions_path(config));
  const cfi::InfluenceMatrix influence = cfi::estimate_influence(losses, p);
  cfi::save_influence(influence, cfi::influence_path(config.out_dir));
  cfi::write_influence_csv(influence, config.out_dir + "/influence.csv");
  std::cout << "wrote " << cfi::influence_path(config.out_dir) << " ("
            << influence.size() << " x " << influence.size() << ")\n";
}

void cmd_oracle(const cfi::RunConfig& config) {
  const cfi::Dataset targets = load_targets(config);
  const cfi::InfluenceMatrix oracle =
      cfi::exact_influence_oracle(targets, config.learner);
  cfi::save_influence(oracle, cfi::influence_oracle_path(config.out_dir));
  std::cout << "wrote " << cfi::influence_oracle_path(config.out_dir) << " ("
            << oracle.size() << " x " << oracle.size() << ")\n";
}

void cmd_stats(const cfi::RunConfig& config) {
  need_artifact(cfi::influence_path(config.out_dir), "influence");
  const cfi::InfluenceMatrix influence =
      cfi::load_influence(cfi::influence_path(config.out_dir));

  cfi::DuplicateGroupMap groups;
  const cfi::DuplicateGroupMap* groups_ptr = nullptr;
  if (fs::exists(cfi::group_map_path(config.out_dir))) {
    groups = cfi::load_group_map(cfi::group_map_path(config.out_dir));
    groups_ptr = &groups;
  }
  std::vector<std::optional<double>> bleu;
  const std::vector<std::optional<double>>* bleu_ptr = nullptr;
  if (fs::exists(cfi::extraction_path(config.out_dir))) {
    bleu = cfi::load_extraction_bleu(cfi::extraction_path(config.out_dir),
                                     influence.size());
    bleu_ptr = &bleu;
  }

  const auto summaries = cfi::summarize_targets(influence, groups_ptr, bleu_ptr);
  cfi::write_summary_csv(summaries, cfi::summary_path(config.out_dir));
  std::vector<std::string> warnings;
  const auto rows = cfi::group_summary(summaries, &warnings);
  cfi::write_group_summary_csv(rows, cfi::group_summary_path(config.out_dir));
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << cfi::summary_path(config.out_dir) << " and "
            << cfi::group_summary_path(config.out_dir) << "\n";
}

void cmd_extract(const cfi::RunConfig& config) {
  const cfi::Dataset targets = load_targets(config);
  cfi::require(targets.modality() == cfi::Modality::kQa,
               "extract requires a QA dataset");
  need_artifact(partitions_path(config), "gen-partitions");
  const cfi::PartitionMatrix p = cfi::load_partitions(partitions_path(config));
  cfi::require(config.extract_model < p.n_models(),
               "extract_model index exceeds the model pool");

  cfi::DuplicateGroupMap groups;
  const cfi::DuplicateGroupMap* groups_ptr = nullptr;
  if (fs::exists(cfi::group_map_path(config.out_dir))) {
    groups = cfi::load_group_map(cfi::group_map_path(config.out_dir));
    groups_ptr = &groups;
  }

  const std::size_t j = config.extract_model;
  const auto subset = p.column_subset(j);
  const cfi::TrainedModel model =
      cfi::train(targets, subset, config.learner,
                 cfi::derive_seed(config.master_seed, j), j);
  const auto results = cfi::measure_extraction(model, targets, groups_ptr,
                                               config.extract_max_len);
  cfi::write_extraction_csv(results, cfi::extraction_path(config.out_dir));
  std::cout << "wrote " << cfi::extraction_path(config.out_dir)
            << " (model " << j << ", " << results.size() << " records)\n";
}

void cmd_stability(const cfi::RunConfig& config) {
  need_artifact(cfi::loss_matrix_path(config.out_dir), "sweep");
  need_artifact(partitions_path(config), "gen-partitions");
  const cfi::LossMatrix losses =
      cfi::load_loss_matrix(cfi::loss_matrix_path(config.out_dir));
  const cfi::PartitionMatrix p = cfi::load_partitions(partitions_path(config));
  std::vector<std::size_t> ms(config.stability_m_values.begin(),
                              config.stability_m_values.end());
  const cfi::StabilityReport report = cfi::stability_analysis(losses, p, ms);
  cfi::write_stability_csv(report, cfi::stability_path(config.out_dir));
  std::cout << "wrote " << cfi::stability_path(config.out_dir) << "\n";
}

void cmd_report(const cfi::RunConfig& config, const CliArgs& args) {
  need_artifact(cfi::influence_path(config.out_dir), "influence");
  const cfi::InfluenceMatrix influence =
      cfi::load_influence(cfi::influence_path(config.out_dir));
  const std::string report_dir = config.out_dir + "/report";
  fs::create_directories(report_dir);

  cfi::DuplicateGroupMap groups;
  const cfi::DuplicateGroupMap* groups_ptr = nullptr;
  if (fs::exists(cfi::group_map_path(config.out_dir))) {
    groups = cfi::load_group_map(cfi::group_map_path(config.out_dir));
    if (!groups.groups.empty()) groups_ptr = &groups;
  }
  std::vector<std::optional<double>> bleu;
  const std::vector<std::optional<double>>* bleu_ptr = nullptr;
  if (fs::exists(cfi::extraction_path(config.out_dir))) {
    bleu = cfi::load_extraction_bleu(cfi::extraction_path(config.out_dir),
                                     influence.size());
    bleu_ptr = &bleu;
  }

  cfi::emit_heatmap(influence, report_dir + "/heatmap.svg");

  // Ranked distributions: the requested target, or one unique plus one
  // duplicate-group exemplar.
  std::vector<std::size_t> plot_targets;
  if (args.target) {
    cfi::require(*args.target < influence.size(), "target id out of range");
    plot_targets.push_back(*args.target);
  } else {
    std::size_t first_unique = influence.size();
    std::size_t first_dup = influence.size();
    for (std::size_t t = 0; t < influence.size(); ++t) {
      const bool dup = groups_ptr && groups.group_of(t).has_value();
      if (dup && first_dup == influence.size()) first_dup = t;
      if (!dup && first_unique == influence.size()) first_unique = t;
    }
    if (first_unique < influence.size()) plot_targets.push_back(first_unique);
    if (first_dup < influence.size()) plot_targets.push_back(first_dup);
  }
  for (std::size_t t : plot_targets)
    cfi::emit_ranked_plot(influence, t,
                          report_dir + "/ranked_" + std::to_string(t) + ".svg");

  if (fs::exists(cfi::stability_path(config.out_dir))) {
    const cfi::StabilityReport stability =
        cfi::load_stability_csv(cfi::stability_path(config.out_dir));
    cfi::emit_stability_plot(stability, report_dir + "/stability.svg");
  }

  const auto summaries = cfi::summarize_targets(influence, groups_ptr, bleu_ptr);
  std::vector<std::string> warnings;
  const auto rows = cfi::group_summary(summaries, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  if (args.format == "json") {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json row;
      row["group"] = cfi::group_tag_name(r.group);
      row["count"] = r.count;
      row["self_mean"] = r.self_mean;
      row["self_std"] = r.self_std;
      row["self_median"] = r.self_median;
      row["im_defined"] = r.im_defined;
      row["im_dominant"] = r.im_dominant;
      row["im_mean"] = r.im_mean;
      row["im_std"] = r.im_std;
      row["im_median"] = r.im_median;
      row["bleu_count"] = r.bleu_count;
      row["bleu_mean"] = r.bleu_mean;
      row["bleu_std"] = r.bleu_std;
      row["bleu_median"] = r.bleu_median;
      doc.push_back(row);
    }
    std::ofstream f(report_dir + "/group_summary.json",
                    std::ios::binary | std::ios::trunc);
    if (!f) cfi::fail("cannot open report json for writing");
    f << doc.dump(2) << "\n";
  } else {
    cfi::write_group_summary_csv(rows, report_dir + "/group_summary.csv");
  }
  std::cout << "wrote report artifacts under " << report_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"counterfactual influence estimation over subsampled model "
               "ensembles"};
  app.require_subcommand(1);
  app.fallthrough();

  CliArgs args;
  app.add_option("--config", args.config_path, "run configuration file")
      ->envname("CFI_CONFIG");
  app.add_option("--seed", args.seed, "override master_seed")
      ->envname("CFI_SEED");
  app.add_option("--workers", args.workers, "worker threads for the sweep")
      ->envname("CFI_WORKERS");
  app.add_option("--target", args.target, "target record id for report")
      ->envname("CFI_TARGET");
  app.add_option("--out", args.out, "override output directory")
      ->envname("CFI_OUT");
  app.add_option("--format", args.format, "table format: csv or json")
      ->envname("CFI_FORMAT")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* gen_data = app.add_subcommand("gen-data", "generate synthetic data");
  auto* craft = app.add_subcommand("craft-dups",
                                   "craft near-duplicates and assemble D_t");
  auto* gen_parts =
      app.add_subcommand("gen-partitions", "generate the inclusion matrix");
  auto* sweep = app.add_subcommand("sweep", "train the model pool");
  auto* influence =
      app.add_subcommand("influence", "estimate the influence matrix");
  auto* oracle =
      app.add_subcommand("oracle", "exact influence by subset enumeration");
  auto* stats = app.add_subcommand("stats", "per-target and group statistics");
  auto* extract = app.add_subcommand("extract", "greedy-decoding extraction");
  extract->add_option("--model", args.extract_model,
                      "model pool index to extract from");
  auto* stability =
      app.add_subcommand("stability", "estimator stability across pool splits");
  stability->add_option("--m-values", args.m_values,
                        "comma-separated pool sizes");
  auto* report = app.add_subcommand("report", "figures and summary tables");

  CLI11_PARSE(app, argc, argv);

  try {
    if (args.config_path.empty())
      cfi::fail("--config is required (or set CFI_CONFIG)");
    const cfi::RunConfig config = effective_config(args);

    if (gen_data->parsed()) cmd_gen_data(config);
    if (craft->parsed()) cmd_craft_dups(config);
    if (gen_parts->parsed()) cmd_gen_partitions(config);
    if (sweep->parsed()) cmd_sweep(config, args);
    if (influence->parsed()) cmd_influence(config);
    if (oracle->parsed()) cmd_oracle(config);
    if (stats->parsed()) cmd_stats(config);
    if (extract->parsed()) cmd_extract(config);
    if (stability->parsed()) cmd_stability(config);
    if (report->parsed()) cmd_report(config, args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
