#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathcal/baselines.hpp"
#include "pathcal/config_file.hpp"
#include "pathcal/diagnostics.hpp"
#include "pathcal/evaluation.hpp"
#include "pathcal/logit_source.hpp"
#include "pathcal/sampler.hpp"

namespace pathcal {

inline constexpr std::string_view kToolVersion = "0.3.0";

struct ExperimentConfig {
  // scripted:<file> | branchy:<file> | branchy:default | remote:<host:port>
  std::string backend = "branchy:default";
  std::string controller = "pathcal";
  ControllerSettings controllers;
  SamplerConfig sampler;
  InterventionConfig diagnostics;
  std::filesystem::path problems;
  std::string dataset = "default";
  std::filesystem::path out_dir = "runs/latest";
  int jobs = 0;
  bool trace = false;
  std::string end_tag_text = "</think>";
  std::filesystem::path lexicon;  // empty: built-in lexicon
  std::filesystem::path vocab;    // tokenizer for remote backends
  std::vector<std::string> forced_marker_forms = {"So", "But"};
  TokenId remote_eos = -1;
  int remote_timeout_ms = 10000;

  // Applies one "section.key" setting; throws ConfigError on unknown keys or
  // unparsable values.
  void set(std::string_view key, std::string_view value);
  void apply(const KeyValues& kv);
  // Every setting, in a form parse_key_values + apply reads back losslessly.
  std::string to_toml() const;
  void validate() const;
};

struct Problem {
  std::string id;
  std::string gold;         // empty: judged by the backend's answer ids
  std::string prompt;       // encoded with the backend tokenizer
  AnswerMode mode = AnswerMode::kNumeric;
};

// JSONL with keys id, gold, optional prompt and answer_type
// ("numeric" | "short_string"; inferred from gold when absent).
std::vector<Problem> load_problems(const std::filesystem::path& path);

struct Backend {
  std::unique_ptr<LogitSource> source;
  std::optional<VocabTokenizer> tokenizer;
  std::vector<TokenId> end_tag;
};

// Throws ConfigError for bad specs, BackendUnavailable when unreachable.
Backend open_backend(const ExperimentConfig& cfg);

struct RunManifest {
  std::string config_toml;
  std::string tool_version;
  std::string timestamp;
  std::string controller;
  std::string dataset;
  std::filesystem::path out_dir;
  std::filesystem::path records_path;
  std::filesystem::path summary_path;
  std::vector<std::pair<std::string, std::filesystem::path>> trace_paths;
  std::vector<std::string> problem_ids;
  ScoreSummary summary;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load(const std::filesystem::path& path);
};

// Runs every problem and writes records.jsonl, summary.csv, config.toml,
// manifest.json (and traces/ with cfg.trace) under cfg.out_dir.
RunManifest run_experiment(const ExperimentConfig& cfg);

struct ComparisonRow {
  std::string method;
  double accuracy = 0.0;
  double mean_length = 0.0;
  double delta_accuracy = 0.0;
  double delta_length = 0.0;
};

// Deltas are against the first manifest. Throws MismatchedProblemSets.
std::vector<ComparisonRow> compare_runs(const std::vector<RunManifest>& manifests);
std::string comparison_table(const std::vector<ComparisonRow>& rows);

// Fixed-prefix intervention over every problem; writes prefixes.jsonl and
// states.csv under cfg.out_dir. Problems without a qualifying prefix are
// skipped.
std::vector<PrefixRecord> run_prefix_diagnostics(const ExperimentConfig& cfg);

// Original, SuppressAll and each SuppressOnly group; writes sweep.csv.
std::vector<SweepRow> run_suppression_sweep(const ExperimentConfig& cfg);

}  // namespace pathcal
