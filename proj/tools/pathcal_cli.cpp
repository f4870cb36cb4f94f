// pathcal: experiment runner for marker-level decoding control.
//
//   pathcal run      --backend branchy:default --controller pathcal --problems p.jsonl --out runs/a
//   pathcal compare  runs/a/manifest.json runs/b/manifest.json
//   pathcal serve    --backend scripted:model.json --listen 127.0.0.1:7070
//   pathcal diagnose --backend branchy:default --problems p.jsonl --out runs/diag
//   pathcal sweep    --backend branchy:default --problems p.jsonl --out runs/sweep
//   pathcal resolve  --vocab vocab.tsv [--lexicon lexicon.tsv]

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pathcal/experiment.hpp"
#include "pathcal/remote.hpp"

namespace {

using namespace pathcal;

struct CommonFlags {
  std::string config;
  std::string backend;
  std::string controller;
  std::string problems;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::vector<std::string> sets;
  bool trace = false;
};

void add_common(CLI::App* app, CommonFlags& f, bool with_controller) {
  app->add_option("--config", f.config, "TOML-style config file");
  app->add_option("--backend", f.backend,
                  "scripted:<file> | branchy:<file|default> | remote:<host:port>");
  if (with_controller) {
    app->add_option("--controller", f.controller,
                    "original | pathcal | tip | cyclic | s1 | suppress:<group> | suppress:all");
    app->add_flag("--trace", f.trace, "write per-step PathCal traces");
  }
  app->add_option("--problems", f.problems, "problem set (JSONL)");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--seed", f.seed, "sampler seed");
  app->add_option("--jobs", f.jobs, "parallel problems (0 = all cores)");
  app->add_option("--set", f.sets, "override section.key=value (repeatable)");
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg.apply(load_key_values(f.config));
  if (!f.backend.empty()) cfg.backend = f.backend;
  if (!f.controller.empty()) cfg.controller = f.controller;
  if (!f.problems.empty()) cfg.problems = f.problems;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed) cfg.sampler.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.trace) cfg.trace = true;
  for (const auto& s : f.sets) {
    auto [key, value] = parse_assignment(s);
    cfg.set(key, value);
  }
  return cfg;
}

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PATHCAL_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

LogitServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Marker-level decoding control experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run one controller over a problem set");
  add_common(run, run_flags, true);

  std::vector<std::string> manifests;
  auto* compare = app.add_subcommand("compare", "compare run manifests (first is the reference)");
  compare->add_option("manifests", manifests, "manifest.json files")->required()->expected(2, -1);

  CommonFlags serve_flags;
  std::string listen = "127.0.0.1:7070";
  auto* serve = app.add_subcommand("serve", "serve a backend over the NDJSON logits protocol");
  add_common(serve, serve_flags, false);
  serve->add_option("--listen", listen, "host:port to bind");

  CommonFlags diag_flags;
  auto* diagnose = app.add_subcommand("diagnose", "fixed-prefix marker intervention");
  add_common(diagnose, diag_flags, false);

  CommonFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "type-wise suppression sweep");
  add_common(sweep, sweep_flags, false);

  std::string vocab_path;
  std::string lexicon_path;
  auto* resolve = app.add_subcommand("resolve", "resolve marker forms against a vocabulary");
  resolve->add_option("--vocab", vocab_path, "vocabulary file")->required();
  resolve->add_option("--lexicon", lexicon_path, "lexicon file (default: built-in)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto m = run_experiment(build_config(run_flags));
      std::cout << summary_csv_header() << "\n"
                << summary_csv_row(m.controller, m.dataset, m.summary) << "\n";
    } else if (compare->parsed()) {
      std::vector<RunManifest> loaded;
      for (const auto& path : manifests) loaded.push_back(RunManifest::load(path));
      std::cout << comparison_table(compare_runs(loaded));
    } else if (serve->parsed()) {
      auto cfg = build_config(serve_flags);
      auto backend = open_backend(cfg);
      std::shared_ptr<const LogitSource> source = std::move(backend.source);
      LogitServer server(source, Endpoint::parse(listen), cfg.jobs);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << cfg.backend << " on port " << server.port() << "\n";
      server.run();
      g_server = nullptr;
    } else if (diagnose->parsed()) {
      auto cfg = build_config(diag_flags);
      auto records = run_prefix_diagnostics(cfg);
      std::cout << state_summary_csv(summarize_states(records, cfg.dataset));
    } else if (sweep->parsed()) {
      auto rows = run_suppression_sweep(build_config(sweep_flags));
      std::cout << "variant,accuracy,mean_length\n";
      for (const auto& r : rows) {
        std::cout << r.variant << "," << r.accuracy << "," << r.mean_length << "\n";
      }
    } else if (resolve->parsed()) {
      auto tok = load_vocab_tokenizer(vocab_path);
      auto forms = lexicon_path.empty() ? default_lexicon() : load_lexicon(lexicon_path);
      auto markers = resolve_markers(forms, tok.adapter());
      nlohmann::json revision = nlohmann::json::object();
      for (const auto& [id, w] : markers.revision) revision[std::to_string(id)] = w;
      std::cout << nlohmann::json{{"continuation", markers.continuation},
                                  {"revision", revision},
                                  {"alternative", markers.alternative}}
                       .dump(2)
                << "\n";
    }
  } catch (const pathcal::Error& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
