#include "pathcal/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <spdlog/spdlog.h>

#include "pathcal/branchy_sim.hpp"
#include "pathcal/remote.hpp"
#include "pathcal/scripted_model.hpp"

namespace pathcal {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double to_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    double d = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
}

long long to_int(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    long long d = std::stoll(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
}

std::size_t to_size(std::string_view key, std::string_view v) {
  auto n = to_int(key, v);
  if (n < 0) throw ConfigError(std::string(key) + ": must be non-negative");
  return static_cast<std::size_t>(n);
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(std::string(key) + ": expected true/false, got '" + std::string(v) + "'");
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    auto comma = v.find(',', start);
    auto item = v.substr(start, comma == std::string_view::npos ? v.size() - start : comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

std::string safe_file_stem(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view v) {
  auto& p = controllers.pathcal;
  auto& d = diagnostics;
  if (key == "run.backend") backend = v;
  else if (key == "run.controller") controller = v;
  else if (key == "run.problems") problems = std::string(v);
  else if (key == "run.dataset") dataset = v;
  else if (key == "run.out") out_dir = std::string(v);
  else if (key == "run.jobs") jobs = static_cast<int>(to_size(key, v));
  else if (key == "run.trace") trace = to_bool(key, v);
  else if (key == "run.end_tag") end_tag_text = v;
  else if (key == "run.lexicon") lexicon = std::string(v);
  else if (key == "run.vocab") vocab = std::string(v);
  else if (key == "run.remote_eos") remote_eos = static_cast<TokenId>(to_int(key, v));
  else if (key == "run.remote_timeout_ms") remote_timeout_ms = static_cast<int>(to_size(key, v));
  else if (key == "sampler.temperature") sampler.temperature = to_double(key, v);
  else if (key == "sampler.top_p") sampler.top_p = to_double(key, v);
  else if (key == "sampler.seed") sampler.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "sampler.max_new_tokens") sampler.max_new_tokens = to_size(key, v);
  else if (key == "pathcal.alpha_base") p.alpha_base = to_double(key, v);
  else if (key == "pathcal.gamma") p.gamma = to_double(key, v);
  else if (key == "pathcal.tau") p.tau = to_double(key, v);
  else if (key == "pathcal.lambda_A") p.lambda_A = to_double(key, v);
  else if (key == "pathcal.beta_C") p.beta_C = to_double(key, v);
  else if (key == "pathcal.beta_R") p.beta_R = to_double(key, v);
  else if (key == "pathcal.beta_A") p.beta_A = to_double(key, v);
  else if (key == "pathcal.rho") p.rho = to_double(key, v);
  else if (key == "pathcal.eps") p.eps = to_double(key, v);
  else if (key == "pathcal.minp") p.minp = to_size(key, v);
  else if (key == "suppress.penalty") controllers.suppress_penalty = to_double(key, v);
  else if (key == "suppress.think_only") controllers.suppress_think_only = to_bool(key, v);
  else if (key == "tip.delta") controllers.tip_delta = to_double(key, v);
  else if (key == "cyclic.amplitude") controllers.cyclic_amplitude = to_double(key, v);
  else if (key == "cyclic.period") controllers.cyclic_period = to_size(key, v);
  else if (key == "s1.shift") controllers.s1_shift = to_double(key, v);
  else if (key == "s1.min_tokens") controllers.s1_min_tokens = to_size(key, v);
  else if (key == "diagnostics.n_normal") d.n_normal = to_size(key, v);
  else if (key == "diagnostics.n_forced") d.n_forced = to_size(key, v);
  else if (key == "diagnostics.max_prefixes") d.max_prefixes = to_size(key, v);
  else if (key == "diagnostics.min_depth") d.min_depth = to_size(key, v);
  else if (key == "diagnostics.min_gap") d.min_gap = to_size(key, v);
  else if (key == "diagnostics.low_max") d.low_max = to_double(key, v);
  else if (key == "diagnostics.high_min") d.high_min = to_double(key, v);
  else if (key == "diagnostics.forced_markers") forced_marker_forms = split_list(v);
  else throw ConfigError("unknown setting '" + std::string(key) + "'");
}

void ExperimentConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) set(key, value);
}

std::string ExperimentConfig::to_toml() const {
  const auto& p = controllers.pathcal;
  const auto& d = diagnostics;
  std::string forced;
  for (const auto& f : forced_marker_forms) forced += (forced.empty() ? "" : ",") + f;
  std::string s;
  auto line = [&](std::string_view k, const std::string& v) {
    s += std::string(k) + " = " + v + "\n";
  };
  s += "[run]\n";
  line("backend", quote(backend));
  line("controller", quote(controller));
  line("problems", quote(problems.string()));
  line("dataset", quote(dataset));
  line("out", quote(out_dir.string()));
  line("jobs", std::to_string(jobs));
  line("trace", trace ? "true" : "false");
  line("end_tag", quote(end_tag_text));
  line("lexicon", quote(lexicon.string()));
  line("vocab", quote(vocab.string()));
  line("remote_eos", std::to_string(remote_eos));
  line("remote_timeout_ms", std::to_string(remote_timeout_ms));
  s += "\n[sampler]\n";
  line("temperature", num(sampler.temperature));
  line("top_p", num(sampler.top_p));
  line("seed", std::to_string(sampler.seed));
  line("max_new_tokens", std::to_string(sampler.max_new_tokens));
  s += "\n[pathcal]\n";
  line("alpha_base", num(p.alpha_base));
  line("gamma", num(p.gamma));
  line("tau", num(p.tau));
  line("lambda_A", num(p.lambda_A));
  line("beta_C", num(p.beta_C));
  line("beta_R", num(p.beta_R));
  line("beta_A", num(p.beta_A));
  line("rho", num(p.rho));
  line("eps", num(p.eps));
  line("minp", std::to_string(p.minp));
  s += "\n[suppress]\n";
  line("penalty", num(controllers.suppress_penalty));
  line("think_only", controllers.suppress_think_only ? "true" : "false");
  s += "\n[tip]\n";
  line("delta", num(controllers.tip_delta));
  s += "\n[cyclic]\n";
  line("amplitude", num(controllers.cyclic_amplitude));
  line("period", std::to_string(controllers.cyclic_period));
  s += "\n[s1]\n";
  line("shift", num(controllers.s1_shift));
  line("min_tokens", std::to_string(controllers.s1_min_tokens));
  s += "\n[diagnostics]\n";
  line("n_normal", std::to_string(d.n_normal));
  line("n_forced", std::to_string(d.n_forced));
  line("max_prefixes", std::to_string(d.max_prefixes));
  line("min_depth", std::to_string(d.min_depth));
  line("min_gap", std::to_string(d.min_gap));
  line("low_max", num(d.low_max));
  line("high_min", num(d.high_min));
  line("forced_markers", quote(forced));
  return s;
}

void ExperimentConfig::validate() const {
  sampler.validate();
  controllers.pathcal.validate();
  diagnostics.validate();
  if (controllers.cyclic_period == 0) throw ConfigError("cyclic.period must be positive");
  if (controllers.suppress_penalty < 0) throw ConfigError("suppress.penalty must be >= 0");
}

std::vector<Problem> load_problems(const fs::path& path) {
  if (path.empty()) throw ConfigError("no problem file given");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file " + path.string());
  std::vector<Problem> out;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      Problem p;
      p.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      p.gold = j.value("gold", std::string());
      p.prompt = j.value("prompt", std::string());
      if (j.contains("answer_type")) {
        const auto t = j.at("answer_type").get<std::string>();
        if (t == "numeric") p.mode = AnswerMode::kNumeric;
        else if (t == "short_string") p.mode = AnswerMode::kShortString;
        else throw ConfigError("unknown answer_type '" + t + "'");
      } else {
        p.mode = infer_answer_mode(p.gold);
      }
      if (!seen.insert(p.id).second) throw ConfigError("duplicate problem id '" + p.id + "'");
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Backend open_backend(const ExperimentConfig& cfg) {
  Backend b;
  const std::string& spec = cfg.backend;
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("backend must be kind:argument");
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  try {
    if (kind == "scripted") {
      b.source = std::make_unique<ScriptedModel>(ScriptedModel::load(arg));
    } else if (kind == "branchy") {
      b.source = std::make_unique<BranchySim>(arg == "default" ? default_branchy_config()
                                                               : BranchySimConfig::load(arg));
    } else if (kind == "remote") {
      if (cfg.remote_eos < 0) throw ConfigError("remote backends need run.remote_eos");
      b.source = std::make_unique<RemoteSource>(
          Endpoint::parse(arg), cfg.remote_eos, std::chrono::milliseconds(cfg.remote_timeout_ms));
    } else {
      throw ConfigError("unknown backend kind '" + kind + "'");
    }
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  } catch (const ConnectionError& e) {
    throw BackendUnavailable(e.what());
  } catch (const TimeoutError& e) {
    throw BackendUnavailable(e.what());
  }

  if (!cfg.vocab.empty()) {
    try {
      b.tokenizer = load_vocab_tokenizer(cfg.vocab);
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  } else if (auto strings = b.source->token_strings(); !strings.empty()) {
    b.tokenizer = vocab_from_strings(strings, static_cast<TokenId>(strings.size()));
  }
  if (b.tokenizer) {
    auto tag = b.tokenizer->encode(cfg.end_tag_text);
    const bool known = std::all_of(tag.begin(), tag.end(), [&](TokenId id) {
      return id != b.tokenizer->unknown_id() &&
             static_cast<std::size_t>(id) < b.source->vocab_size();
    });
    if (known) b.end_tag = std::move(tag);
  }
  return b;
}

namespace {

std::vector<TokenId> encode_prompt(const Backend& b, const Problem& p) {
  if (p.prompt.empty()) return {};
  if (!b.tokenizer) throw ConfigError("problem '" + p.id + "' has a prompt but no tokenizer");
  auto ids = b.tokenizer->encode(p.prompt);
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= b.source->vocab_size()) {
      throw ConfigError("prompt of '" + p.id + "' has characters outside the vocabulary");
    }
  }
  return ids;
}

EvalRecord judge(const Backend& b, const Problem& p, const EpisodeResult& r) {
  if (!p.gold.empty() && b.tokenizer) {
    return judge_trace(p.id, b.tokenizer->decode(r.tokens), p.gold, p.mode, r.length,
                       r.think_closed, r.budget_exhausted);
  }
  EvalRecord rec;
  rec.problem_id = p.id;
  rec.gold = p.gold;
  rec.correct = r.success;
  rec.gen_tokens = r.length;
  rec.think_closed = r.think_closed;
  rec.hit_length_limit = r.budget_exhausted;
  return rec;
}

ControllerSettings settings_for(const ExperimentConfig& cfg) {
  ControllerSettings s = cfg.controllers;
  if (!cfg.lexicon.empty()) {
    try {
      s.lexicon = load_lexicon(cfg.lexicon);
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  }
  return s;
}

TokenizerAdapter require_tokenizer(const Backend& b, std::string_view why) {
  if (!b.tokenizer) {
    throw ConfigError(std::string(why) + " needs a tokenizer: use a backend with a vocabulary "
                                         "or set run.vocab");
  }
  return b.tokenizer->adapter();
}

}  // namespace

json RunManifest::to_json() const {
  json traces = json::object();
  for (const auto& [id, path] : trace_paths) traces[id] = path.string();
  return {{"config", config_toml},
          {"tool_version", tool_version},
          {"timestamp", timestamp},
          {"controller", controller},
          {"dataset", dataset},
          {"records", records_path.string()},
          {"summary_csv", summary_path.string()},
          {"traces", traces},
          {"problem_ids", problem_ids},
          {"summary",
           {{"n", summary.n},
            {"accuracy", summary.accuracy},
            {"mean_length", summary.mean_length},
            {"boxed_rate", summary.boxed_rate},
            {"closed_think_rate", summary.closed_think_rate},
            {"length_hit_rate", summary.length_hit_rate}}}};
}

RunManifest RunManifest::from_json(const json& j) {
  try {
    RunManifest m;
    m.config_toml = j.at("config").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.controller = j.at("controller").get<std::string>();
    m.dataset = j.at("dataset").get<std::string>();
    m.records_path = j.at("records").get<std::string>();
    m.summary_path = j.at("summary_csv").get<std::string>();
    for (const auto& [id, path] : j.at("traces").items()) {
      m.trace_paths.emplace_back(id, path.get<std::string>());
    }
    m.problem_ids = j.at("problem_ids").get<std::vector<std::string>>();
    const auto& s = j.at("summary");
    m.summary.n = s.at("n").get<std::size_t>();
    m.summary.accuracy = s.at("accuracy").get<double>();
    m.summary.mean_length = s.at("mean_length").get<double>();
    m.summary.boxed_rate = s.at("boxed_rate").get<double>();
    m.summary.closed_think_rate = s.at("closed_think_rate").get<double>();
    m.summary.length_hit_rate = s.at("length_hit_rate").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
}

RunManifest RunManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  try {
    auto m = from_json(json::parse(in));
    m.out_dir = path.parent_path();
    return m;
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto problems = load_problems(cfg.problems);
  if (problems.empty()) throw ConfigError("problem file " + cfg.problems.string() + " is empty");
  const auto settings = settings_for(cfg);

  Backend backend = open_backend(cfg);
  std::unique_ptr<Controller> controller;
  if (cfg.controller == "original") {
    controller = std::make_unique<OriginalController>();
  } else {
    controller = make_controller(cfg.controller, require_tokenizer(backend, cfg.controller),
                                 backend.end_tag, settings);
  }
  spdlog::info("run: {} problems, backend {}, controller {}", problems.size(), cfg.backend,
               controller->name());

  std::vector<EpisodeSpec> specs;
  for (const auto& p : problems) {
    specs.push_back({encode_prompt(backend, p), {}, backend.end_tag, cfg.trace});
  }
  std::vector<EpisodeResult> results;
  try {
    results = run_batch(*backend.source, *controller, cfg.sampler, specs, cfg.jobs);
  } catch (const ConnectionError& e) {
    throw BackendUnavailable(e.what());
  } catch (const TimeoutError& e) {
    throw BackendUnavailable(e.what());
  }

  std::vector<EvalRecord> records;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    records.push_back(judge(backend, problems[i], results[i]));
  }

  fs::create_directories(cfg.out_dir);
  RunManifest m;
  m.config_toml = cfg.to_toml();
  m.tool_version = std::string(kToolVersion);
  m.timestamp = utc_timestamp();
  m.controller = cfg.controller;
  m.dataset = cfg.dataset;
  m.out_dir = cfg.out_dir;
  m.records_path = "records.jsonl";
  m.summary_path = "summary.csv";
  m.summary = score(records);
  for (const auto& p : problems) m.problem_ids.push_back(p.id);

  std::string lines;
  for (const auto& r : records) lines += to_json(r).dump() + "\n";
  write_file(cfg.out_dir / m.records_path, lines);
  write_file(cfg.out_dir / m.summary_path,
             summary_csv_header() + "\n" + summary_csv_row(cfg.controller, cfg.dataset, m.summary) +
                 "\n");
  write_file(cfg.out_dir / "config.toml", m.config_toml);
  if (cfg.trace) {
    fs::create_directories(cfg.out_dir / "traces");
    for (std::size_t i = 0; i < problems.size(); ++i) {
      fs::path rel = fs::path("traces") / (safe_file_stem(problems[i].id) + ".jsonl");
      std::string body;
      for (const auto& t : results[i].traces) body += to_jsonl(t) + "\n";
      write_file(cfg.out_dir / rel, body);
      m.trace_paths.emplace_back(problems[i].id, rel);
    }
  }
  write_file(cfg.out_dir / "manifest.json", m.to_json().dump(2) + "\n");
  spdlog::info("run: accuracy {:.4f}, mean length {:.1f}", m.summary.accuracy,
               m.summary.mean_length);
  return m;
}

std::vector<ComparisonRow> compare_runs(const std::vector<RunManifest>& manifests) {
  if (manifests.size() < 2) throw ConfigError("compare needs at least two manifests");
  auto ids_of = [](const RunManifest& m) {
    return std::set<std::string>(m.problem_ids.begin(), m.problem_ids.end());
  };
  const auto reference = ids_of(manifests.front());
  std::vector<ComparisonRow> rows;
  for (const auto& m : manifests) {
    if (ids_of(m) != reference) {
      throw MismatchedProblemSets("run '" + m.controller + "' covers a different problem set");
    }
    ComparisonRow row{m.controller, m.summary.accuracy, m.summary.mean_length};
    row.delta_accuracy = m.summary.accuracy - manifests.front().summary.accuracy;
    row.delta_length = m.summary.mean_length - manifests.front().summary.mean_length;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_table(const std::vector<ComparisonRow>& rows) {
  std::string out = "method,accuracy,mean_length,delta_accuracy,delta_length\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), ",%.6f,%.3f,%+.6f,%+.3f\n", r.accuracy, r.mean_length,
                  r.delta_accuracy, r.delta_length);
    out += r.method + buf;
  }
  return out;
}

std::vector<PrefixRecord> run_prefix_diagnostics(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto problems = load_problems(cfg.problems);
  const auto settings = settings_for(cfg);
  Backend backend = open_backend(cfg);
  const auto tok = require_tokenizer(backend, "prefix diagnostics");
  const auto markers = resolve_markers(settings.lexicon, tok);

  InterventionConfig icfg = cfg.diagnostics;
  icfg.forced_markers.clear();
  for (const auto& form : cfg.forced_marker_forms) {
    auto spaced = resolve_token_group({" " + form}, tok);
    auto ids = spaced.empty() ? resolve_token_group({form}, tok) : spaced;
    if (ids.empty()) throw ConfigError("forced marker '" + form + "' is not a single token");
    icfg.forced_markers.push_back(ids.front());
  }

  std::vector<PrefixRecord> all;
  std::string lines;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto& p = problems[i];
    DiagnosticContext ctx{encode_prompt(backend, p), backend.end_tag,
                          derive_seed(cfg.sampler.seed, i)};
    CorrectnessOracle oracle = [&](const EpisodeResult& r) {
      return judge(backend, p, r).correct;
    };
    std::vector<PrefixRecord> prefixes;
    try {
      prefixes = collect_prefixes(*backend.source, cfg.sampler, markers, icfg, ctx);
    } catch (const NoPrefixFound&) {
      spdlog::warn("diagnose: no qualifying prefix for problem '{}'", p.id);
      continue;
    }
    for (auto& prefix : prefixes) {
      auto rec = estimate_values(std::move(prefix), *backend.source, cfg.sampler, oracle, icfg, ctx);
      auto j = to_json(rec);
      j["problem_id"] = p.id;
      lines += j.dump() + "\n";
      all.push_back(std::move(rec));
    }
  }
  fs::create_directories(cfg.out_dir);
  write_file(cfg.out_dir / "prefixes.jsonl", lines);
  write_file(cfg.out_dir / "states.csv", state_summary_csv(summarize_states(all, cfg.dataset)));
  return all;
}

std::vector<SweepRow> run_suppression_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto problems = load_problems(cfg.problems);
  Backend backend = open_backend(cfg);
  const auto tok = require_tokenizer(backend, "suppression sweep");

  std::vector<SweepVariant> variants;
  std::vector<std::string> all_forms;
  for (const auto& [name, forms] : suppression_groups()) {
    all_forms.insert(all_forms.end(), forms.begin(), forms.end());
  }
  auto variant = [&](std::string name, const std::vector<std::string>& forms) {
    variants.push_back({std::move(name),
                        SuppressionConfig{resolve_token_group(forms, tok),
                                          cfg.controllers.suppress_penalty,
                                          cfg.controllers.suppress_think_only}});
  };
  variant("suppress:all", all_forms);
  for (const auto& [name, forms] : suppression_groups()) variant("suppress:" + name, forms);

  std::vector<EpisodeSpec> specs;
  for (const auto& p : problems) specs.push_back({encode_prompt(backend, p), {}, backend.end_tag});
  ProblemOracle oracle = [&](std::size_t i, const EpisodeResult& r) {
    return judge(backend, problems[i], r).correct;
  };
  auto rows = suppression_sweep(*backend.source, cfg.sampler, variants, oracle, specs, cfg.jobs);

  fs::create_directories(cfg.out_dir);
  std::string csv = "variant,accuracy,mean_length\n";
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), ",%.6f,%.3f\n", r.accuracy, r.mean_length);
    csv += r.variant + buf;
  }
  write_file(cfg.out_dir / "sweep.csv", csv);
  return rows;
}

}  // namespace pathcal
