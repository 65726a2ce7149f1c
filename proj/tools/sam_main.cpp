#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "sam/bench.hpp"
#include "sam/detector.hpp"
#include "sam/factor_models.hpp"
#include "sam/frontend.hpp"
#include "sam/repair.hpp"
#include "sam/rng.hpp"
#include "sam/usage_ir.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitIo = 4;
constexpr int kExitUnrepairable = 5;

struct CliError {
  int code;
  std::string message;
};

// Options resolved from flags > config file > built-in defaults.
struct Options {
  std::optional<std::string> theta;
  std::vector<std::string> theta_overrides;  // "Factor=0.05"
  std::optional<std::size_t> max_length;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> format;
};

struct RunConfig {
  sam::Thresholds thresholds;
  std::size_t max_length = 3;
  std::size_t k = 3;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  bool machine = false;
};

void add_common_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--theta,-t", opt.theta, "detection threshold in (0,1), e.g. 0.1");
  cmd->add_option("--theta-override", opt.theta_overrides,
                  "per-factor threshold, e.g. Exception=0.05 (repeatable)");
  cmd->add_option("--max-length,-L", opt.max_length, "maximum edit-script length");
  cmd->add_option("--actions,-k", opt.k, "actions generated per finding");
  cmd->add_option("--seed,-s", opt.seed, "random seed");
  cmd->add_option("--jobs,-j", opt.jobs, "worker threads");
  cmd->add_option("--format,-f", opt.format, "output format: text or machine")
      ->check(CLI::IsMember({"text", "machine"}));
}

json load_config_file() {
  const char* path = std::getenv("SAM_CONFIG");
  if (!path || !*path) return json::object();
  std::ifstream in(path);
  if (!in) throw CliError{kExitIo, std::string("cannot read config file ") + path};
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CliError{kExitUsage, std::string("bad config file ") + path + ": " + e.what()};
  }
}

RunConfig resolve_config(const Options& opt) {
  json cfg = load_config_file();
  RunConfig rc;

  auto cfg_str = [&cfg](const char* key) -> std::optional<std::string> {
    if (cfg.contains(key) && cfg[key].is_string()) return cfg[key].get<std::string>();
    return std::nullopt;
  };
  auto cfg_uint = [&cfg](const char* key) -> std::optional<std::uint64_t> {
    if (cfg.contains(key) && cfg[key].is_number_unsigned()) return cfg[key].get<std::uint64_t>();
    return std::nullopt;
  };

  try {
    std::string theta = opt.theta ? *opt.theta : cfg_str("theta").value_or("0.1");
    rc.thresholds = sam::Thresholds::from_decimal(theta);
    if (cfg.contains("theta_overrides") && cfg["theta_overrides"].is_object()) {
      for (auto& [name, value] : cfg["theta_overrides"].items()) {
        auto factor = sam::parse_factor(name);
        if (!factor) throw CliError{kExitUsage, "unknown factor '" + name + "' in config"};
        rc.thresholds.set_override(*factor, value.get<std::string>());
      }
    }
    for (const std::string& ov : opt.theta_overrides) {
      auto eq = ov.find('=');
      if (eq == std::string::npos) {
        throw CliError{kExitUsage, "expected FACTOR=VALUE in --theta-override: " + ov};
      }
      auto factor = sam::parse_factor(ov.substr(0, eq));
      if (!factor) throw CliError{kExitUsage, "unknown factor '" + ov.substr(0, eq) + "'"};
      rc.thresholds.set_override(*factor, ov.substr(eq + 1));
    }
  } catch (const sam::InvalidThreshold& e) {
    throw CliError{kExitUsage, e.what()};
  }

  rc.max_length = opt.max_length ? *opt.max_length : std::size_t(cfg_uint("max_length").value_or(3));
  rc.k = opt.k ? *opt.k : std::size_t(cfg_uint("k").value_or(3));
  if (rc.k < 1) throw CliError{kExitUsage, "k must be >= 1"};
  rc.seed = opt.seed ? *opt.seed : cfg_uint("seed").value_or(1);
  rc.jobs = opt.jobs ? *opt.jobs : std::size_t(cfg_uint("jobs").value_or(1));
  if (rc.jobs < 1) rc.jobs = 1;
  std::string format = opt.format ? *opt.format : cfg_str("format").value_or("text");
  rc.machine = format == "machine";
  return rc;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitIo, "cannot read " + path.string()};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kExitIo, "cannot write " + path.string()};
  out << content;
}

// Parses one .mj or .ir file into usage sequences.
std::vector<sam::UsageSequence> load_sequences(const fs::path& path) {
  std::string text = read_file(path);
  if (path.extension() == ".ir") {
    sam::UsageSequence seq = sam::read_ir(text);
    if (auto err = sam::validate(seq)) {
      throw CliError{kExitParse, path.string() + ": invalid sequence at event " +
                                     std::to_string(err->position)};
    }
    return {seq};
  }
  sam::ParseResult parsed = sam::parse(text, path.string());
  if (!parsed.unit) {
    std::ostringstream msg;
    msg << path.string() << ": ";
    for (std::size_t i = 0; i < parsed.diagnostics.size(); ++i) {
      const sam::Diagnostic& d = parsed.diagnostics[i];
      if (i) msg << "; ";
      msg << d.line << ":" << d.col << " " << d.message;
    }
    throw CliError{kExitParse, msg.str()};
  }
  try {
    return sam::lower(*parsed.unit);
  } catch (const sam::LowerError& e) {
    throw CliError{kExitParse, path.string() + ": " + e.what()};
  }
}

std::vector<fs::path> corpus_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CliError{kExitUsage, dir.string() + " is not a directory"};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension();
    if (ext == ".mj" || ext == ".ir") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw CliError{kExitUsage, "no .mj or .ir files in " + dir.string()};
  return files;
}

json finding_json(const sam::Finding& f) {
  return json{{"source", f.source_id},
              {"call_index", f.call_index},
              {"method", f.method.encode()},
              {"factor", sam::factor_name(f.factor)},
              {"p", f.probability.decimal6()},
              {"theta", f.threshold_text}};
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const std::string& corpus_dir, const std::string& out_path, bool skip_bad,
              const RunConfig& rc) {
  std::vector<fs::path> files = corpus_files(corpus_dir);

  std::size_t shards = std::min<std::size_t>(rc.jobs, files.size());
  std::vector<sam::ModelBundle> bundles(shards);
  std::vector<std::vector<std::string>> skipped(shards);
  std::vector<std::optional<CliError>> errors(shards);

  auto run_shard = [&](std::size_t shard) {
    for (std::size_t i = shard; i < files.size(); i += shards) {
      try {
        for (const sam::UsageSequence& seq : load_sequences(files[i])) {
          sam::train_into(bundles[shard], seq);
        }
      } catch (const CliError& e) {
        if (skip_bad && e.code == kExitParse) {
          skipped[shard].push_back(files[i].string());
        } else if (!errors[shard]) {
          errors[shard] = e;
        }
      }
    }
  };

  if (shards <= 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < shards; ++t) threads.emplace_back(run_shard, t);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) throw *e;
  }

  sam::ModelBundle bundle = bundles[0];
  for (std::size_t s = 1; s < shards; ++s) bundle = sam::merge(bundle, bundles[s]);

  std::ostringstream sink;
  sam::save(bundle, sink);
  write_file(out_path, sink.str());

  std::vector<std::string> all_skipped;
  for (const auto& s : skipped) all_skipped.insert(all_skipped.end(), s.begin(), s.end());
  std::sort(all_skipped.begin(), all_skipped.end());
  for (const std::string& s : all_skipped) std::cerr << "skipped " << s << "\n";

  std::cout << "sequences " << bundle.trained_sequences << "\n";
  std::cout << "unigram entries " << bundle.unigram.size() << "\n";
  std::cout << "temporal entries " << bundle.temporal.size() << "\n";
  std::cout << "precondition entries " << bundle.precondition.size() << "\n";
  std::cout << "postcondition entries " << bundle.postcondition.size() << "\n";
  std::cout << "argvalue entries " << bundle.argvalue.size() << "\n";
  std::cout << "exception entries " << bundle.exception.size() << "\n";
  std::cout << "model written to " << out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

sam::ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitIo, "cannot read model " + path};
  try {
    return sam::load(in);
  } catch (const std::exception& e) {
    throw CliError{kExitIo, path + ": " + e.what()};
  }
}

int cmd_detect(const std::string& model_path, const std::vector<std::string>& inputs,
               const RunConfig& rc) {
  sam::ModelBundle bundle = load_model(model_path);
  std::vector<sam::Finding> all;
  for (const std::string& input : inputs) {
    for (const sam::UsageSequence& seq : load_sequences(input)) {
      std::vector<sam::Finding> findings = sam::detect(bundle, seq, rc.thresholds);
      all.insert(all.end(), findings.begin(), findings.end());
    }
  }
  if (rc.machine) {
    json out = json::array();
    for (const sam::Finding& f : all) out.push_back(finding_json(f));
    std::cout << out.dump() << "\n";
  } else {
    for (const sam::Finding& f : all) std::cout << sam::format_finding(f) << "\n";
  }
  return all.empty() ? kExitOk : kExitFindings;
}

// ---------------------------------------------------------------------------
// repair
// ---------------------------------------------------------------------------

int cmd_repair(const std::string& model_path, const std::string& input, std::size_t top,
               const RunConfig& rc) {
  sam::ModelBundle bundle = load_model(model_path);
  bool any_repaired = false;
  bool any_unrepairable = false;
  json machine_out = json::array();

  for (const sam::UsageSequence& seq : load_sequences(input)) {
    bool clean = sam::detect(bundle, seq, rc.thresholds).empty();
    sam::RepairResult result = sam::correct(bundle, seq, rc.thresholds, rc.max_length, rc.k);
    std::string status = clean ? "clean" : result.candidates.empty() ? "unrepairable" : "repaired";
    if (!clean && result.candidates.empty()) any_unrepairable = true;
    if (!clean && !result.candidates.empty()) any_repaired = true;

    if (rc.machine) {
      json entry{{"source", seq.source_id},
                 {"status", status},
                 {"explored", result.explored},
                 {"candidates", json::array()}};
      for (std::size_t i = 0; i < result.candidates.size() && i < top; ++i) {
        const sam::RepairCandidate& c = result.candidates[i];
        json edits = json::array();
        for (const sam::RepairAction& a : c.edits) edits.push_back(a.encode());
        char geo[32];
        std::snprintf(geo, sizeof geo, "%.6f", c.geomean);
        entry["candidates"].push_back(json{{"edits", edits},
                                           {"edit_count", c.edits.size()},
                                           {"geomean", geo},
                                           {"source", sam::render(c.repaired)}});
      }
      machine_out.push_back(std::move(entry));
      continue;
    }

    std::cout << seq.source_id << ": " << (clean ? "no misuse detected" : status) << "\n";
    if (clean) continue;
    for (std::size_t i = 0; i < result.candidates.size() && i < top; ++i) {
      const sam::RepairCandidate& c = result.candidates[i];
      char geo[32];
      std::snprintf(geo, sizeof geo, "%.6f", c.geomean);
      std::cout << "candidate " << (i + 1) << ": edits=" << c.edits.size() << " geomean=" << geo
                << "\n";
      std::cout << sam::format_script(c.edits);
      std::cout << sam::render(c.repaired);
    }
  }

  if (rc.machine) std::cout << machine_out.dump() << "\n";
  if (any_unrepairable) return kExitUnrepairable;
  return any_repaired ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------------------
// gen / eval
// ---------------------------------------------------------------------------

std::string case_dir_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "case_%04zu", index);
  return buf;
}

int cmd_gen(const std::string& out_dir, std::size_t corpus_n, std::size_t total,
            const RunConfig& rc) {
  const auto& patterns = sam::pattern_library();
  fs::create_directories(out_dir);

  std::vector<sam::UsageSequence> corpus = sam::gen_corpus(patterns, corpus_n, rc.seed);
  fs::path corpus_dir = fs::path(out_dir) / "corpus";
  fs::create_directories(corpus_dir);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "corpus_%04zu.mj", i);
    write_file(corpus_dir / name, sam::render(corpus[i]));
  }
  std::cout << "corpus " << corpus.size() << " sequences in " << corpus_dir.string() << "\n";

  if (total == 0) return kExitOk;

  sam::ModelBundle bundle = sam::train(corpus);
  sam::Benchmark bench = sam::make_benchmark(patterns, total, sam::derive_seed(rc.seed, 0xBE),
                                             bundle, rc.thresholds, rc.k);
  fs::path cases_dir = fs::path(out_dir) / "cases";
  fs::create_directories(cases_dir);
  std::array<std::size_t, sam::kCategoryCount> split{};
  for (std::size_t i = 0; i < bench.cases.size(); ++i) {
    const sam::MisuseCase& c = bench.cases[i];
    fs::path dir = cases_dir / case_dir_name(i);
    fs::create_directories(dir);
    write_file(dir / "clean.mj", sam::render(c.clean));
    write_file(dir / "faulty.mj", sam::render(c.faulty));
    write_file(dir / "truth.edits", sam::format_script(c.ground_truth));
    std::ostringstream meta;
    meta << "category " << sam::category_name(c.category) << "\n";
    meta << "pattern " << c.pattern_id << "\n";
    meta << "flag " << c.flag_index << "\n";
    meta << "seed " << c.case_seed << "\n";
    write_file(dir / "meta", meta.str());
    ++split[std::size_t(c.category)];
  }
  std::cout << "cases " << bench.cases.size() << " in " << cases_dir.string() << "\n";
  for (int i = 0; i < sam::kCategoryCount; ++i) {
    std::cout << sam::category_name(sam::Category(i)) << " " << split[i] << "\n";
  }
  std::cout << "rejected " << bench.rejected << "\n";
  return kExitOk;
}

std::map<std::string, std::string> read_meta(const fs::path& path) {
  std::map<std::string, std::string> meta;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    auto space = line.find(' ');
    if (space != std::string::npos) meta[line.substr(0, space)] = line.substr(space + 1);
  }
  return meta;
}

std::vector<sam::MisuseCase> load_cases(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CliError{kExitUsage, dir.string() + " is not a directory"};
  std::vector<fs::path> case_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) case_dirs.push_back(entry.path());
  }
  std::sort(case_dirs.begin(), case_dirs.end());
  std::vector<sam::MisuseCase> cases;
  for (const fs::path& cd : case_dirs) {
    std::map<std::string, std::string> meta = read_meta(cd / "meta");
    auto category = sam::parse_category(meta["category"]);
    if (!category) throw CliError{kExitIo, cd.string() + ": bad category in meta"};
    sam::MisuseCase c;
    c.category = *category;
    c.pattern_id = meta["pattern"];
    c.flag_index = std::stoull(meta["flag"]);
    c.case_seed = std::stoull(meta["seed"]);
    auto clean = load_sequences(cd / "clean.mj");
    auto faulty = load_sequences(cd / "faulty.mj");
    if (clean.size() != 1 || faulty.size() != 1) {
      throw CliError{kExitIo, cd.string() + ": expected one method per case file"};
    }
    c.clean = clean[0];
    c.faulty = faulty[0];
    c.ground_truth = sam::parse_script(read_file(cd / "truth.edits"));
    cases.push_back(std::move(c));
  }
  if (cases.empty()) throw CliError{kExitUsage, "no cases under " + dir.string()};
  return cases;
}

int cmd_eval(const std::string& cases_dir, const std::string& model_path, std::size_t corpus_n,
             std::size_t total, const RunConfig& rc) {
  auto started = std::chrono::steady_clock::now();
  sam::EvalMetrics metrics;
  std::uint64_t rejected = 0;

  if (!cases_dir.empty()) {
    if (model_path.empty()) {
      throw CliError{kExitUsage, "--cases requires --model"};
    }
    sam::ModelBundle bundle = load_model(model_path);
    std::vector<sam::MisuseCase> cases = load_cases(cases_dir);
    metrics = sam::evaluate(bundle, cases, rc.thresholds, rc.max_length, rc.k, rc.jobs);
  } else {
    const auto& patterns = sam::pattern_library();
    std::vector<sam::UsageSequence> corpus = sam::gen_corpus(patterns, corpus_n, rc.seed);
    sam::ModelBundle bundle = sam::train(corpus);
    sam::Benchmark bench = sam::make_benchmark(patterns, total, sam::derive_seed(rc.seed, 0xBE),
                                               bundle, rc.thresholds, rc.k);
    rejected = bench.rejected;
    metrics = sam::evaluate(bundle, bench.cases, rc.thresholds, rc.max_length, rc.k, rc.jobs);
  }

  if (rc.machine) {
    std::cout << metrics.render_json() << "\n";
  } else {
    std::cout << metrics.render_text();
    std::cout << "rejected " << rejected << "\n";
  }
  auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  std::cerr << "eval took " << elapsed.count() << " ms\n";
  return kExitOk;
}

int cmd_ir(const std::string& input) {
  for (const sam::UsageSequence& seq : load_sequences(input)) {
    std::cout << sam::write_ir(seq);
  }
  return kExitOk;
}

}  // namespace

namespace {

int run_cli(int argc, char** argv) {
  CLI::App app{"statistical API-misuse detection and repair"};
  app.require_subcommand(1);

  Options opt;

  std::string corpus_dir, out_path;
  bool skip_bad = false;
  CLI::App* train = app.add_subcommand("train", "train factor models from a corpus directory");
  train->add_option("corpus", corpus_dir, "directory of .mj / .ir files")->required();
  train->add_option("--out,-o", out_path, "model output path")->required();
  train->add_flag("--skip-bad", skip_bad, "skip files that fail to parse");
  add_common_flags(train, opt);

  std::string model_path;
  std::vector<std::string> inputs;
  CLI::App* detect = app.add_subcommand("detect", "flag low-probability call factors");
  detect->add_option("--model,-m", model_path, "trained model file")->required();
  detect->add_option("inputs", inputs, "source files to check")->required();
  add_common_flags(detect, opt);

  std::string repair_input;
  std::size_t top = 3;
  CLI::App* repair = app.add_subcommand("repair", "search for edits that remove all findings");
  repair->add_option("--model,-m", model_path, "trained model file")->required();
  repair->add_option("input", repair_input, "source file to repair")->required();
  repair->add_option("--top", top, "candidates to print");
  add_common_flags(repair, opt);

  std::string gen_out;
  std::size_t corpus_n = 500, total = 144;
  CLI::App* gen = app.add_subcommand("gen", "generate a training corpus and misuse benchmark");
  gen->add_option("--out,-o", gen_out, "output directory")->required();
  gen->add_option("--corpus", corpus_n, "training sequences to generate");
  gen->add_option("--total", total, "benchmark cases to generate (0 = corpus only)");
  add_common_flags(gen, opt);

  std::string cases_dir;
  CLI::App* eval = app.add_subcommand("eval", "score detection and repair on a benchmark");
  eval->add_option("--cases", cases_dir, "benchmark cases directory (else generated in-memory)");
  eval->add_option("--model,-m", model_path, "trained model (with --cases)");
  eval->add_option("--corpus", corpus_n, "training sequences for in-memory evaluation");
  eval->add_option("--total", total, "benchmark cases for in-memory evaluation");
  add_common_flags(eval, opt);

  std::string ir_input;
  CLI::App* ir = app.add_subcommand("ir", "dump the lowered usage IR of a source file");
  ir->add_option("input", ir_input, "source file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    RunConfig rc = resolve_config(opt);
    if (train->parsed()) return cmd_train(corpus_dir, out_path, skip_bad, rc);
    if (detect->parsed()) return cmd_detect(model_path, inputs, rc);
    if (repair->parsed()) return cmd_repair(model_path, repair_input, top, rc);
    if (gen->parsed()) return cmd_gen(gen_out, corpus_n, total, rc);
    if (eval->parsed()) return cmd_eval(cases_dir, model_path, corpus_n, total, rc);
    if (ir->parsed()) return cmd_ir(ir_input);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (...) {
    std::cerr << "error: unknown failure\n";
    return kExitIo;
  }
}
