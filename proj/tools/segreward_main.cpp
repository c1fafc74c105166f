// Command-line surface: reward scoring, desk-scale GRPO training runs,
// oracle checks and segmentation metric reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "segreward/config.hpp"
#include "segreward/errors.hpp"
#include "segreward/oracles.hpp"
#include "segreward/scoring.hpp"
#include "segreward/train.hpp"
#include "segreward/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace segreward;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitInternalError = 2;

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw EngineError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

// Accepts a key=value config file or a manifest.json produced by a previous
// run (replay path).
TrainConfig load_config_any(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json manifest = json::parse(text, nullptr, false);
    if (manifest.is_discarded() || !manifest.contains("config"))
      throw InvalidConfigError("manifest at " + path + " lacks a config block");
    TrainConfig config;
    for (const auto& [key, value] : manifest["config"].items())
      apply_override(config, key, value.get<std::string>());
    return config;
  }
  return parse_train_config(text);
}

std::string manifest_text(const std::string& command, const TrainConfig& config,
                          const std::vector<std::pair<std::string, std::string>>& outputs) {
  json j;
  j["command"] = command;
  j["engine_version"] = kEngineVersion;
  j["seed"] = config.seed;
  json cfg = json::object();
  for (const auto& [key, value] : config_to_map(config)) cfg[key] = value;
  j["config"] = cfg;
  json outs = json::object();
  for (const auto& [key, value] : outputs) outs[key] = value;
  j["outputs"] = outs;
  return j.dump(2) + "\n";
}

int cmd_score(const std::string& input_path, const std::string& config_path,
              const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
  TrainConfig config;
  if (!config_path.empty()) config = load_config_any(config_path);
  if (seed_override) config.seed = *seed_override;

  std::ifstream in(input_path);
  if (!in) {
    std::cerr << "error: cannot open input " << input_path << "\n";
    return kExitInputError;
  }
  std::vector<ScoreGroup> groups;
  std::string error;
  if (!read_score_stream(in, groups, error)) {
    std::cerr << "error: " << error << "\n";
    return kExitInputError;
  }

  std::vector<ScoredGroup> scored;
  std::string records_jsonl;
  for (const ScoreGroup& group : groups) {
    ScoredGroup sg = score_group(group, config.reward, config.grpo);
    for (std::size_t i = 0; i < sg.breakdowns.size(); ++i) {
      const RewardBreakdown& b = sg.breakdowns[i];
      if (b.format == 0.0)
        std::cerr << "warning: line " << group.samples[i].line
                  << ": first pass did not parse; breakdown is all zeros\n";
      json rec;
      rec["line"] = group.samples[i].line;
      rec["reward"] = json::parse(breakdown_to_json(b));
      if (!sg.advantages.empty()) rec["advantage"] = sg.advantages[i];
      records_jsonl += rec.dump() + "\n";
    }
    scored.push_back(std::move(sg));
  }
  ScoreSummary summary = summarize_scores(scored);
  std::string summary_json = summary_to_json(summary);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "scores.jsonl", records_jsonl);
    write_file_atomic(fs::path(out_dir) / "summary.json", summary_json + "\n");
    write_file_atomic(fs::path(out_dir) / "manifest.json",
                      manifest_text("score", config,
                                    {{"scores", "scores.jsonl"}, {"summary", "summary.json"}}));
  } else {
    std::cout << records_jsonl;
  }
  std::cout << summary_json << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override, std::optional<int> steps_override) {
  TrainConfig config;
  if (!config_path.empty()) config = load_config_any(config_path);
  if (seed_override) config.seed = *seed_override;
  if (steps_override) config.steps = *steps_override;

  fs::create_directories(out_dir);
  std::string trace;
  TrainResult result = train(config, [&trace](int step, const RolloutGroup& group) {
    trace += group_to_trace_line(step, group);
    trace += "\n";
  });

  write_file_atomic(fs::path(out_dir) / "metrics.csv", metrics_csv(result.timeline));
  write_file_atomic(fs::path(out_dir) / "trace.jsonl", trace);
  write_file_atomic(fs::path(out_dir) / "manifest.json",
                    manifest_text("train", config,
                                  {{"metrics", "metrics.csv"}, {"trace", "trace.jsonl"}}));

  auto print_row = [](const char* label, const StepMetrics& m) {
    std::printf(
        "%s step=%d mean_total=%.4f mean_acc=%.4f acc_rate=%.4f mean_n1=%.2f mean_n2=%.2f "
        "answer_entropy=%.4f\n",
        label, m.step, m.mean_total, m.mean_acc, m.acc_rate, m.mean_n1, m.mean_n2,
        m.answer_entropy);
  };
  print_row("initial", result.initial);
  print_row("final", result.timeline.empty() ? result.initial : result.timeline.back());
  return kExitOk;
}

int cmd_oracle(const std::string& suite, std::uint64_t seed, int count) {
  OracleReport report = run_oracle_suite(suite, seed, count);
  std::printf("[%s] suite=%s instances=%d mismatches=%d max_error=%.6g\n",
              report.passed ? "PASS" : "FAIL", report.suite.c_str(), report.instances,
              report.mismatches, report.max_error);
  if (!report.passed && !report.detail.empty())
    std::printf("first failing instance: %s\n", report.detail.c_str());
  return report.passed ? kExitOk : kExitInternalError;
}

int cmd_eval(const std::string& predictions_path, const std::string& gt_path,
             const std::string& out_dir) {
  std::ifstream pred_in(predictions_path), gt_in(gt_path);
  if (!pred_in || !gt_in) {
    std::cerr << "error: cannot open input files\n";
    return kExitInputError;
  }

  struct EvalRecord {
    std::optional<std::string> id;
    BinaryMask mask;
    std::optional<double> tokens;
  };
  auto read_records = [](std::istream& in, bool want_tokens,
                         std::vector<EvalRecord>& out) -> std::string {
    std::string line;
    std::size_t line_no = 0;
    Tokenizer tokenizer;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object())
        return "line " + std::to_string(line_no) + ": not a JSON object";
      if (!j.contains("mask_b64"))
        return "line " + std::to_string(line_no) + ": missing mask_b64";
      EvalRecord rec;
      try {
        rec.mask = mask_from_base64(j["mask_b64"].get<std::string>());
      } catch (const std::exception& e) {
        return "line " + std::to_string(line_no) + ": " + e.what();
      }
      if (j.contains("id")) rec.id = j["id"].dump();
      if (want_tokens) {
        if (j.contains("tokens")) {
          rec.tokens = j["tokens"].get<double>();
        } else if (j.contains("think")) {
          rec.tokens = static_cast<double>(tokenizer.count(j["think"].get<std::string>()));
        }
      }
      out.push_back(std::move(rec));
    }
    return "";
  };

  std::vector<EvalRecord> preds, gts;
  if (std::string err = read_records(pred_in, true, preds); !err.empty()) {
    std::cerr << "error: predictions: " << err << "\n";
    return kExitInputError;
  }
  if (std::string err = read_records(gt_in, false, gts); !err.empty()) {
    std::cerr << "error: gt: " << err << "\n";
    return kExitInputError;
  }
  if (preds.size() != gts.size()) {
    std::cerr << "error: record count mismatch: " << preds.size() << " predictions vs "
              << gts.size() << " gt\n";
    return kExitInputError;
  }
  if (preds.empty()) {
    std::cerr << "error: no records\n";
    return kExitInputError;
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> per_image;
  double token_sum = 0.0;
  std::size_t token_count = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].id && gts[i].id && *preds[i].id != *gts[i].id) {
      std::cerr << "error: record " << (i + 1) << ": id mismatch\n";
      return kExitInputError;
    }
    if (preds[i].mask.width() != gts[i].mask.width() ||
        preds[i].mask.height() != gts[i].mask.height()) {
      std::cerr << "error: record " << (i + 1) << ": mask dimensions disagree\n";
      return kExitInputError;
    }
    per_image.push_back(mask_intersection_union(preds[i].mask, gts[i].mask));
    if (preds[i].tokens) {
      token_sum += *preds[i].tokens;
      ++token_count;
    }
  }
  SegMetrics metrics = seg_metrics(per_image);

  json report;
  report["images"] = preds.size();
  report["gIoU"] = metrics.giou;
  report["cIoU"] = metrics.ciou;
  if (token_count > 0) report["mean_tokens"] = token_sum / static_cast<double>(token_count);
  std::string text = report.dump();
  std::cout << text << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "eval.json", text + "\n");
    write_file_atomic(fs::path(out_dir) / "manifest.json",
                      manifest_text("eval", TrainConfig{}, {{"eval", "eval.json"}}));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward computation and desk-scale GRPO training engine for "
               "two-stage-rollout reasoning segmentation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, input_path, gt_path, suite;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::uint64_t oracle_seed = 1;
  int count = 1000;

  CLI::App* score = app.add_subcommand("score", "Score batch records (JSONL) with the reward stack");
  score->add_option("--input", input_path, "Input JSONL path")->required();
  score->add_option("--config", config_path, "Config file (key=value) or manifest.json");
  score->add_option("--out", out_dir, "Output directory");
  score->add_option("--seed", seed, "Seed override");

  CLI::App* train_cmd = app.add_subcommand("train", "Run the seeded GRPO training loop");
  train_cmd->add_option("--config", config_path, "Config file (key=value) or manifest.json");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_option("--seed", seed, "Seed override");
  train_cmd->add_option("--steps", steps, "Steps override");

  CLI::App* oracle = app.add_subcommand("oracle", "Run a brute-force comparison suite");
  oracle->add_option("--suite", suite, "matching | gradient | mask_iou | kl")->required();
  oracle->add_option("--seed", oracle_seed, "Suite seed");
  oracle->add_option("--count", count, "Instance count");

  CLI::App* eval = app.add_subcommand("eval", "gIoU / cIoU / token report for mask predictions");
  eval->add_option("--input", input_path, "Predictions JSONL")->required();
  eval->add_option("--gt", gt_path, "Ground-truth JSONL")->required();
  eval->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) return cmd_score(input_path, config_path, out_dir, seed);
    if (train_cmd->parsed()) return cmd_train(config_path, out_dir, seed, steps);
    if (oracle->parsed()) return cmd_oracle(suite, oracle_seed, count);
    if (eval->parsed()) return cmd_eval(input_path, gt_path, out_dir);
  } catch (const InvalidConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const EngineError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return kExitInputError;
}
