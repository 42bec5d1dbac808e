#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mlsimp/fileio.hpp"
#include "mlsimp/pipeline/io.hpp"
#include "mlsimp/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mlsimp;

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kIo = 3, kData = 4 };

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string input;
  std::string format;
  std::string output_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "INI configuration file");
  cmd->add_option("--set", c.overrides, "Override a configuration key, section.key=value")->take_all();
  cmd->add_option("-i,--input", c.input, "Input trajectories (overrides data.input)");
  cmd->add_option("-f,--format", c.format, "Input format csv|plt (overrides data.format)");
  cmd->add_option("-o,--output-dir", c.output_dir, "Output directory (overrides data.output_dir)");
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  apply_overrides(cfg, c.overrides);
  if (!c.input.empty()) cfg.input = c.input;
  if (!c.format.empty()) cfg.format = c.format;
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  return cfg;
}

TrajectoryDatabase load_input(const PipelineConfig& cfg, IngestReport* report = nullptr) {
  if (cfg.input.empty()) throw std::invalid_argument("no input given (data.input or --input)");
  return ingest(cfg.input, data_format_from_string(cfg.format), report);
}

fs::path out_path(const PipelineConfig& cfg, const std::string& name) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir / name;
}

void write_jsonl(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const std::string& l : lines) text += l + "\n";
  write_file_atomic(path, text);
}

std::string report_json(const IngestReport& r, const TrajectoryDatabase& db) {
  nlohmann::ordered_json j;
  j["trajectories"] = db.size();
  j["points"] = db.total_points();
  j["rows_read"] = r.rows_read;
  j["rows_skipped"] = r.rows_skipped;
  j["trajectories_dropped"] = r.trajectories_dropped;
  j["skipped_by_reason"] = r.skipped_by_reason;
  return j.dump(2);
}

int cmd_ingest(const Common& c, const std::string& output) {
  const PipelineConfig cfg = resolve(c);
  IngestReport r;
  const TrajectoryDatabase db = load_input(cfg, &r);
  if (!output.empty()) export_database(db, output, ExportFormat::Csv);
  std::cout << report_json(r, db) << "\n";
  return kOk;
}

int cmd_pretrain(const Common& c) {
  const PipelineConfig cfg = resolve(c);
  const TrajectoryDatabase db = load_input(cfg);
  const Projection proj = Projection::for_database(db);
  TBert model("tbert", cfg.tbert, CellVocabulary::build(db, proj, cfg.tbert.cell_m), cfg.mlm.seed);
  const auto corpus = featurize(model, db, proj);
  const auto epochs = pretrain_mlm(model, corpus, cfg.mlm);
  std::vector<std::string> lines;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    nlohmann::ordered_json j{{"stage", "mlm"}, {"epoch", e + 1}, {"loss", epochs[e].loss}, {"accuracy", epochs[e].accuracy}};
    lines.push_back(j.dump());
    std::cerr << lines.back() << "\n";
  }
  write_jsonl(out_path(cfg, "pretrain_log.jsonl"), lines);
  ad::save_checkpoint(out_path(cfg, "tbert.ckpt"), to_checkpoint(model, proj));
  return kOk;
}

int cmd_train(const Common& c, const std::string& tbert_path) {
  const PipelineConfig cfg = resolve(c);
  const TrajectoryDatabase db = load_input(cfg);
  Projection proj;
  TBert tbert;
  if (tbert_path.empty()) {
    proj = Projection::for_database(db);
    tbert = TBert("tbert", cfg.tbert, CellVocabulary::build(db, proj, cfg.tbert.cell_m), cfg.mlm.seed);
  } else {
    tbert = tbert_from_checkpoint(ad::load_checkpoint(tbert_path), &proj);
  }
  ImportanceModel gnn("gnn", cfg.gnn, tbert, cfg.ml.seed);
  DiffusionModel diff("diffts", cfg.diff, tbert, cfg.ml.seed + 1);
  const auto corpus = featurize(tbert, db, proj);
  const auto log = run_mutual_learning(gnn, diff, corpus, cfg.ml, &std::cerr);
  std::vector<std::string> lines;
  for (const MlLogRecord& r : log) lines.push_back(to_json_line(r));
  write_jsonl(out_path(cfg, "train_log.jsonl"), lines);
  ad::save_checkpoint(out_path(cfg, "gnn.ckpt"), to_checkpoint(gnn, proj));
  ad::save_checkpoint(out_path(cfg, "diff.ckpt"), to_checkpoint(diff, proj));
  return kOk;
}

void write_result(const PipelineConfig& cfg, const SimplifiedDatabase& s, const std::string& name,
                  const std::string& export_format) {
  const ExportFormat fmt = export_format_from_string(export_format);
  const fs::path path = out_path(cfg, name + (fmt == ExportFormat::Csv ? ".csv" : ".geojson"));
  export_database(s.database(), path, fmt);
  nlohmann::ordered_json j{{"output", path.string()},
                           {"original_points", s.original_points()},
                           {"retained_points", s.retained_points()},
                           {"compression_rate", s.compression_rate()}};
  std::cout << j.dump(2) << "\n";
}

int cmd_simplify(const Common& c, const std::string& model_path, const std::string& export_format) {
  const PipelineConfig cfg = resolve(c);
  const TrajectoryDatabase db = load_input(cfg);
  if (model_path.empty()) throw std::invalid_argument("simplify needs --model");
  Projection proj;
  ImportanceModel model = importance_model_from_checkpoint(ad::load_checkpoint(model_path), &proj);
  const SimplifyResult r = simplify(db, proj, model, cfg);
  write_result(cfg, r.simplified, "simplified", export_format);
  return kOk;
}

int cmd_baseline(const Common& c, const std::string& method, const std::string& kind,
                 const std::string& export_format) {
  const PipelineConfig cfg = resolve(c);
  const TrajectoryDatabase db = load_input(cfg);
  BaselineSpec spec;
  spec.method = baseline_method_from_string(method);
  spec.kind = error_kind_from_string(kind);
  spec.compression_rate = cfg.cr;
  spec.seed = cfg.seed;
  const SimplifiedDatabase s = run_baseline(db, Projection::for_database(db), spec);
  write_result(cfg, s, "baseline_" + method, export_format);
  return kOk;
}

int cmd_evaluate(const Common& c, const std::string& simplified_path, bool table) {
  const PipelineConfig cfg = resolve(c);
  const TrajectoryDatabase original = load_input(cfg);
  if (simplified_path.empty()) throw std::invalid_argument("evaluate needs --simplified");
  const TrajectoryDatabase sdb = parse_csv(read_file(simplified_path));
  const SimplifiedDatabase s = SimplifiedDatabase::from_subsequences(original, sdb);
  const Projection proj = Projection::for_database(original);
  EvaluationOptions opt;
  opt.index = cfg.index;
  const auto workloads = evaluation_workloads(original, proj, cfg.eval_queries, cfg.seed);
  const EvaluationReport r = evaluate(original, s, proj, workloads, opt);
  write_file_atomic(out_path(cfg, "evaluation.json"), to_json(r) + "\n");
  std::cout << (table ? to_table(r) : to_json(r) + "\n");
  return kOk;
}

int cmd_export(const Common& c, const std::string& export_format, const std::string& output) {
  const PipelineConfig cfg = resolve(c);
  const TrajectoryDatabase db = load_input(cfg);
  if (output.empty()) throw std::invalid_argument("export needs --output");
  export_database(db, output, export_format_from_string(export_format));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-driven trajectory simplification"};
  app.require_subcommand(1);

  Common common;
  std::string output, tbert_path, model_path, method = "top_down_E", kind = "ped", export_format = "csv";
  std::string simplified_path;
  bool table = false;

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse and validate trajectories, report skipped rows");
  add_common(ingest_cmd, common);
  ingest_cmd->add_option("--output", output, "Write the cleaned database as csv");

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Pretrain the trajectory encoder with masked cells");
  add_common(pretrain_cmd, common);

  auto* train_cmd = app.add_subcommand("train", "Stage 1 and mutual-learning rounds");
  add_common(train_cmd, common);
  train_cmd->add_option("--tbert", tbert_path, "Pretrained encoder checkpoint");

  auto* simplify_cmd = app.add_subcommand("simplify", "Simplify a database with a trained model");
  add_common(simplify_cmd, common);
  simplify_cmd->add_option("--model", model_path, "GNN-TS checkpoint")->required();
  simplify_cmd->add_option("--export-format", export_format, "csv|geojson");

  auto* baseline_cmd = app.add_subcommand("baseline", "Run a classical simplification baseline");
  add_common(baseline_cmd, common);
  baseline_cmd->add_option("--method", method, "top_down_E|top_down_W|bottom_up_E|uniform");
  baseline_cmd->add_option("--error", kind, "ped|sed|dad");
  baseline_cmd->add_option("--export-format", export_format, "csv|geojson");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Query F1 and error report of a simplified csv");
  add_common(evaluate_cmd, common);
  evaluate_cmd->add_option("--simplified", simplified_path, "Simplified database (csv)")->required();
  evaluate_cmd->add_flag("--table", table, "Print a table instead of JSON");

  auto* export_cmd = app.add_subcommand("export", "Convert a database to csv or geojson");
  add_common(export_cmd, common);
  export_cmd->add_option("--export-format", export_format, "csv|geojson");
  export_cmd->add_option("--output", output, "Destination file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(common, output);
    if (*pretrain_cmd) return cmd_pretrain(common);
    if (*train_cmd) return cmd_train(common, tbert_path);
    if (*simplify_cmd) return cmd_simplify(common, model_path, export_format);
    if (*baseline_cmd) return cmd_baseline(common, method, kind, export_format);
    if (*evaluate_cmd) return cmd_evaluate(common, simplified_path, table);
    if (*export_cmd) return cmd_export(common, export_format, output);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const ContractError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
