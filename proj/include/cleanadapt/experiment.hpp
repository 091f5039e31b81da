// cleanadapt/experiment.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cleanadapt/adapt.hpp"
#include "cleanadapt/config.hpp"
#include "cleanadapt/data.hpp"
#include "cleanadapt/eval.hpp"
#include "cleanadapt/model.hpp"

namespace cleanadapt {

// Subcommand implementations shared by the CLI and the integration tests.
// Every artifact is written under the output directory; paths that are not
// configured default to files inside it.

struct ExperimentPaths {
  std::string source_data;
  std::string target_data;
  std::string target_val_data;  // empty: validate on the target split itself
  std::string source_checkpoint;
  std::string retrieval_checkpoint;
};

inline ExperimentPaths PathsFrom(const ConfigMap &c, const std::filesystem::path &out) {
  ExperimentPaths p;
  p.source_data = c.String("source_data", (out / "source.cadd").string());
  p.target_data = c.String("target_data", (out / "target.cadd").string());
  p.target_val_data = c.String("target_val_data", "");
  p.source_checkpoint = c.String("source_checkpoint", (out / "source_model.cadp").string());
  p.retrieval_checkpoint = c.String("retrieval_checkpoint", p.source_checkpoint);
  return p;
}

inline bool EndsWith(const std::string &s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Binary .cadd files, or CSV when the path ends in .csv (num_classes then
/// comes from the config, or is inferred from the labels).
inline Dataset LoadDataset(const std::string &path, const ConfigMap &c, Domain domain) {
  if (EndsWith(path, ".csv")) return ReadDatasetCsv(path, c.Unsigned("num_classes", 0), domain);
  return ReadDataset(path, domain);
}

inline std::string DatasetStats(const std::string &name, const Dataset &d) {
  std::ostringstream os;
  os << name << ": n=" << d.size() << " classes=" << d.num_classes << " d_a=" << d.dim_a
     << " d_m=" << d.dim_m << " labeled=" << (d.AllLabeled() ? "yes" : d.AnyLabeled() ? "partial" : "no");
  return os.str();
}

inline nlohmann::json OptionalJson(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json ConfigEcho(const ConfigMap &c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto &[k, v] : c.values()) j[k] = v;
  return j;
}

inline void WriteText(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) Fail(ErrorCode::kIo, "short write to " + path.string());
}

inline void EnsureDir(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create output directory " + dir.string() + ": " + ec.message());
}

// --- gen-data --------------------------------------------------------------

/// Returns one stats line per written dataset.
inline std::vector<std::string> CmdGenData(const ConfigMap &c, const std::filesystem::path &out) {
  const ShiftSpec spec = ShiftSpecFrom(c);
  EnsureDir(out);
  const ExperimentPaths paths = PathsFrom(c, out);
  const DomainPair pair = GenerateShiftPair(spec);
  WriteDataset(pair.source, paths.source_data);
  WriteDataset(pair.target, paths.target_data);
  std::vector<std::string> stats = {DatasetStats("source", pair.source),
                                    DatasetStats("target", pair.target)};
  if (!paths.target_val_data.empty()) {
    // Held-out draw from the same target distribution.
    const Dataset val = GenerateShiftPair(spec, 1).target;
    WriteDataset(val, paths.target_val_data);
    stats.push_back(DatasetStats("target_val", val));
  }
  return stats;
}

// --- pretrain --------------------------------------------------------------

struct PretrainSummary {
  double source_accuracy = 0.0;
  Vector epoch_losses;
};

inline PretrainSummary CmdPretrain(const ConfigMap &c, const std::filesystem::path &out) {
  EnsureDir(out);
  const ExperimentPaths paths = PathsFrom(c, out);
  const AdaptConfig cfg = PretrainConfigFrom(c);
  const Dataset source = LoadDataset(paths.source_data, c, Domain::kSource);
  if (!source.AllLabeled()) Fail(ErrorCode::kUnlabeled, "unlabeled source: " + paths.source_data);
  const PretrainResult r = PretrainSource(source, cfg);
  WriteCheckpoint(r.model, paths.source_checkpoint);
  PretrainSummary s{Top1Accuracy(r.model, source, cfg.stream_mode), r.epoch_losses};
  nlohmann::json j;
  j["checkpoint"] = paths.source_checkpoint;
  j["source_accuracy"] = s.source_accuracy;
  j["epoch_losses"] = s.epoch_losses;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["config"] = ConfigEcho(c);
  WriteText(out / "pretrain_metrics.json", j.dump(2) + "\n");
  return s;
}

// --- adapt -----------------------------------------------------------------

inline const char *kEpochCsvHeader = "epoch,lr,val_acc,pl_acc,sel_precision,clean_loss,noisy_loss";

inline std::string EpochRecordsCsv(const std::vector<EpochRecord> &records) {
  auto cell = [](const std::optional<double> &v) { return v ? FormatDouble(*v) : std::string(); };
  std::ostringstream os;
  os << kEpochCsvHeader << '\n';
  for (const auto &r : records)
    os << r.epoch << ',' << FormatDouble(r.lr) << ',' << cell(r.target_val_accuracy) << ','
       << cell(r.pseudo_label_accuracy) << ',' << cell(r.selection_precision) << ','
       << cell(r.mean_loss_clean_true) << ',' << cell(r.mean_loss_noisy_true) << '\n';
  return os.str();
}

struct RunSummary {
  std::string mode;
  std::optional<double> source_only_acc;
  std::optional<double> adapted_acc;
  std::optional<double> gain;
  std::optional<double> student_acc;
  std::string records_path;
  std::string checkpoint_path;
  std::optional<RetrievalReport> retrieval;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::vector<EpochRecord> records;
};

inline nlohmann::json RetrievalJson(const RetrievalReport &r) {
  nlohmann::json j;
  nlohmann::json recall = nlohmann::json::object();
  for (const auto &[k, v] : r.recall_at) recall[std::to_string(k)] = v;
  j["recall_at"] = recall;
  j["num_queries"] = r.num_queries;
  return j;
}

/// Runs one adaptation. Only the pre-trained checkpoint and the target split
/// are read; target labels (when present) feed the diagnostics alone. The
/// source split is opened only when eval_retrieval = true asks for the
/// retrieval gallery.
inline RunSummary CmdAdapt(const ConfigMap &c, const std::filesystem::path &out,
                           const std::string &artifact_prefix = "") {
  const auto start = std::chrono::steady_clock::now();
  EnsureDir(out);
  const ExperimentPaths paths = PathsFrom(c, out);
  const AdaptConfig cfg = AdaptConfigFrom(c);
  const TwoStreamModel source_model = ReadCheckpoint(paths.source_checkpoint);
  const Dataset target = LoadDataset(paths.target_data, c, Domain::kTarget);
  if (source_model.num_classes() != target.num_classes ||
      source_model.appearance().input_dim() != target.dim_a ||
      source_model.motion().input_dim() != target.dim_m)
    Fail(ErrorCode::kDimMismatch, "checkpoint " + paths.source_checkpoint +
                                      " does not match dataset " + paths.target_data);
  std::optional<Dataset> validation;
  if (!paths.target_val_data.empty()) validation = LoadDataset(paths.target_val_data, c, Domain::kTarget);

  std::vector<std::size_t> labels;
  std::optional<EvalMonitor> monitor;
  if (target.AllLabeled()) {
    labels = TrueLabels(target);
    monitor = EvalMonitor{labels, validation ? &*validation : nullptr};
  }
  const AdaptResult r = RunAdaptation(source_model, StripLabels(target), cfg, monitor ? &*monitor : nullptr);

  RunSummary s;
  s.mode = AdaptModeName(cfg.mode);
  s.seed = cfg.seed;
  s.records = r.records;
  const Dataset *eval_set = validation ? &*validation : (target.AllLabeled() ? &target : nullptr);
  if (eval_set && eval_set->AllLabeled()) {
    s.source_only_acc = Top1Accuracy(source_model, *eval_set, cfg.stream_mode);
    s.adapted_acc = Top1Accuracy(r.model, *eval_set, cfg.stream_mode);
    s.gain = *s.adapted_acc - *s.source_only_acc;
    if (r.student) s.student_acc = Top1Accuracy(*r.student, *eval_set, cfg.stream_mode);
  }
  s.records_path = (out / (artifact_prefix + "epochs.csv")).string();
  s.checkpoint_path = (out / (artifact_prefix + "adapted_model.cadp")).string();
  WriteText(s.records_path, EpochRecordsCsv(r.records));
  WriteCheckpoint(r.model, s.checkpoint_path);
  if (r.student) WriteCheckpoint(*r.student, (out / (artifact_prefix + "student_model.cadp")).string());

  if (c.Bool("eval_retrieval", false)) {
    const Dataset gallery = LoadDataset(paths.source_data, c, Domain::kSource);
    const auto ks = c.UnsignedList("retrieval_ks", {1, 5, 10});
    s.retrieval = CrossDomainRetrieval(r.model, target, gallery, ks);
  }
  s.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json j;
  j["mode"] = s.mode;
  j["source_only_acc"] = OptionalJson(s.source_only_acc);
  j["adapted_acc"] = OptionalJson(s.adapted_acc);
  j["gain"] = OptionalJson(s.gain);
  j["student_acc"] = OptionalJson(s.student_acc);
  j["records_path"] = s.records_path;
  j["checkpoint_path"] = s.checkpoint_path;
  j["retrieval"] = s.retrieval ? RetrievalJson(*s.retrieval) : nlohmann::json(nullptr);
  j["seed"] = s.seed;
  j["wall_time_s"] = s.wall_time_s;
  j["config"] = ConfigEcho(c);
  WriteText(out / (artifact_prefix + "summary.json"), j.dump(2) + "\n");
  return s;
}

// --- sweep-tau -------------------------------------------------------------

struct SweepRow {
  double tau = 0.0;
  std::optional<double> source_only_acc;
  std::optional<double> adapted_acc;
  std::optional<double> gain;
};

inline std::vector<SweepRow> CmdSweepTau(const ConfigMap &c, const std::filesystem::path &out) {
  c.Require({"tau_list"});
  const auto taus = c.RealList("tau_list", {});
  if (taus.empty()) Fail(ErrorCode::kEmpty, "tau_list is empty");
  EnsureDir(out);
  // Inputs resolve against `out`, not the per-run directory.
  const ExperimentPaths paths = PathsFrom(c, out);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    ConfigMap run = c;
    run.Set("source_data", paths.source_data);
    run.Set("target_data", paths.target_data);
    run.Set("source_checkpoint", paths.source_checkpoint);
    run.Set("tau", FormatDouble(taus[i]));
    run.Set("eval_retrieval", "false");
    const RunSummary s = CmdAdapt(run, out / "runs", "tau" + std::to_string(i) + "_");
    rows.push_back({taus[i], s.source_only_acc, s.adapted_acc, s.gain});
  }
  auto cell = [](const std::optional<double> &v) { return v ? FormatDouble(*v) : std::string(); };
  std::ostringstream os;
  os << "tau,source_only_acc,adapted_acc,gain\n";
  for (const auto &r : rows)
    os << FormatDouble(r.tau) << ',' << cell(r.source_only_acc) << ',' << cell(r.adapted_acc) << ','
       << cell(r.gain) << '\n';
  WriteText(out / "tau_sweep.csv", os.str());
  return rows;
}

// --- eval-retrieval --------------------------------------------------------

/// Target split as queries, source split as gallery, features from the
/// configured retrieval checkpoint.
inline RetrievalReport CmdEvalRetrieval(const ConfigMap &c, const std::filesystem::path &out) {
  EnsureDir(out);
  const ExperimentPaths paths = PathsFrom(c, out);
  const TwoStreamModel model = ReadCheckpoint(paths.retrieval_checkpoint);
  const Dataset queries = LoadDataset(paths.target_data, c, Domain::kTarget);
  const Dataset gallery = LoadDataset(paths.source_data, c, Domain::kSource);
  const auto ks = c.UnsignedList("retrieval_ks", {1, 5, 10});
  const RetrievalReport r = CrossDomainRetrieval(model, queries, gallery, ks);
  nlohmann::json j = RetrievalJson(r);
  j["checkpoint"] = paths.retrieval_checkpoint;
  WriteText(out / "retrieval.json", j.dump(2) + "\n");
  return r;
}

}  // namespace cleanadapt
