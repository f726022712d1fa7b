#pragma once

// CSV and SVG outputs, rebuilt from the run store alone.

#include <filesystem>
#include <string>
#include <vector>

#include "valsim/analysis.hpp"
#include "valsim/controllability.hpp"
#include "valsim/dialogue.hpp"
#include "valsim/runstore.hpp"

namespace valsim {

// Manifest with statuses replayed from the committed records, plus the
// records themselves. Reads without taking the writer lock.
struct CampaignSnapshot {
  std::filesystem::path dir;
  RunManifest manifest;
  std::vector<StoredRecord> records;

  std::size_t count(CellStatus s) const;
  bool complete() const { return count(CellStatus::pending) == 0 && count(CellStatus::failed) == 0; }
};

CampaignSnapshot load_snapshot(const std::filesystem::path& dir);

struct DialogueData {
  std::string language;
  ValueKind mode = ValueKind::basic;
  std::vector<Task> tasks;  // tasks present in the manifest, canonical order
  std::vector<EvaluationRecord> evaluations;
  std::vector<DialogueTranscript> transcripts;
  CampaignSnapshot snapshot;
};

// Throws ValidationError if `dir` is not a dialogue campaign.
DialogueData load_dialogue_data(const std::filesystem::path& dir);

struct ReportOptions {
  std::vector<Metric> metrics{Metric::trust, Metric::ios};
  bool heatmaps = false;
  LevelWeighting weighting = LevelWeighting::cells;
};

// "0.5180", or "" for an empty value.
std::string format_number(double v);

// Matrices, similarity summary, mean/std table and validity counts for one
// dialogue campaign. Returns the files written, in a fixed order.
std::vector<std::filesystem::path> write_dialogue_reports(const DialogueData& data, const std::filesystem::path& out_dir,
                                                          const CircumplexConfig& circumplex,
                                                          const ReportOptions& options = {});

struct CorrelationInput {
  const DialogueData* basic = nullptr;
  const DialogueData* higher = nullptr;
};

// One row per (metric, language, task): r, p, n and the starred r.
// Throws ValidationError when a basic matrix is incomplete.
std::filesystem::path write_correlation_report(std::span<const CorrelationInput> inputs,
                                               const std::filesystem::path& out_dir,
                                               const CircumplexConfig& circumplex, const ReportOptions& options = {});

// The per-condition table (C_l and C_h, "---" where a value set has an
// aborted or failed cell) and the per-value detail table.
std::vector<std::filesystem::path> write_controllability_report(const CampaignSnapshot& snapshot,
                                                                const std::filesystem::path& out_dir,
                                                                const CircumplexConfig& circumplex,
                                                                Pooling pooling = Pooling::pooled);

// Annotated heatmap of a matrix; colour scale spans [lo, hi].
std::string render_heatmap_svg(const EvalMatrix& matrix, double lo, double hi);

}  // namespace valsim
