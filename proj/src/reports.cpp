#include "valsim/reports.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "valsim/error.hpp"

namespace valsim {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string mode_name(ValueKind mode) { return mode == ValueKind::basic ? "basic" : "higher"; }

std::pair<double, double> metric_range(Metric m) {
  return m == Metric::trust ? std::pair{1.0, 5.0} : std::pair{1.0, 7.0};
}

std::string matrix_csv(const EvalMatrix& m) {
  const auto values = all_values(m.mode());
  std::string out = "evaluator";
  for (const auto& v : values) out += "," + std::string(to_string(v));
  out += '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += to_string(values[i]);
    for (std::size_t j = 0; j < m.size(); ++j) {
      out += ',';
      if (const auto& c = m.cell(i, j)) out += format_number(*c);
    }
    out += '\n';
  }
  return out;
}

// Evaluations of one task, or empty if none.
std::vector<EvaluationRecord> for_task(const std::vector<EvaluationRecord>& records, Task task) {
  std::vector<EvaluationRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), [&](const auto& r) { return r.task == task; });
  return out;
}

}  // namespace

std::string format_number(double v) {
  std::string s = fmt::format("{:.4f}", v);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::size_t CampaignSnapshot::count(CellStatus s) const {
  return static_cast<std::size_t>(
      std::count_if(manifest.cells.begin(), manifest.cells.end(), [&](const auto& c) { return c.status == s; }));
}

CampaignSnapshot load_snapshot(const fs::path& dir) {
  CampaignSnapshot snap;
  snap.dir = dir;
  snap.manifest = RunStore::read_manifest(dir);
  snap.records = RunStore::read_records(dir);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < snap.manifest.cells.size(); ++i) {
    index[snap.manifest.cells[i].key] = i;
    snap.manifest.cells[i].status = CellStatus::pending;
  }
  for (const auto& r : snap.records) {
    if (r.type != RecordType::cell_status) continue;
    auto it = index.find(r.cell);
    if (it == index.end()) throw ValidationError("status record for unknown cell '" + r.cell + "'");
    snap.manifest.cells[it->second].status = parse_cell_status(r.payload.at("status").get<std::string>());
  }
  return snap;
}

DialogueData load_dialogue_data(const fs::path& dir) {
  DialogueData d;
  d.snapshot = load_snapshot(dir);
  const auto& m = d.snapshot.manifest;
  if (m.kind != "dialogue") throw ValidationError(dir.string() + " is not a dialogue campaign");
  d.language = m.meta.at("language").get<std::string>();
  d.mode = parse_value_kind(m.meta.at("mode").get<std::string>());
  for (Task t : kTasks) {
    const std::string name(to_string(t));
    const bool present = std::any_of(m.cells.begin(), m.cells.end(),
                                     [&](const auto& c) { return split(c.key, '/').at(2) == name; });
    if (present) d.tasks.push_back(t);
  }
  for (const auto& r : d.snapshot.records) {
    if (r.type == RecordType::evaluation) d.evaluations.push_back(evaluation_from_json(r.payload));
    if (r.type == RecordType::transcript) d.transcripts.push_back(transcript_from_json(r.payload));
  }
  return d;
}

std::vector<fs::path> write_dialogue_reports(const DialogueData& data, const fs::path& out_dir,
                                             const CircumplexConfig& circumplex, const ReportOptions& options) {
  std::vector<fs::path> written;
  std::string similarity = "metric,task,level,mean,cells\n";
  std::string stats = "metric,task,mean,std,n\n";

  for (Metric metric : options.metrics) {
    for (Task task : data.tasks) {
      const std::string suffix = std::string(to_string(metric)) + "_" + std::string(to_string(task));
      const auto records = for_task(data.evaluations, task);
      if (records.empty()) continue;

      const EvalMatrix m = build_matrix(data.evaluations, data.mode, metric, task, data.language);
      const fs::path matrix_path = out_dir / ("matrix_" + suffix + ".csv");
      write_text(matrix_path, matrix_csv(m));
      written.push_back(matrix_path);
      if (options.heatmaps) {
        const auto [lo, hi] = metric_range(metric);
        const fs::path svg = out_dir / ("heatmap_" + suffix + ".svg");
        write_text(svg, render_heatmap_svg(m, lo, hi));
        written.push_back(svg);
      }

      const auto summary = similarity_means(m, circumplex, options.weighting);
      for (SimilarityLevel level : kSimilarityLevels) {
        const auto idx = static_cast<std::size_t>(level);
        if (summary.populations[idx] == 0) continue;
        similarity += fmt::format("{},{},{},{},{}\n", to_string(metric), to_string(task), to_string(level),
                                  summary.means[idx] ? format_number(*summary.means[idx]) : "",
                                  summary.populations[idx]);
      }

      try {
        const auto s = condition_stats(records, metric);
        stats += fmt::format("{},{},{},{},{}\n", to_string(metric), to_string(task), format_number(s.mean),
                             format_number(s.std), s.n);
      } catch (const UndefinedResultError&) {
        stats += fmt::format("{},{},,,{}\n", to_string(metric), to_string(task), records.size());
      }
    }
  }
  const fs::path sim_path = out_dir / "similarity.csv";
  write_text(sim_path, similarity);
  written.push_back(sim_path);
  const fs::path stats_path = out_dir / "stats.csv";
  write_text(stats_path, stats);
  written.push_back(stats_path);

  // Validity per task: transcripts, records, and cell outcomes.
  std::string validity = "task,transcripts,records,valid_records,invalid_records,failed_cells,pending_cells\n";
  for (Task task : data.tasks) {
    const std::string name(to_string(task));
    const auto transcripts = std::count_if(data.transcripts.begin(), data.transcripts.end(),
                                           [&](const auto& t) { return t.task == task; });
    const auto records = for_task(data.evaluations, task);
    const auto valid = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.valid; });
    std::size_t failed = 0;
    std::size_t pending = 0;
    for (const auto& c : data.snapshot.manifest.cells) {
      if (split(c.key, '/').at(2) != name) continue;
      failed += c.status == CellStatus::failed;
      pending += c.status == CellStatus::pending;
    }
    validity += fmt::format("{},{},{},{},{},{},{}\n", name, transcripts, records.size(), valid,
                            static_cast<std::ptrdiff_t>(records.size()) - valid, failed, pending);
  }
  const fs::path validity_path = out_dir / "validity.csv";
  write_text(validity_path, validity);
  written.push_back(validity_path);
  return written;
}

fs::path write_correlation_report(std::span<const CorrelationInput> inputs, const fs::path& out_dir,
                                  const CircumplexConfig& circumplex, const ReportOptions& options) {
  std::string out = "metric,language,task,r,p,n,annotated\n";
  for (Metric metric : options.metrics) {
    for (const auto& in : inputs) {
      if (!in.basic || !in.higher) throw ValidationError("correlation needs both a basic and a higher-order campaign");
      if (in.basic->language != in.higher->language)
        throw ValidationError("correlation inputs differ in language");
      for (Task task : in.basic->tasks) {
        if (std::find(in.higher->tasks.begin(), in.higher->tasks.end(), task) == in.higher->tasks.end())
          throw ValidationError("higher-order campaign for '" + in.basic->language + "' lacks task " +
                                std::string(to_string(task)));
        const auto basic = build_matrix(in.basic->evaluations, ValueKind::basic, metric, task, in.basic->language);
        const auto higher =
            build_matrix(in.higher->evaluations, ValueKind::higher_order, metric, task, in.higher->language);
        const auto c = correlate_basic_higher(basic, higher, circumplex);
        out += fmt::format("{},{},{},{},{},{},{}{}\n", to_string(metric), in.basic->language, to_string(task),
                           format_number(c.r), format_number(c.p), c.n, format_number(c.r),
                           significance_stars(c.p));
      }
    }
  }
  const fs::path path = out_dir / "correlation.csv";
  write_text(path, out);
  return path;
}

std::vector<fs::path> write_controllability_report(const CampaignSnapshot& snapshot, const fs::path& out_dir,
                                                   const CircumplexConfig& circumplex, Pooling pooling) {
  const auto& m = snapshot.manifest;
  if (m.kind != "controllability") throw ValidationError(snapshot.dir.string() + " is not a controllability campaign");
  const std::string model = m.meta.value("model", std::string{});

  std::map<std::string, std::vector<PvqRun>> runs;
  for (const auto& r : snapshot.records)
    if (r.type == RecordType::pvq_run) runs[r.cell].push_back(pvq_run_from_json(r.payload));

  struct Group {
    std::string language, placement, person, definition;
    std::map<ValueKind, std::vector<ControllabilityScore>> scores;
    std::map<ValueKind, std::size_t> pending;
  };
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  std::string detail =
      "model,language,value_set,placement,person,definition,value,status,score,n_valid_target,n_valid_other\n";

  for (const auto& cell : m.cells) {
    // ctl/<lang>/<placement>/<person>/<def|nodef>/<value>
    const auto parts = split(cell.key, '/');
    if (parts.size() != 6) throw ValidationError("malformed controllability cell key '" + cell.key + "'");
    const ValueRef value = parse_value(parts[5]);
    const ValueKind kind = kind_of(value);
    const std::string gkey = parts[1] + "/" + parts[2] + "/" + parts[3] + "/" + parts[4];
    if (!groups.count(gkey)) {
      order.push_back(gkey);
      groups[gkey] = Group{parts[1], parts[2], parts[3], parts[4] == "def" ? "yes" : "no", {}, {}};
    }
    Group& g = groups[gkey];
    std::string status(to_string(cell.status));
    std::string score, n_target, n_other;
    if (cell.status == CellStatus::pending) ++g.pending[kind];
    if (cell.status == CellStatus::done) {
      try {
        const auto s = controllability_score(runs[cell.key], value, circumplex, pooling);
        g.scores[kind].push_back(s);
        score = format_number(s.score);
        n_target = std::to_string(s.n_valid_target);
        n_other = std::to_string(s.n_valid_other);
      } catch (const UndefinedResultError&) {
        status = "undefined";
      }
    }
    detail += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(model), parts[1], mode_name(kind),
                          g.placement, g.person, g.definition, to_string(value), status, score, n_target, n_other);
  }

  std::string table = "model,language,placement,person,definition,basic,higher\n";
  for (const auto& gkey : order) {
    const Group& g = groups[gkey];
    auto column = [&](ValueKind kind) -> std::string {
      const std::size_t n = all_values(kind).size();
      auto pending = g.pending.find(kind);
      if (pending != g.pending.end() && pending->second == n) return "";  // not run
      auto it = g.scores.find(kind);
      if (it == g.scores.end()) return "---";
      const auto agg = aggregate(it->second, kind);
      return agg.value ? format_number(*agg.value) : "---";
    };
    table += fmt::format("{},{},{},{},{},{},{}\n", csv_field(model), g.language, g.placement, g.person, g.definition,
                         column(ValueKind::basic), column(ValueKind::higher_order));
  }

  const fs::path table_path = out_dir / "controllability.csv";
  const fs::path detail_path = out_dir / "controllability_values.csv";
  write_text(table_path, table);
  write_text(detail_path, detail);
  return {table_path, detail_path};
}

std::string render_heatmap_svg(const EvalMatrix& matrix, double lo, double hi) {
  constexpr int kCell = 56;
  constexpr int kLeft = 150;
  constexpr int kTop = 150;
  const auto values = all_values(matrix.mode());
  const int n = static_cast<int>(matrix.size());
  const int width = kLeft + n * kCell + 20;
  const int height = kTop + n * kCell + 20;

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n",
      width, height);
  out += fmt::format("<text x=\"{}\" y=\"20\" font-size=\"14\">{} / {} / {} (rows: evaluator, columns: target)</text>\n",
                     kLeft, to_string(matrix.metric()), to_string(matrix.task()), matrix.language());
  for (int j = 0; j < n; ++j) {
    const int x = kLeft + j * kCell + kCell / 2;
    out += fmt::format("<text x=\"{}\" y=\"{}\" transform=\"rotate(-60 {} {})\">{}</text>\n", x, kTop - 6, x, kTop - 6,
                       to_string(values[static_cast<std::size_t>(j)]));
  }
  for (int i = 0; i < n; ++i) {
    const int y = kTop + i * kCell;
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", kLeft - 6, y + kCell / 2 + 4,
                       to_string(values[static_cast<std::size_t>(i)]));
    for (int j = 0; j < n; ++j) {
      const int x = kLeft + j * kCell;
      const auto& c = matrix.cell(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (!c) {
        out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#dddddd\"/>\n", x, y, kCell, kCell);
        continue;
      }
      const double t = hi > lo ? std::clamp((*c - lo) / (hi - lo), 0.0, 1.0) : 0.5;
      // White to a deep blue.
      const int r = static_cast<int>(255 - t * (255 - 8));
      const int g = static_cast<int>(255 - t * (255 - 48));
      const int b = static_cast<int>(255 - t * (255 - 107));
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#{:02x}{:02x}{:02x}\"/>\n", x, y,
                         kCell, kCell, r, g, b);
      out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{:.2f}</text>\n", x + kCell / 2,
                         y + kCell / 2 + 4, t > 0.6 ? "#ffffff" : "#000000", *c);
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace valsim
