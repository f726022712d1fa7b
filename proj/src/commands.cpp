#include "valsim/commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <ostream>

#include "jsonl.hpp"
#include "valsim/campaign.hpp"
#include "valsim/config.hpp"
#include "valsim/digest.hpp"
#include "valsim/error.hpp"
#include "valsim/reports.hpp"

namespace valsim {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path = "valsim.json";
  int workers = 0;  // 0: from config
  bool serial = false;
  bool heatmaps = false;
  bool allow_partial = false;
};

struct Context {
  Config config;
  std::string digest;
  std::ostream& out;
  std::ostream& err;
};

RunOptions run_options(const Context& ctx, const Common& common, const std::string& label) {
  RunOptions o;
  o.workers = static_cast<unsigned>(common.workers > 0 ? common.workers : ctx.config.workers);
  o.serial = common.serial;
  o.cancel = &process_cancel_token();
  o.progress = [&err = ctx.err, label](const std::string&, CellStatus, std::size_t done, std::size_t total) {
    const std::size_t step = std::max<std::size_t>(1, total / 20);
    if (done % step == 0 || done == total) err << fmt::format("[{}] {}/{} cells\n", label, done, total) << std::flush;
  };
  return o;
}

std::unique_ptr<Provider> provider_for(const Config& config, const ProviderConfig& pc) {
  AuditSink audit;
  if (!config.audit_log.empty()) audit = make_file_audit_sink(config.audit_log);
  return make_provider(pc, config.circumplex, std::move(audit));
}

// Adds a report record for each file whose content is not yet recorded.
void record_reports(const fs::path& dir, const std::vector<fs::path>& files) {
  RunStore store = RunStore::open(dir);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : store.records())
    if (r.type == RecordType::report)
      seen.emplace(r.payload.at("name").get<std::string>(), r.payload.at("sha256").get<std::string>());
  for (const auto& f : files) {
    const std::string name = fs::relative(f, dir).generic_string();
    const std::string sha = sha256_hex(detail::read_file(f.string()));
    if (seen.count({name, sha})) continue;
    store.append(RecordType::report, {{"name", name}, {"sha256", sha}});
  }
}

void print_outcome(std::ostream& out, const std::string& label, const CampaignOutcome& o) {
  out << fmt::format("{}: {} cells: {} done, {} aborted, {} failed, {} pending ({} run now){}\n", label, o.total, o.done,
                     o.aborted, o.failed, o.pending, o.ran, o.cancelled ? ", cancelled" : "");
  out << fmt::format("store: {}\n", o.dir.string());
}

DialogueCondition parse_condition(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto comma = spec.find(',', start);
    parts.push_back(spec.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  const ConditionFilter f = parse_filter(parts);
  if (!f.person || !f.placement || !f.include_definition)
    throw UsageError("--condition needs person=, placement= and definition=, e.g. person=2,placement=system,definition=yes");
  return {*f.person, *f.placement, *f.include_definition};
}

// ---- subcommands -----------------------------------------------------------

int cmd_controllability(Context& ctx, const Common& common, const std::string& model,
                        const std::vector<std::string>& filters) {
  const ConditionFilter filter = parse_filter(filters);
  const ProviderConfig& pc = ctx.config.provider(model);
  const Workspace ws(ctx.config);
  auto provider = provider_for(ctx.config, pc);
  const auto outcome =
      run_controllability(ctx.config, ws, *provider, filter, run_options(ctx, common, "controllability"));
  print_outcome(ctx.out, "controllability", outcome);

  const auto files = write_controllability_report(load_snapshot(outcome.dir), outcome.dir / RunStore::kReportsDir,
                                                  ctx.config.circumplex, ctx.config.controllability.pooling);
  if (!outcome.cancelled) record_reports(outcome.dir, files);
  for (const auto& f : files) ctx.out << "wrote " << f.string() << "\n";
  if (outcome.failed > 0) {
    ctx.err << fmt::format("error: {} condition cell(s) failed after retries; re-run to retry them\n", outcome.failed);
    return kExitTransport;
  }
  if (outcome.cancelled) return kExitIncomplete;
  return kExitOk;
}

std::vector<fs::path> emit_dialogue_reports(const Context& ctx, const fs::path& dir, const Common& common,
                                            const ReportOptions& options) {
  const DialogueData data = load_dialogue_data(dir);
  if (!data.snapshot.complete()) {
    ctx.err << fmt::format("warning: {} is incomplete ({} pending, {} failed cells); reports are partial\n",
                           dir.string(), data.snapshot.count(CellStatus::pending),
                           data.snapshot.count(CellStatus::failed));
    if (!common.allow_partial)
      throw IncompleteCampaignError("campaign " + dir.string() + " is incomplete (pass --allow-partial to accept)");
  }
  return write_dialogue_reports(data, dir / RunStore::kReportsDir, ctx.config.circumplex, options);
}

int cmd_dialogue(Context& ctx, const Common& common, const std::string& mode_name, const std::string& language,
                 const std::string& task, const std::string& condition) {
  const ValueKind mode = parse_value_kind(mode_name);
  std::optional<DialogueCondition> dc;
  if (!condition.empty()) dc = parse_condition(condition);
  const Workspace ws(ctx.config);
  auto provider = provider_for(ctx.config, ctx.config.dialogue_provider());
  RunOptions options = run_options(ctx, common, "dialogue");
  if (!task.empty()) {
    const std::string needle = "/" + std::string(to_string(parse_task(task))) + "/";
    options.cell_filter = [needle](const std::string& key) { return key.find(needle) != std::string::npos; };
  }
  const auto outcome = run_dialogue_campaign(ctx.config, ws, *provider, language, mode, dc, options);
  print_outcome(ctx.out, "dialogue", outcome);

  ReportOptions ro;
  ro.heatmaps = common.heatmaps;
  std::vector<fs::path> files;
  try {
    files = emit_dialogue_reports(ctx, outcome.dir, common, ro);
  } catch (const IncompleteCampaignError& e) {
    // Still leave partial reports behind for inspection.
    const DialogueData data = load_dialogue_data(outcome.dir);
    try {
      write_dialogue_reports(data, outcome.dir / RunStore::kReportsDir, ctx.config.circumplex, ro);
    } catch (const ValidationError&) {
    }
    ctx.err << "error: " << e.what() << "\n";
    return outcome.failed > 0 ? kExitTransport : kExitIncomplete;
  }
  if (outcome.complete()) record_reports(outcome.dir, files);
  for (const auto& f : files) ctx.out << "wrote " << f.string() << "\n";
  return kExitOk;
}

int cmd_analyze(Context& ctx, const Common& common, const std::string& store, const std::string& metric,
                bool no_correlation) {
  const fs::path root = store.empty() ? campaign_root(ctx.config) : fs::path(store);
  ReportOptions ro;
  ro.heatmaps = common.heatmaps;
  if (!metric.empty()) ro.metrics = {parse_metric(metric)};

  std::vector<std::unique_ptr<DialogueData>> loaded;
  std::vector<CorrelationInput> pairs;
  for (const auto& lang : ctx.config.languages) {
    CorrelationInput in;
    for (ValueKind mode : {ValueKind::basic, ValueKind::higher_order}) {
      const fs::path dir = root / dialogue_dir(ctx.config, lang, mode).filename();
      if (!RunStore::exists(dir)) continue;
      for (const auto& f : emit_dialogue_reports(ctx, dir, common, ro)) ctx.out << "wrote " << f.string() << "\n";
      loaded.push_back(std::make_unique<DialogueData>(load_dialogue_data(dir)));
      (mode == ValueKind::basic ? in.basic : in.higher) = loaded.back().get();
    }
    if (!in.basic && !in.higher) continue;
    if (!no_correlation) {
      if (!in.higher)
        throw ValidationError("correlation requested but there is no higher-order campaign for '" + lang +
                              "' (run: valsim dialogue --mode higher --language " + lang + ", or pass --no-correlation)");
      if (!in.basic)
        throw ValidationError("correlation requested but there is no basic campaign for '" + lang +
                              "' (run: valsim dialogue --mode basic --language " + lang + ", or pass --no-correlation)");
      pairs.push_back(in);
    }
  }
  if (loaded.empty()) throw ValidationError("no dialogue campaigns found under " + root.string());
  if (!pairs.empty()) {
    const auto path = write_correlation_report(pairs, root / RunStore::kReportsDir, ctx.config.circumplex, ro);
    ctx.out << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_report(Context& ctx, const Common& common, const std::string& campaign) {
  std::vector<fs::path> dirs;
  if (!campaign.empty()) {
    dirs.push_back(campaign);
  } else {
    const fs::path root = campaign_root(ctx.config);
    if (fs::exists(root))
      for (const auto& e : fs::directory_iterator(root))
        if (RunStore::exists(e.path())) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw ValidationError("no campaigns to report on");
  ReportOptions ro;
  ro.heatmaps = common.heatmaps;
  for (const auto& dir : dirs) {
    const CampaignSnapshot snap = load_snapshot(dir);
    std::vector<fs::path> files;
    if (snap.manifest.kind == "controllability") {
      files = write_controllability_report(snap, dir / RunStore::kReportsDir, ctx.config.circumplex,
                                           ctx.config.controllability.pooling);
    } else {
      files = emit_dialogue_reports(ctx, dir, common, ro);
    }
    for (const auto& f : files) ctx.out << "wrote " << f.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Value-conditioned LLM agent experiments: controllability and dialogue campaigns", "valsim"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "Experiment config file (JSON)")->capture_default_str();
  app.add_option("-j,--workers", common.workers, "Worker threads (default: from config)")->check(CLI::PositiveNumber);
  app.add_flag("--serial", common.serial, "Use the serial reference executor");

  auto* ctl = app.add_subcommand("controllability", "Run the PVQ controllability grid for one model");
  std::string model;
  std::vector<std::string> filters;
  ctl->add_option("-m,--model", model, "Provider name from the config")->required();
  ctl->add_option("-f,--filter", filters,
                  "Condition subset: person=2|3, placement=system|user, definition=yes|no, language=en|ja, "
                  "values=basic|higher");

  auto* dlg = app.add_subcommand("dialogue", "Run or resume a dialogue campaign");
  std::string mode = "basic";
  std::string language = "en";
  std::string task;
  std::string condition;
  dlg->add_option("--mode", mode, "basic or higher")->capture_default_str();
  dlg->add_option("-l,--language", language, "en or ja")->capture_default_str();
  dlg->add_option("-t,--task", task, "Only run cells of this task (hobbies|housing)");
  dlg->add_option("--condition", condition, "Override the configured condition: person=2,placement=system,definition=yes");
  dlg->add_flag("--allow-partial", common.allow_partial, "Exit zero even if cells remain incomplete");
  dlg->add_flag("--heatmaps", common.heatmaps, "Also write SVG heatmaps");

  auto* ana = app.add_subcommand("analyze", "Matrices, summaries and the basic/higher-order correlation");
  std::string store;
  std::string metric;
  bool no_correlation = false;
  ana->add_option("store", store, "Campaign root (default: <output_dir>/<campaign_id>)");
  ana->add_option("--metric", metric, "trust or ios (default: both)");
  ana->add_flag("--allow-partial", common.allow_partial, "Analyze incomplete campaigns");
  ana->add_flag("--heatmaps", common.heatmaps, "Also write SVG heatmaps");
  ana->add_flag("--no-correlation", no_correlation, "Skip the basic/higher-order correlation");

  auto* rep = app.add_subcommand("report", "Rebuild reports of stored campaigns");
  std::string campaign;
  rep->add_option("campaign", campaign, "Campaign directory (default: all under the campaign root)");
  rep->add_flag("--allow-partial", common.allow_partial, "Report on incomplete campaigns");
  rep->add_flag("--heatmaps", common.heatmaps, "Also write SVG heatmaps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    Context ctx{load_config(common.config_path), {}, out, err};
    ctx.digest = config_digest(ctx.config);
    out << "config digest: " << ctx.digest << "\n";
    install_signal_handlers();
    if (*ctl) return cmd_controllability(ctx, common, model, filters);
    if (*dlg) return cmd_dialogue(ctx, common, mode, language, task, condition);
    if (*ana) return cmd_analyze(ctx, common, store, metric, no_correlation);
    return cmd_report(ctx, common, campaign);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const IncompleteCampaignError& e) {
    err << "incomplete: " << e.what() << "\n";
    return kExitIncomplete;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const UndefinedResultError& e) {
    err << "undefined result: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace valsim
