// Copyright 2026-present the wipcast project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// The wipcast command line. Each stage reads and writes files in the output
// directory, so stages can be rerun independently:
//
//   ingest    event log        -> wip_series.csv
//   stories   wip_series.csv   -> stories_<granularity>.jsonl
//   index     stories_*.jsonl  -> index_<granularity>.jsonl
//   forecast  wip_series.csv   -> forecasts.jsonl, llm_log.jsonl
//   evaluate  wip_series.csv   -> predictions.csv, metrics.csv, report.svg,
//                                 forecasts.jsonl, llm_log.jsonl
//   plot      predictions.csv  -> report.svg

#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wipcast/config.hpp"
#include "wipcast/error.hpp"
#include "wipcast/eval.hpp"
#include "wipcast/eventlog.hpp"
#include "wipcast/narrative.hpp"
#include "wipcast/report.hpp"
#include "wipcast/wipseries.hpp"

namespace wipcast::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadPath = 2,
  kEmptyLog = 3,
  kParseError = 4,
  kConfigError = 5,
  kBackendError = 6,
};

class FileNotFound : public Error {
 public:
  explicit FileNotFound(const fs::path& p) : Error("no such file: '" + p.string() + "'") {}
};

namespace detail {

inline std::string read_existing(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw FileNotFound(p);
  return read_text_file(p);
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline std::string detect_format(const fs::path& path, std::string_view bytes, const std::string& configured) {
  if (configured != "auto") return configured;
  const auto ext = path.extension().string();
  if (ext == ".xes" || ext == ".XES") return "xes";
  if (ext == ".csv" || ext == ".CSV") return "csv";
  const auto first = bytes.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  return first != std::string_view::npos && bytes[first] == '<' ? "xes" : "csv";
}

inline EventLog load_log(const fs::path& path, const PipelineConfig& cfg) {
  const std::string bytes = read_existing(path);
  if (bytes.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw EmptyLogError("event log '" + path.string() + "' is empty");
  }
  const std::string format = detect_format(path, bytes, cfg.input.format);
  if (format == "xes") return parse_xes(bytes, path.filename().string());
  return parse_csv(bytes, cfg.input.csv, path.filename().string());
}

inline WipSeries load_series(const fs::path& path) {
  return wip_series_from_csv(read_existing(path));
}

inline std::string now_utc() {
  return format_iso8601(std::chrono::time_point_cast<std::chrono::microseconds>(std::chrono::system_clock::now()));
}

inline std::string stories_file(Granularity g) { return "stories_" + std::string(to_string(g)) + ".jsonl"; }
inline std::string index_file(Granularity g) { return "index_" + std::string(to_string(g)) + ".jsonl"; }

/// Memories holding the contextual stories of every day up to `last_day`
/// that has a known next day. Index snapshots in `out` are used when they
/// exist; otherwise stories are rendered from the series.
inline std::array<std::unique_ptr<ProcessMemory>, 3> build_memories(const WipSeries& series, Day last_day,
                                                                   const PipelineConfig& cfg,
                                                                   std::shared_ptr<const EmbeddingProvider> embedder,
                                                                   const fs::path& out) {
  std::array<std::unique_ptr<ProcessMemory>, 3> mems;
  const auto& ev = series.events;
  for (const auto g : kAllGranularities) {
    auto& mem = mems[static_cast<std::size_t>(g)];
    mem = std::make_unique<ProcessMemory>(embedder, g, cfg.retention);
    const fs::path snapshot = out / index_file(g);
    if (fs::is_regular_file(snapshot)) {
      for (auto& doc : documents_from_jsonl(read_text_file(snapshot))) {
        if (doc.story.granularity == g && doc.story.date <= last_day) mem->add_document(std::move(doc));
      }
      continue;
    }
    std::vector<Story> batch;
    for (std::size_t j = 0; j < ev.size() && ev[j].date <= last_day; ++j) {
      if (!wipcast::detail::has_next_day(series, j)) continue;
      if (g == Granularity::windowed && !wipcast::detail::has_full_window(series, j, cfg.story_window)) continue;
      batch.push_back(render_series_story(series, j, g, static_cast<double>(ev[j + 1].close), cfg.story_window));
    }
    mem->add_batch(batch);
  }
  return mems;
}

inline nlohmann::json forecast_record(const ForecastReport& r, std::optional<double> actual) {
  auto j = to_json(r);
  j["actual"] = actual ? nlohmann::json(*actual) : nlohmann::json(nullptr);
  return j;
}

}  // namespace detail

/// Parses the command line, runs one subcommand and returns its exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Work-in-progress forecasting from process event logs"};
  app.name("wipcast");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::string backend;
  bool freeze = false;
  app.add_option("--config", config_path, "Pipeline configuration (JSON)");
  app.add_option("--out", out_dir, "Output directory (overrides the configuration)");
  app.add_option("--backend", backend, "Chat backend")->check(CLI::IsMember({"stub", "remote"}));
  app.add_flag("--freeze-timestamps", freeze, "Omit generation times so outputs are byte-identical across runs");

  auto* ingest = app.add_subcommand("ingest", "Parse an event log and write wip_series.csv");
  std::string input_path;
  std::string input_format;
  ingest->add_option("--input,input", input_path, "Event log (XES or CSV)");
  ingest->add_option("--format", input_format, "auto, xes or csv")->check(CLI::IsMember({"auto", "xes", "csv"}));

  std::string series_path;
  auto* stories = app.add_subcommand("stories", "Render query and contextual stories per granularity");
  stories->add_option("--series", series_path, "WiP series CSV (default: <out>/wip_series.csv)");
  bool paraphrase = false;
  stories->add_flag("--paraphrase", paraphrase, "Rewrite stories through the chat backend");

  auto* index = app.add_subcommand("index", "Embed contextual stories and write index snapshots");

  auto* forecast = app.add_subcommand("forecast", "Forecast the WiP close of one day");
  std::string forecast_date;
  forecast->add_option("--series", series_path, "WiP series CSV (default: <out>/wip_series.csv)");
  forecast->add_option("--date", forecast_date, "Day to forecast (YYYY-MM-DD)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Walk-forward evaluation against all sources");
  evaluate->add_option("--series", series_path, "WiP series CSV (default: <out>/wip_series.csv)");
  std::string split;
  evaluate->add_option("--split", split, "Last training day (YYYY-MM-DD)");

  auto* plot = app.add_subcommand("plot", "Render report.svg from predictions.csv");
  std::string predictions_path;
  plot->add_option("--predictions", predictions_path, "Predictions CSV (default: <out>/predictions.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = parse_config(detail::read_existing(config_path));
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!backend.empty()) cfg.chat.backend = backend;
    if (freeze) cfg.freeze_timestamps = true;
    if (!input_path.empty()) cfg.input.path = input_path;
    if (!input_format.empty()) cfg.input.format = input_format;
    if (!split.empty()) cfg.split_date = parse_date(split);
    if (paraphrase) cfg.paraphrase_stories = true;
    cfg.validate();

    const fs::path outp = cfg.output_dir;
    const fs::path series_file = series_path.empty() ? outp / "wip_series.csv" : fs::path(series_path);

    if (*ingest) {
      if (cfg.input.path.empty()) throw ConfigError("no input event log given (--input or input.path)");
      const auto log = detail::load_log(cfg.input.path, cfg);
      const auto series = build_wip_series(log, cfg.lifecycle, cfg.gap_policy);
      detail::ensure_dir(outp);
      write_text_file(outp / "wip_series.csv", to_csv(series));
      const auto report = validate(log, cfg.lifecycle.timezone);
      for (const auto& d : log.meta().diagnostics) err << "warning: line " << d.line << ": " << d.message << "\n";
      out << "events " << report.event_count << ", cases " << report.case_count << ", skipped "
          << log.meta().skipped << "\n";
      out << "wrote " << series.events.size() << " days (" << format_date(series.events.front().date) << " .. "
          << format_date(series.events.back().date) << ") to " << (outp / "wip_series.csv").string() << "\n";
      return kOk;
    }

    if (*stories) {
      const auto series = detail::load_series(series_file);
      std::shared_ptr<ChatBackend> chat;
      if (cfg.paraphrase_stories) chat = cfg.make_backend();
      detail::ensure_dir(outp);
      for (const auto g : kAllGranularities) {
        auto corpus = render_corpus(series, g, cfg.story_window);
        if (chat) {
          for (auto& s : corpus) s = paraphrase_story(s, *chat);
        }
        write_text_file(outp / detail::stories_file(g), to_jsonl(corpus));
        const auto contextual = std::count_if(corpus.begin(), corpus.end(),
                                              [](const Story& s) { return s.kind == StoryKind::contextual; });
        out << to_string(g) << ": " << corpus.size() - static_cast<std::size_t>(contextual) << " query, "
            << contextual << " contextual\n";
      }
      return kOk;
    }

    if (*index) {
      const auto embedder = cfg.make_embedder();
      std::array<std::vector<Story>, 3> contextual;
      for (const auto g : kAllGranularities) {
        for (auto& s : stories_from_jsonl(detail::read_existing(outp / detail::stories_file(g)))) {
          if (s.kind == StoryKind::contextual) contextual[static_cast<std::size_t>(g)].push_back(std::move(s));
        }
      }
      for (const auto g : kAllGranularities) {
        ProcessMemory mem(embedder, g, cfg.retention);
        mem.add_batch(contextual[static_cast<std::size_t>(g)]);
        write_text_file(outp / detail::index_file(g), to_jsonl(mem.index()));
        out << to_string(g) << ": " << mem.index().size() << " documents, dim " << mem.index().dim() << "\n";
      }
      return kOk;
    }

    if (*forecast) {
      const auto series = detail::load_series(series_file);
      const Day date = parse_date(forecast_date);
      const auto& ev = series.events;
      std::size_t n = 0;
      while (n < ev.size() && ev[n].date < date) ++n;
      if (n == 0 || ev[n - 1].date != date - std::chrono::days{1}) {
        throw InvalidArgument("forecasting " + forecast_date + " needs the previous day in the series");
      }
      const auto embedder = cfg.make_embedder();
      auto mems = detail::build_memories(series, date - std::chrono::days{2}, cfg, embedder, outp);
      auto chat = std::make_shared<RecordingBackend>(cfg.make_backend());
      const auto eopt = cfg.eval_options();
      const std::span<const WipEvent> history(ev.data(), n);
      std::array<Prediction, 3> preds;
      for (const auto g : kAllGranularities) {
        const auto i = static_cast<std::size_t>(g);
        PredictorAgent agent(g, *mems[i], *chat, PredictorOptions{cfg.retrieval_k, cfg.story_window});
        preds[i] = agent.predict(history, date);
      }
      std::vector<double> closes;
      for (const auto& e : history) closes.push_back(static_cast<double>(e.close));
      const auto report = fuse(date, preds, trend_analyze(closes, cfg.trend), mems[0].get(), chat.get(), eopt.fusion);
      std::optional<double> actual;
      if (n < ev.size() && ev[n].date == date) actual = static_cast<double>(ev[n].close);
      detail::ensure_dir(outp);
      write_text_file(outp / "forecasts.jsonl", detail::forecast_record(report, actual).dump() + "\n");
      write_text_file(outp / "llm_log.jsonl", chat->jsonl());
      out << format_date(date) << " " << format_real(report.final_value) << " (" << to_string(report.trend.label)
          << ")\n";
      return kOk;
    }

    if (*evaluate) {
      const auto series = detail::load_series(series_file);
      auto chat = std::make_shared<RecordingBackend>(cfg.make_backend());
      const auto result = rolling_forecast(series, cfg.eval_options(), cfg.make_embedder(), *chat);
      std::vector<PredictionTrace> traces = result.traces;
      traces.push_back(persistence_baseline(series, result.split_date, std::max<std::size_t>(cfg.trend.lookback, 1)));

      ReportOptions ropt;
      ropt.header_note = "split " + format_date(result.split_date);
      if (!cfg.freeze_timestamps) ropt.header_note += ", generated " + detail::now_utc();
      emit_report(traces, outp, ropt);

      std::string forecasts;
      for (std::size_t i = 0; i < result.reports.size(); ++i) {
        forecasts += detail::forecast_record(result.reports[i], result.traces[0].entries[i].actual).dump() + "\n";
      }
      write_text_file(outp / "forecasts.jsonl", forecasts);
      write_text_file(outp / "llm_log.jsonl", chat->jsonl());
      write_text_file(outp / "config.json", to_json(cfg).dump(2) + "\n");

      out << "split " << format_date(result.split_date) << ", " << traces[0].entries.size() << " test days\n";
      for (const auto& t : traces) {
        const auto m = summarize(t);
        out << to_string(t.source) << ": MAPE " << format_real(m.mape) << "%, MAE " << format_real(m.mae) << "\n";
      }
      return kOk;
    }

    if (*plot) {
      const fs::path pred = predictions_path.empty() ? outp / "predictions.csv" : fs::path(predictions_path);
      const auto traces = traces_from_predictions_csv(detail::read_existing(pred));
      if (traces.empty()) throw ParseError("predictions CSV holds no rows");
      // The split is the last training day: the day before the first forecast.
      Day first = traces.front().entries.front().date;
      for (const auto& t : traces) first = std::min(first, t.entries.front().date);
      ReportOptions ropt;
      ropt.header_note = "split " + format_date(first - std::chrono::days{1});
      if (!cfg.freeze_timestamps) ropt.header_note += ", generated " + detail::now_utc();
      detail::ensure_dir(outp);
      write_text_file(outp / "report.svg", render_svg(traces, ropt));
      out << "wrote " << (outp / "report.svg").string() << "\n";
      return kOk;
    }
  } catch (const FileNotFound& e) {
    err << "error: " << e.what() << "\n";
    return kBadPath;
  } catch (const EmptyLogError& e) {
    err << "error: " << e.what() << "\n";
    return kEmptyLog;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const BackendError& e) {
    err << "error: " << e.what() << "\n";
    return kBackendError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace wipcast::cli
