// haptutor: headless runs, diagnostics and the live channel.

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "haptutor/config.hpp"
#include "haptutor/error.hpp"
#include "haptutor/reference.hpp"
#include "haptutor/score.hpp"
#include "haptutor/sensing.hpp"
#include "haptutor/service.hpp"
#include "haptutor/simlab.hpp"
#include "haptutor/tutor.hpp"
#include "haptutor/wire.hpp"

namespace ht = haptutor;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ht::Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ht::Error("cannot write " + path);
  out << text;
}

struct Common {
  std::string chart_path;
  std::string config_path;
  std::vector<std::string> settings;

  ht::FingeringChart chart() const {
    return chart_path.empty() ? ht::default_chart() : ht::load_chart_file(chart_path);
  }

  ht::EngineConfig config() const {
    ht::EngineConfig cfg = config_path.empty() ? ht::EngineConfig{}
                                               : ht::load_config_file(config_path);
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ht::ConfigError("--set expects key=value: " + s);
      ht::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--chart", c.chart_path, "Fingering chart file (default: built-in)");
  cmd->add_option("--config", c.config_path, "Engine configuration file");
  cmd->add_option("--set", c.settings, "Override a config value, e.g. tutor.delta_t_ms=150");
}

// A score argument is either a file or a built-in id (song_a, song_b).
ht::Score resolve_score(const std::string& arg, const ht::FingeringChart& chart) {
  const auto lib = ht::service::ScoreLibrary::builtin(chart);
  if (lib.contains(arg)) return lib.get(arg);
  return ht::load_score_file(arg, chart);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Haptic music tutor engine"};
  app.require_subcommand(1);

  Common common;

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run the simulated learning protocol");
  add_common(experiment, common);
  ht::ExperimentPlan plan;
  std::string report_out, passes_out, song_a_path, song_b_path;
  auto* o_participants =
      experiment->add_option("--participants", plan.participants, "Participants per seed");
  auto* o_seeds = experiment->add_option("--seeds", plan.replications, "Number of seeds");
  experiment->add_option("--base-seed", plan.base_seed, "First seed");
  experiment->add_option("--jobs", plan.jobs, "Worker threads");
  auto* o_days =
      experiment->add_option("--days", plan.long_term_days, "Long-term follow-up days");
  experiment->add_option("--out", report_out, "Report file (default: stdout)");
  experiment->add_option("--passes-out", passes_out, "Per-pass log file");
  experiment->add_option("--song-a", song_a_path, "Score for song A (default: built-in)");
  experiment->add_option("--song-b", song_b_path, "Score for song B (default: built-in)");

  // replay
  auto* replay = app.add_subcommand("replay", "Run a recorded trace or session record");
  add_common(replay, common);
  std::string score_arg, trace_path, mode_name = "adaptive", replay_out, record_path;
  ht::Millis tick_ms = 0;
  replay->add_option("--score", score_arg, "Score file or built-in id");
  replay->add_option("--trace", trace_path, "Sensor trace file");
  replay->add_option("--mode", mode_name, "mandatory, hinted or adaptive");
  replay->add_option("--tick", tick_ms, "Fixed tick in ms (0: event-driven)");
  replay->add_option("--session", record_path, "Session record to replay instead");
  replay->add_option("--out", replay_out, "Log file (default: stdout)");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Compare adaptive detection with brute force");
  std::size_t cases = 10000;
  std::uint64_t oracle_seed = 1;
  ht::Millis delta_t = 200;
  oracle->add_option("--cases", cases, "Number of random cases");
  oracle->add_option("--seed", oracle_seed, "First case seed");
  oracle->add_option("--delta-t", delta_t, "Mistake window in ms");

  // frames
  auto* frames = app.add_subcommand("frames", "Decode device-link bytes");
  std::string hex_text, frames_file;
  frames->add_option("--hex", hex_text, "Hex bytes, e.g. \"7E 02 00 00 ..\"");
  frames->add_option("--file", frames_file, "Binary capture file");
  bool heartbeat = false;
  int hb_seq = 0;
  frames->add_flag("--heartbeat", heartbeat, "Print an encoded heartbeat instead");
  frames->add_option("--seq", hb_seq, "Sequence number for --heartbeat")->check(
      CLI::Range(0, 255));

  // serve
  auto* serve = app.add_subcommand("serve", "Start the websocket channel");
  add_common(serve, common);
  int port = -1;
  std::string scores_dir;
  serve->add_option("--port", port, "Listen port (default from config)");
  serve->add_option("--scores", scores_dir, "Directory of .score files (default: built-in)");

  // table
  auto* table = app.add_subcommand("table", "Forgetting-chance table from a report");
  std::string table_report;
  table->add_option("--report", table_report, "Report file")->required();

  // pair
  auto* pair = app.add_subcommand("pair", "Generate a matched pair of songs");
  add_common(pair, common);
  std::uint64_t pair_seed = ht::service::kBuiltinPairSeed;
  std::string pair_dir = ".";
  pair->add_option("--seed", pair_seed, "Generator seed");
  pair->add_option("--out-dir", pair_dir, "Directory for song_a.score and song_b.score");

  // trace
  auto* trace = app.add_subcommand("trace", "Synthesize a perfect sensor trace");
  add_common(trace, common);
  std::string trace_score, trace_out;
  ht::Millis period = 10;
  trace->add_option("--score", trace_score, "Score file or built-in id")->required();
  trace->add_option("--period", period, "Frame period in ms");
  trace->add_option("--out", trace_out, "Trace file (default: stdout)");

  // config
  auto* show_config = app.add_subcommand("config", "Print the effective configuration");
  add_common(show_config, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*experiment) {
      const auto cfg = common.config();
      const auto chart = common.chart();
      ht::ExperimentPlan p = cfg.plan;
      if (o_participants->count()) p.participants = plan.participants;
      if (o_days->count()) p.long_term_days = plan.long_term_days;
      p.replications = o_seeds->count() ? plan.replications : 1;
      p.base_seed = plan.base_seed;
      p.jobs = plan.jobs;
      p.validate();
      const auto lib = ht::service::ScoreLibrary::builtin(chart);
      const ht::Score a =
          song_a_path.empty() ? lib.get("song_a") : ht::load_score_file(song_a_path, chart);
      const ht::Score b =
          song_b_path.empty() ? lib.get("song_b") : ht::load_score_file(song_b_path, chart);
      const auto report = ht::run_protocol(p, cfg.simlab(), a, b, chart);
      emit(report_out, ht::format_report(report));
      if (!passes_out.empty()) emit(passes_out, ht::format_pass_log(report));
    } else if (*replay) {
      const auto chart = common.chart();
      if (!record_path.empty()) {
        for (const auto& r : ht::service::replay_record(slurp(record_path), chart)) {
          std::cout << r << '\n';
        }
        return 0;
      }
      if (score_arg.empty() || trace_path.empty()) {
        throw ht::Error("replay needs --score and --trace (or --session)");
      }
      const auto cfg = common.config();
      const ht::Score score = resolve_score(score_arg, chart);
      const auto frames_in = ht::load_trace_file(trace_path);
      const auto events = ht::events_from_frames(frames_in, chart, cfg.sensing);
      ht::TutorSession session(score, chart, ht::mode_from_string(mode_name), cfg.tutor);
      ht::run_to_completion(session, events, tick_ms);
      emit(replay_out, session.log_text());
      std::cerr << "mistakes " << session.mistake_count() << '\n';
    } else if (*oracle) {
      const auto s =
          ht::reference::compare_adaptive(cases, oracle_seed, ht::default_chart(), delta_t);
      std::cout << "agreement " << s.agreed << '/' << s.cases << '\n';
      if (s.first_disagreement) {
        std::cout << "first disagreement at seed " << *s.first_disagreement << '\n';
        return 1;
      }
    } else if (*frames) {
      if (heartbeat) {
        ht::wire::Frame f{ht::wire::Kind::Heartbeat, static_cast<std::uint8_t>(hb_seq), {}};
        std::cout << ht::wire::hex(ht::wire::encode(f)) << '\n';
        return 0;
      }
      std::vector<std::uint8_t> bytes;
      if (!frames_file.empty()) {
        const std::string raw = slurp(frames_file);
        bytes.assign(raw.begin(), raw.end());
      } else if (!hex_text.empty()) {
        bytes = ht::wire::parse_hex(hex_text);
      } else {
        const std::string text{std::istreambuf_iterator<char>(std::cin),
                               std::istreambuf_iterator<char>()};
        bytes = ht::wire::parse_hex(text);
      }
      ht::wire::Decoder dec;
      for (const auto& f : dec.feed(bytes)) std::cout << ht::wire::describe(f) << '\n';
      std::cout << "errors " << dec.error_count() << (dec.idle() ? "" : " (partial frame)")
                << '\n';
    } else if (*serve) {
      const auto cfg = common.config();
      const auto chart = common.chart();
      auto lib = scores_dir.empty() ? ht::service::ScoreLibrary::builtin(chart)
                                    : ht::service::ScoreLibrary::from_directory(scores_dir, chart);
      ht::service::SessionHub hub(std::move(lib), chart, cfg);
      const auto listen = port >= 0 ? static_cast<unsigned short>(port) : cfg.service.port;
      ht::service::ChannelServer server(hub, listen, cfg.service.tick_ms);
      std::cerr << "listening on port " << server.port() << '\n';
      static ht::service::ChannelServer* active = &server;
      std::signal(SIGINT, [](int) { active->stop(); });
      std::signal(SIGTERM, [](int) { active->stop(); });
      server.run();
    } else if (*table) {
      std::cout << ht::render_table(slurp(table_report));
    } else if (*pair) {
      const auto chart = common.chart();
      auto [a, b] = ht::generate_matched_pair(pair_seed, ht::MatchParams{}, chart);
      emit(pair_dir + "/song_a.score", ht::format_score(a));
      emit(pair_dir + "/song_b.score", ht::format_score(b));
    } else if (*show_config) {
      std::cout << ht::format_config(common.config());
    } else if (*trace) {
      const auto chart = common.chart();
      const ht::Score score = resolve_score(trace_score, chart);
      emit(trace_out, ht::format_trace(ht::synthesize_trace(score, chart, period)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
