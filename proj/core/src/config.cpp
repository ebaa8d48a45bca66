#include "haptutor/config.hpp"

#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "haptutor/error.hpp"
#include "text_util.hpp"

namespace haptutor {

void EngineConfig::validate() const {
  device.geometry.validate();
  if (!(device.arm_speed_mm_s > 0)) throw ConfigError("arm_speed_mm_s must be positive");
  if (!(device.glove.ac_mm > 0) || !(device.glove.bc_mm > 0)) {
    throw ConfigError("glove link lengths must be positive");
  }
  if (!(sensing.threshold > 0.0 && sensing.threshold < 1.0)) {
    throw ConfigError("sensing threshold must lie in (0, 1)");
  }
  if (sensing.debounce_ms < 0) throw ConfigError("debounce_ms must be non-negative");
  tutor.validate();
  strategy.validate();
  learner.validate();
  plan.validate();
  if (link.delay_ms < 0) throw ConfigError("link delay must be non-negative");
  if (service.tick_ms < 1) throw ConfigError("service tick must be positive");
  if (service.pass_gap_ms < 0) throw ConfigError("pass gap must be non-negative");
}

SimlabConfig EngineConfig::simlab() const {
  return SimlabConfig{learner, tutor, strategy, link.delay_ms};
}

namespace {

using Setter = std::function<void(EngineConfig&, const std::string&)>;

double to_real(const std::string& v) {
  try {
    return detail::parse_double(v, 0);
  } catch (const ParseError&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& v) {
  try {
    return detail::parse_int(v, 0);
  } catch (const ParseError&) {
    throw ConfigError("expected an integer, got '" + v + "'");
  }
}

Millimeters to_mm(const std::string& v) {
  try {
    return parse_mm(v);
  } catch (const GeometryError& e) {
    throw ConfigError(e.what());
  }
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"device.track_len_mm",
       [](EngineConfig& c, const std::string& v) { c.device.geometry.track_len_mm = to_mm(v); }},
      {"device.arm_width_mm",
       [](EngineConfig& c, const std::string& v) { c.device.geometry.arm_width_mm = to_mm(v); }},
      {"device.arm_speed_mm_s",
       [](EngineConfig& c, const std::string& v) { c.device.arm_speed_mm_s = to_real(v); }},
      {"device.glove_ac_mm",
       [](EngineConfig& c, const std::string& v) { c.device.glove.ac_mm = to_real(v); }},
      {"device.glove_bc_mm",
       [](EngineConfig& c, const std::string& v) { c.device.glove.bc_mm = to_real(v); }},
      {"sensing.threshold",
       [](EngineConfig& c, const std::string& v) { c.sensing.threshold = to_real(v); }},
      {"sensing.debounce_ms",
       [](EngineConfig& c, const std::string& v) { c.sensing.debounce_ms = to_int(v); }},
      {"tutor.delta_t_ms",
       [](EngineConfig& c, const std::string& v) { c.tutor.delta_t_ms = to_int(v); }},
      {"tutor.hint_pulse_ms",
       [](EngineConfig& c, const std::string& v) { c.tutor.hint_pulse_ms = to_int(v); }},
      {"tutor.tempo_scale",
       [](EngineConfig& c, const std::string& v) { c.tutor.tempo_scale = to_real(v); }},
      {"tutor.hint_scope",
       [](EngineConfig& c, const std::string& v) {
         if (v == "changed") {
           c.tutor.hint_scope = HintScope::Changed;
         } else if (v == "full") {
           c.tutor.hint_scope = HintScope::Full;
         } else {
           throw ConfigError("hint_scope must be 'changed' or 'full'");
         }
       }},
      {"strategy.advance_error_threshold",
       [](EngineConfig& c, const std::string& v) {
         c.strategy.advance_error_threshold = to_real(v);
       }},
      {"strategy.regress_error_threshold",
       [](EngineConfig& c, const std::string& v) {
         c.strategy.regress_error_threshold = to_real(v);
       }},
      {"strategy.min_passes_per_phase",
       [](EngineConfig& c, const std::string& v) {
         c.strategy.min_passes_per_phase = static_cast<int>(to_int(v));
       }},
      {"strategy.exam_strictness",
       [](EngineConfig& c, const std::string& v) {
         if (v == "exact") {
           c.strategy.exam_strictness = ExamStrictness::Exact;
         } else if (v == "contiguous") {
           c.strategy.exam_strictness = ExamStrictness::Contiguous;
         } else {
           throw ConfigError("exam_strictness must be 'exact' or 'contiguous'");
         }
       }},
      {"simlab.gain_passive",
       [](EngineConfig& c, const std::string& v) { c.learner.gain_passive = to_real(v); }},
      {"simlab.gain_active",
       [](EngineConfig& c, const std::string& v) { c.learner.gain_active = to_real(v); }},
      {"simlab.decay_per_min",
       [](EngineConfig& c, const std::string& v) { c.learner.decay_per_min = to_real(v); }},
      {"simlab.motor_noise",
       [](EngineConfig& c, const std::string& v) { c.learner.motor_noise = to_real(v); }},
      {"simlab.latency_min_ms",
       [](EngineConfig& c, const std::string& v) { c.learner.latency_min_ms = to_int(v); }},
      {"simlab.latency_max_ms",
       [](EngineConfig& c, const std::string& v) { c.learner.latency_max_ms = to_int(v); }},
      {"simlab.recall_threshold",
       [](EngineConfig& c, const std::string& v) { c.learner.recall_threshold = to_real(v); }},
      {"simlab.participants",
       [](EngineConfig& c, const std::string& v) {
         c.plan.participants = static_cast<std::size_t>(to_int(v));
       }},
      {"simlab.forget_minutes",
       [](EngineConfig& c, const std::string& v) { c.plan.forget_minutes = to_real(v); }},
      {"simlab.cutoff_minutes",
       [](EngineConfig& c, const std::string& v) { c.plan.cutoff_minutes = to_real(v); }},
      {"simlab.population_spread",
       [](EngineConfig& c, const std::string& v) { c.plan.population_spread = to_real(v); }},
      {"simlab.long_term_days",
       [](EngineConfig& c, const std::string& v) {
         c.plan.long_term_days = static_cast<std::size_t>(to_int(v));
       }},
      {"link.delay_ms",
       [](EngineConfig& c, const std::string& v) { c.link.delay_ms = to_int(v); }},
      {"service.port",
       [](EngineConfig& c, const std::string& v) {
         const auto p = to_int(v);
         if (p < 0 || p > 65535) throw ConfigError("port out of range");
         c.service.port = static_cast<unsigned short>(p);
       }},
      {"service.tick_ms",
       [](EngineConfig& c, const std::string& v) { c.service.tick_ms = to_int(v); }},
      {"service.pass_gap_ms",
       [](EngineConfig& c, const std::string& v) { c.service.pass_gap_ms = to_int(v); }},
  };
  return table;
}

}  // namespace

void apply_setting(EngineConfig& cfg, std::string_view key, std::string_view value) {
  auto it = setters().find(std::string(key));
  if (it == setters().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  try {
    it->second(cfg, std::string(value));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

EngineConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  EngineConfig cfg;
  for (const auto& [section, keys] : tree) {
    if (keys.empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : keys) {
      apply_setting(cfg, section + "." + key, value.get_value<std::string>());
    }
  }
  cfg.validate();
  return cfg;
}

EngineConfig load_config_file(const std::string& path) {
  return parse_config(detail::read_file(path));
}

std::string format_config(const EngineConfig& c) {
  auto mm = [](const Millimeters& v) {
    return detail::format_double(to_double(v));
  };
  auto real = [](double v) { return detail::format_double(v); };
  std::ostringstream os;
  os << "[device]\n"
     << "track_len_mm = " << mm(c.device.geometry.track_len_mm) << '\n'
     << "arm_width_mm = " << mm(c.device.geometry.arm_width_mm) << '\n'
     << "arm_speed_mm_s = " << real(c.device.arm_speed_mm_s) << '\n'
     << "glove_ac_mm = " << real(c.device.glove.ac_mm) << '\n'
     << "glove_bc_mm = " << real(c.device.glove.bc_mm) << "\n\n"
     << "[sensing]\n"
     << "threshold = " << real(c.sensing.threshold) << '\n'
     << "debounce_ms = " << c.sensing.debounce_ms << "\n\n"
     << "[tutor]\n"
     << "delta_t_ms = " << c.tutor.delta_t_ms << '\n'
     << "hint_pulse_ms = " << c.tutor.hint_pulse_ms << '\n'
     << "tempo_scale = " << real(c.tutor.tempo_scale) << '\n'
     << "hint_scope = " << (c.tutor.hint_scope == HintScope::Full ? "full" : "changed")
     << "\n\n"
     << "[strategy]\n"
     << "advance_error_threshold = " << real(c.strategy.advance_error_threshold) << '\n'
     << "regress_error_threshold = " << real(c.strategy.regress_error_threshold) << '\n'
     << "min_passes_per_phase = " << c.strategy.min_passes_per_phase << '\n'
     << "exam_strictness = "
     << (c.strategy.exam_strictness == ExamStrictness::Exact ? "exact" : "contiguous")
     << "\n\n"
     << "[simlab]\n"
     << "gain_passive = " << real(c.learner.gain_passive) << '\n'
     << "gain_active = " << real(c.learner.gain_active) << '\n'
     << "decay_per_min = " << real(c.learner.decay_per_min) << '\n'
     << "motor_noise = " << real(c.learner.motor_noise) << '\n'
     << "latency_min_ms = " << c.learner.latency_min_ms << '\n'
     << "latency_max_ms = " << c.learner.latency_max_ms << '\n'
     << "recall_threshold = " << real(c.learner.recall_threshold) << '\n'
     << "participants = " << c.plan.participants << '\n'
     << "forget_minutes = " << real(c.plan.forget_minutes) << '\n'
     << "cutoff_minutes = " << real(c.plan.cutoff_minutes) << '\n'
     << "population_spread = " << real(c.plan.population_spread) << '\n'
     << "long_term_days = " << c.plan.long_term_days << "\n\n"
     << "[link]\n"
     << "delay_ms = " << c.link.delay_ms << "\n\n"
     << "[service]\n"
     << "port = " << c.service.port << '\n'
     << "tick_ms = " << c.service.tick_ms << '\n'
     << "pass_gap_ms = " << c.service.pass_gap_ms << '\n';
  return os.str();
}

}  // namespace haptutor
