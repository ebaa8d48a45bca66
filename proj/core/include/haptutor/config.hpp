#pragma once

#include <string>
#include <string_view>

#include "haptutor/device.hpp"
#include "haptutor/sensing.hpp"
#include "haptutor/simlab.hpp"
#include "haptutor/strategy.hpp"
#include "haptutor/tutor.hpp"

namespace haptutor {

struct DeviceConfig {
  ServoGeometry geometry;
  double arm_speed_mm_s = 200.0;
  GloveLinkage glove;
};

struct LinkConfig {
  Millis delay_ms = 10;
};

struct ServiceConfig {
  unsigned short port = 8765;
  Millis tick_ms = 10;
  // Pause between the end of one practice pass and the start of the next.
  Millis pass_gap_ms = 1000;
};

// Engine configuration, read from an INI-style file with the sections
// [device] [sensing] [tutor] [strategy] [simlab] [link] [service]. Missing
// keys keep their defaults; unknown sections or keys are rejected.
struct EngineConfig {
  DeviceConfig device;
  SensingConfig sensing;
  TutorConfig tutor;
  StrategyConfig strategy;
  LearnerParams learner;
  ExperimentPlan plan;
  LinkConfig link;
  ServiceConfig service;

  void validate() const;
  SimlabConfig simlab() const;
};

// Throws ConfigError.
EngineConfig parse_config(std::string_view text);
EngineConfig load_config_file(const std::string& path);
std::string format_config(const EngineConfig& cfg);
// Sets one "section.key" value without re-validating. Throws ConfigError.
void apply_setting(EngineConfig& cfg, std::string_view key, std::string_view value);

}  // namespace haptutor
