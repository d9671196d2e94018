#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "keeplora/model.hpp"
#include "keeplora/tasks.hpp"
#include "keeplora/trainer.hpp"

namespace keeplora {

struct StreamSpec {
  std::string kind = "gaussian";  // gaussian | planted | csv
  GaussianStreamSpec gaussian;
  // csv streams
  std::vector<std::string> paths;
  int csv_classes = 0;  // 0 infers from data
  // planted streams (spectral-truncation fixtures)
  std::uint64_t planted_seed = 3;
  int planted_d = 16;
  int planted_general = 4;
  int planted_specific = 4;
};

struct SpectraSpec {
  std::uint64_t seed = 3;
  int d = 16;
  int general_energy_rank = 4;
  int specific_direction_count = 4;
  std::vector<int> ks;  // empty: 1..(general+specific)
  double general_drop_max = 2.0;    // accuracy points, 0..100 scale
  double specific_drop_min = 20.0;  // accuracy points, 0..100 scale
};

struct PlasticitySpec {
  bool match_budget = true;
};

struct FullConfig {
  RunConfig run;
  StreamSpec stream;
  ModelSpec model;
  std::string model_source = "random";  // random | planted
  SpectraSpec spectra;
  bool has_spectra = false;
  PlasticitySpec plasticity;
  std::string echo;  // canonical re-serialization of the parsed file
};

/// Parses and validates the JSON config. Missing or ill-typed fields raise
/// ConfigError carrying the dotted field name.
FullConfig load_config(const std::string& path);

TaskStream build_stream(const StreamSpec& spec);
PlantedSpectrumModel build_planted_from_stream(const StreamSpec& spec);

/// Resolves the model spec; for model_source == "planted" the first layer is
/// pinned to the planted weight matrix.
ModelSpec resolve_model(const FullConfig& config);

/// FNV-1a over the generated task data; used as the stream fingerprint in
/// run manifests.
std::string stream_fingerprint(const TaskStream& stream);

}  // namespace keeplora
