#include "keeplora/config.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "keeplora/errors.hpp"

namespace keeplora {

namespace {

using nlohmann::json;

const json& require(const json& parent, const std::string& key,
                    const std::string& path) {
  auto it = parent.find(key);
  if (it == parent.end()) {
    throw ConfigError(path, "missing required field");
  }
  return *it;
}

double require_number(const json& parent, const std::string& key,
                      const std::string& path) {
  const json& v = require(parent, key, path);
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

int require_int(const json& parent, const std::string& key,
                const std::string& path) {
  const json& v = require(parent, key, path);
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t require_u64(const json& parent, const std::string& key,
                          const std::string& path) {
  const json& v = require(parent, key, path);
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<std::uint64_t>();
}

std::string require_string(const json& parent, const std::string& key,
                           const std::string& path) {
  const json& v = require(parent, key, path);
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

int optional_int(const json& parent, const std::string& key, int fallback,
                 const std::string& path) {
  auto it = parent.find(key);
  if (it == parent.end()) return fallback;
  if (!it->is_number_integer()) throw ConfigError(path, "expected an integer");
  return it->get<int>();
}

double optional_number(const json& parent, const std::string& key,
                       double fallback, const std::string& path) {
  auto it = parent.find(key);
  if (it == parent.end()) return fallback;
  if (!it->is_number()) throw ConfigError(path, "expected a number");
  return it->get<double>();
}

}  // namespace

namespace {

FullConfig load_config_impl(const json& root);

}  // namespace

FullConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config", "cannot open '" + path + "'");
  }
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  try {
    return load_config_impl(root);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    // Ill-typed values inside arrays or object keys are config mistakes,
    // not runtime failures.
    throw ConfigError("config", e.what());
  }
}

namespace {

FullConfig load_config_impl(const json& root) {
  FullConfig config;

  const json& run = require(root, "run", "run");
  config.run.epsilon_w = require_number(run, "epsilon_w", "run.epsilon_w");
  config.run.epsilon_f = require_number(run, "epsilon_f", "run.epsilon_f");
  config.run.r = require_int(run, "r", "run.r");
  config.run.alpha = require_number(run, "alpha", "run.alpha");
  config.run.lr = require_number(run, "lr", "run.lr");
  config.run.batch_size = require_int(run, "batch_size", "run.batch_size");
  config.run.epochs_per_task =
      require_int(run, "epochs_per_task", "run.epochs_per_task");
  config.run.optimizer =
      parse_optimizer(require_string(run, "optimizer", "run.optimizer"));
  config.run.variant =
      parse_init_variant(require_string(run, "variant", "run.variant"));
  config.run.seed = require_u64(run, "seed", "run.seed");
  config.run.feature_sample_size = optional_int(
      run, "feature_sample_size", 512, "run.feature_sample_size");
  config.run.grad_init_batches =
      optional_int(run, "grad_init_batches", 1, "run.grad_init_batches");
  const auto layer_key = [](const std::string& key, const char* field) {
    try {
      std::size_t used = 0;
      const int layer = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
      return layer;
    } catch (const std::exception&) {
      throw ConfigError(field, "layer key '" + key + "' is not an integer");
    }
  };
  if (auto it = run.find("epsilon_w_per_layer"); it != run.end()) {
    if (!it->is_object()) {
      throw ConfigError("run.epsilon_w_per_layer", "expected an object");
    }
    for (const auto& [key, value] : it->items()) {
      config.run.epsilon_w_per_layer[layer_key(key, "run.epsilon_w_per_layer")] =
          value.get<double>();
    }
  }
  if (auto it = run.find("r_per_layer"); it != run.end()) {
    if (!it->is_object()) {
      throw ConfigError("run.r_per_layer", "expected an object");
    }
    for (const auto& [key, value] : it->items()) {
      config.run.r_per_layer[layer_key(key, "run.r_per_layer")] =
          value.get<int>();
    }
  }
  config.run.validate();

  const json& stream = require(root, "stream", "stream");
  config.stream.kind = require_string(stream, "kind", "stream.kind");
  if (config.stream.kind == "gaussian") {
    GaussianStreamSpec& g = config.stream.gaussian;
    g.seed = require_u64(stream, "seed", "stream.seed");
    g.n_tasks = require_int(stream, "n_tasks", "stream.n_tasks");
    g.d_in = require_int(stream, "d_in", "stream.d_in");
    g.classes_per_task =
        require_int(stream, "classes_per_task", "stream.classes_per_task");
    g.samples_per_class =
        require_int(stream, "samples_per_class", "stream.samples_per_class");
    g.subspace_overlap = require_number(stream, "subspace_overlap",
                                        "stream.subspace_overlap");
    g.noise_sigma =
        optional_number(stream, "noise_sigma", 0.3, "stream.noise_sigma");
    g.mean_norm =
        optional_number(stream, "mean_norm", 3.0, "stream.mean_norm");
  } else if (config.stream.kind == "planted") {
    config.stream.planted_seed = require_u64(stream, "seed", "stream.seed");
    config.stream.planted_d = require_int(stream, "d", "stream.d");
    config.stream.planted_general = require_int(stream, "general_energy_rank",
                                                "stream.general_energy_rank");
    config.stream.planted_specific = require_int(
        stream, "specific_direction_count", "stream.specific_direction_count");
  } else if (config.stream.kind == "csv") {
    const json& paths = require(stream, "paths", "stream.paths");
    if (!paths.is_array() || paths.empty()) {
      throw ConfigError("stream.paths", "expected a non-empty array");
    }
    for (const json& p : paths) {
      config.stream.paths.push_back(p.get<std::string>());
    }
    config.stream.csv_classes =
        optional_int(stream, "classes", 0, "stream.classes");
  } else {
    throw ConfigError("stream.kind",
                      "expected gaussian, planted, or csv, got '" +
                          config.stream.kind + "'");
  }

  const json& model = require(root, "model", "model");
  const json& dims = require(model, "dims", "model.dims");
  if (!dims.is_array() || dims.size() < 2) {
    throw ConfigError("model.dims", "expected an array of at least 2 sizes");
  }
  for (const json& d : dims) config.model.dims.push_back(d.get<int>());
  config.model.activation =
      parse_activation(require_string(model, "activation", "model.activation"));
  const json& adapted = require(model, "adapted_layers", "model.adapted_layers");
  if (!adapted.is_array()) {
    throw ConfigError("model.adapted_layers", "expected an array");
  }
  for (const json& l : adapted) {
    config.model.adapted_layers.push_back(l.get<int>());
  }
  config.model.init_seed =
      require_u64(model, "init_seed", "model.init_seed");
  config.model.init_scale =
      optional_number(model, "init_scale", 1.0, "model.init_scale");
  if (auto it = model.find("source"); it != model.end()) {
    config.model_source = it->get<std::string>();
    if (config.model_source != "random" && config.model_source != "planted") {
      throw ConfigError("model.source", "expected random or planted");
    }
  }

  if (auto it = root.find("spectra"); it != root.end()) {
    config.has_spectra = true;
    const json& spectra = *it;
    config.spectra.seed = require_u64(spectra, "seed", "spectra.seed");
    config.spectra.d = require_int(spectra, "d", "spectra.d");
    config.spectra.general_energy_rank = require_int(
        spectra, "general_energy_rank", "spectra.general_energy_rank");
    config.spectra.specific_direction_count =
        require_int(spectra, "specific_direction_count",
                    "spectra.specific_direction_count");
    if (auto ks = spectra.find("ks"); ks != spectra.end()) {
      for (const json& k : *ks) config.spectra.ks.push_back(k.get<int>());
    }
    config.spectra.general_drop_max = optional_number(
        spectra, "general_drop_max", 2.0, "spectra.general_drop_max");
    config.spectra.specific_drop_min = optional_number(
        spectra, "specific_drop_min", 20.0, "spectra.specific_drop_min");
  }

  if (auto it = root.find("plasticity"); it != root.end()) {
    if (auto mb = it->find("match_budget"); mb != it->end()) {
      config.plasticity.match_budget = mb->get<bool>();
    }
  }

  config.echo = root.dump(2);
  return config;
}

}  // namespace

TaskStream build_stream(const StreamSpec& spec) {
  if (spec.kind == "gaussian") {
    return gen_gaussian_tasks(spec.gaussian);
  }
  if (spec.kind == "planted") {
    PlantedSpectrumModel planted = build_planted_from_stream(spec);
    TaskStream stream;
    stream.master_seed = spec.planted_seed;
    stream.tasks.push_back(std::move(planted.general));
    stream.tasks.push_back(std::move(planted.specific));
    return stream;
  }
  if (spec.kind == "csv") {
    // The split hash is keyed on a fixed master seed so reloading the same
    // files always reproduces the same task.
    return load_csv_tasks(spec.paths, 0x637376ULL, spec.csv_classes);
  }
  throw ConfigError("stream.kind", "unknown stream kind '" + spec.kind + "'");
}

PlantedSpectrumModel build_planted_from_stream(const StreamSpec& spec) {
  return gen_planted_spectrum_model(spec.planted_seed, spec.planted_d,
                                    spec.planted_general,
                                    spec.planted_specific);
}

ModelSpec resolve_model(const FullConfig& config) {
  ModelSpec spec = config.model;
  if (config.model_source == "planted") {
    if (config.stream.kind != "planted") {
      throw ConfigError("model.source",
                        "planted model requires a planted stream");
    }
    PlantedSpectrumModel planted = build_planted_from_stream(config.stream);
    if (spec.dims.size() != 2 ||
        spec.dims[0] != static_cast<int>(planted.weight.rows()) ||
        spec.dims[1] != static_cast<int>(planted.weight.cols())) {
      throw ConfigError("model.dims",
                        "planted model needs dims [d, class_count]");
    }
    spec.fixed_first_weight = planted.weight;
  }
  return spec;
}

std::string stream_fingerprint(const TaskStream& stream) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&hash](const void* data, std::size_t size) {
    const unsigned char* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  for (const Task& task : stream.tasks) {
    mix_bytes(task.name.data(), task.name.size());
    for (const Batch* batch : {&task.train, &task.test}) {
      mix_bytes(batch->inputs.data().data(),
                batch->inputs.data().size() * sizeof(double));
      mix_bytes(batch->labels.data(), batch->labels.size() * sizeof(int));
    }
  }
  char buffer[24];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace keeplora
