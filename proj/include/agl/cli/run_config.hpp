#pragma once

// Resolved configuration for the command-line tool. A run is configured by a
// flat JSON object (from --config) with command-line flags layered on top;
// unknown keys and ill-typed values are rejected before anything runs.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "agl/core_net.hpp"
#include "agl/io/csv.hpp"
#include "agl/optim.hpp"
#include "agl/pipeline.hpp"
#include "agl/simgen.hpp"

namespace agl::cli {

using nlohmann::json;

/// Invalid configuration; the tool exits with status 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  TrainConfig train;
  SimConfig sim;
  PipelineConfig pipeline;
  Method method = Method::GL_AGL;
  std::vector<Method> methods = {Method::GL, Method::ERM_AGL, Method::GL_AGL};
  int repeats = 100;
  Task task = Task::regression;
  std::string data;
  char delimiter = ',';
  int target_column = -1;
  io::HeaderMode header = io::HeaderMode::detect;
  std::string names;
  std::string fit;
  std::string mask;
  std::string input;
  std::string output = ".";
  unsigned jobs = 1;
};

namespace detail {

enum class Kind { integer, unsigned_integer, number, string, number_list, string_list };

struct KeySpec {
  const char* name;
  Kind kind;
};

inline const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"epochs", Kind::integer},          {"batch_size", Kind::integer},
      {"learning_rate", Kind::number},    {"mode", Kind::string},
      {"seed", Kind::unsigned_integer},   {"init_scale", Kind::number},
      {"hidden", Kind::integer},          {"n_significant", Kind::integer},
      {"n_nonsignificant", Kind::integer}, {"n", Kind::integer},
      {"sigma2", Kind::number_list},      {"repeats", Kind::integer},
      {"method", Kind::string},           {"methods", Kind::string_list},
      {"lambda_grid", Kind::number_list}, {"zeta_grid", Kind::number_list},
      {"folds", Kind::integer},           {"gamma", Kind::number},
      {"cutoff", Kind::number},           {"freeze_tol", Kind::number},
      {"task", Kind::string},             {"data", Kind::string},
      {"delimiter", Kind::string},        {"target_column", Kind::integer},
      {"header", Kind::string},           {"names", Kind::string},
      {"fit", Kind::string},              {"mask", Kind::string},
      {"input", Kind::string},            {"output", Kind::string},
      {"jobs", Kind::integer},
  };
  return keys;
}

inline bool type_ok(const json& v, Kind kind) {
  switch (kind) {
    case Kind::integer:
      return v.is_number_integer();
    case Kind::unsigned_integer:
      return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case Kind::number:
      return v.is_number();
    case Kind::string:
      return v.is_string();
    case Kind::number_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
    case Kind::string_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
  }
  return false;
}

inline Method method_or_throw(const std::string& s) {
  const auto m = parse_method(s);
  if (!m) throw ConfigError("unknown method '" + s + "' (expected GL, ERM_AGL or GL_AGL)");
  return *m;
}

inline int positive(const json& j, const char* key) {
  const int v = j.at(key).get<int>();
  if (v < 1) throw ConfigError(std::string("'") + key + "' must be >= 1");
  return v;
}

}  // namespace detail

/// Rejects unknown keys and wrongly typed values.
inline void validate_schema(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto& keys = detail::schema();
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const detail::KeySpec& k) { return key == k.name; });
    if (it == keys.end()) throw ConfigError("unknown configuration key '" + key + "'");
    if (!detail::type_ok(value, it->kind))
      throw ConfigError("configuration key '" + key + "' has the wrong type");
  }
}

/// Builds a RunConfig from `j` (config file merged with flag overrides).
/// Task-dependent defaults: binary tasks train with cross-entropy, batch 32
/// and the wider classification grid.
inline RunConfig resolve(const json& j) {
  validate_schema(j);
  RunConfig c;
  try {
    if (j.contains("task")) {
      const auto t = j.at("task").get<std::string>();
      if (t == "regression")
        c.task = Task::regression;
      else if (t == "binary")
        c.task = Task::binary;
      else
        throw ConfigError("task must be 'regression' or 'binary'");
    }
    if (c.task == Task::binary) {
      c.train.loss = LossKind::binary_cross_entropy;
      c.train.batch_size = 32;
      c.pipeline.lambda_grid = default_classification_grid();
    }

    auto& t = c.train;
    if (j.contains("epochs")) t.epochs = detail::positive(j, "epochs");
    if (j.contains("batch_size")) t.batch_size = detail::positive(j, "batch_size");
    if (j.contains("learning_rate")) t.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "subgradient")
        t.mode = TrainMode::subgradient;
      else if (m == "proximal")
        t.mode = TrainMode::proximal;
      else
        throw ConfigError("mode must be 'subgradient' or 'proximal'");
    }
    if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("init_scale")) t.init_scale = j.at("init_scale").get<double>();
    if (j.contains("hidden")) t.n_hidden = static_cast<std::size_t>(detail::positive(j, "hidden"));

    auto& s = c.sim;
    s.n_hidden = t.n_hidden;
    s.seed = t.seed;
    if (j.contains("n_significant"))
      s.n_significant = static_cast<std::size_t>(detail::positive(j, "n_significant"));
    if (j.contains("n_nonsignificant")) {
      const int v = j.at("n_nonsignificant").get<int>();
      if (v < 0) throw ConfigError("'n_nonsignificant' must be >= 0");
      s.n_nonsignificant = static_cast<std::size_t>(v);
    }
    if (j.contains("n")) s.n = static_cast<std::size_t>(detail::positive(j, "n"));
    if (j.contains("sigma2")) s.sigma2_list = j.at("sigma2").get<std::vector<double>>();
    if (j.contains("repeats")) c.repeats = detail::positive(j, "repeats");
    s.repeats = c.repeats;

    if (j.contains("method")) c.method = detail::method_or_throw(j.at("method").get<std::string>());
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(detail::method_or_throw(m.get<std::string>()));
      if (c.methods.empty()) throw ConfigError("'methods' must not be empty");
    }

    auto& p = c.pipeline;
    if (j.contains("lambda_grid")) p.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    if (j.contains("zeta_grid")) p.zeta_grid = j.at("zeta_grid").get<std::vector<double>>();
    if (j.contains("folds")) p.folds = j.at("folds").get<int>();
    if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
    if (j.contains("cutoff")) p.cutoff = j.at("cutoff").get<double>();
    if (j.contains("freeze_tol")) p.freeze_tol = j.at("freeze_tol").get<double>();

    if (j.contains("data")) c.data = j.at("data").get<std::string>();
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw ConfigError("delimiter must be a single character");
      c.delimiter = d[0];
    }
    if (j.contains("target_column")) c.target_column = j.at("target_column").get<int>();
    if (j.contains("header")) {
      const auto h = j.at("header").get<std::string>();
      if (h == "detect")
        c.header = io::HeaderMode::detect;
      else if (h == "present")
        c.header = io::HeaderMode::present;
      else if (h == "absent")
        c.header = io::HeaderMode::absent;
      else
        throw ConfigError("header must be 'detect', 'present' or 'absent'");
    }
    if (j.contains("names")) c.names = j.at("names").get<std::string>();
    if (j.contains("fit")) c.fit = j.at("fit").get<std::string>();
    if (j.contains("mask")) c.mask = j.at("mask").get<std::string>();
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("jobs")) c.jobs = static_cast<unsigned>(detail::positive(j, "jobs"));

    t.validate();
    p.validate();
    s.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

inline const char* to_string(io::HeaderMode h) {
  switch (h) {
    case io::HeaderMode::detect:
      return "detect";
    case io::HeaderMode::present:
      return "present";
    case io::HeaderMode::absent:
      return "absent";
  }
  return "?";
}

/// Fully resolved configuration, every key present. `jobs` and `output` are
/// left out: they do not influence results, and omitting them keeps result
/// files identical across thread counts and output locations.
inline json to_json(const RunConfig& c) {
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(agl::to_string(m));
  return json{
      {"epochs", c.train.epochs},
      {"batch_size", c.train.batch_size},
      {"learning_rate", c.train.learning_rate},
      {"mode", agl::to_string(c.train.mode)},
      {"seed", c.train.seed},
      {"init_scale", c.train.init_scale},
      {"hidden", c.train.n_hidden},
      {"n_significant", c.sim.n_significant},
      {"n_nonsignificant", c.sim.n_nonsignificant},
      {"n", c.sim.n},
      {"sigma2", c.sim.sigma2_list},
      {"repeats", c.repeats},
      {"method", agl::to_string(c.method)},
      {"methods", methods},
      {"lambda_grid", c.pipeline.lambda_grid},
      {"zeta_grid", std::vector<double>(c.pipeline.zetas().begin(), c.pipeline.zetas().end())},
      {"folds", c.pipeline.folds},
      {"gamma", c.pipeline.gamma},
      {"cutoff", c.pipeline.cutoff},
      {"freeze_tol", c.pipeline.freeze_tol},
      {"task", agl::to_string(c.task)},
      {"data", c.data},
      {"delimiter", std::string(1, c.delimiter)},
      {"target_column", c.target_column},
      {"header", to_string(c.header)},
      {"names", c.names},
      {"fit", c.fit},
      {"mask", c.mask},
      {"input", c.input},
  };
}

}  // namespace agl::cli
