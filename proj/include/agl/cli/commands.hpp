#pragma once

// Subcommands of the `agl` tool. Every command prints its resolved
// configuration, writes its result files into the output directory, and
// returns 0 on success, 1 on usage/configuration/input errors and 2 on
// numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "agl/cli/run_config.hpp"
#include "agl/experiment.hpp"
#include "agl/io/csv.hpp"
#include "agl/io/json.hpp"
#include "agl/metrics.hpp"
#include "agl/pipeline.hpp"

namespace agl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

namespace detail {

inline std::filesystem::path output_path(const RunConfig& c, const std::string& file) {
  std::filesystem::create_directories(c.output);
  return std::filesystem::path(c.output) / file;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline std::string rate_csv(const std::vector<RateRow>& rows, const char* column) {
  std::ostringstream out;
  out << "sigma2,method,feature," << column << "\n";
  for (const auto& r : rows)
    out << io::format_double(r.sigma2) << ',' << to_string(r.method) << ',' << r.feature << ','
        << io::format_double(r.rate) << "\n";
  return out.str();
}

inline void write_rate_tables(const RunConfig& c, const ExperimentReport& report) {
  write_text(output_path(c, "fdr.csv"), rate_csv(fdr_table(report), "fdr"));
  write_text(output_path(c, "tpr.csv"), rate_csv(tpr_table(report), "tpr"));
}

struct Input {
  Dataset data;
  std::vector<std::string> names;
};

inline Input load_input(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("this command needs a data file (--data)");
  auto loaded = io::load_table(c.data, c.delimiter, c.target_column, c.task, c.header);
  Input in{std::move(loaded.data), std::move(loaded.feature_names)};
  if (!c.names.empty()) in.names = io::load_names(c.names);
  if (in.names.size() != in.data.n_inputs()) {
    in.names.clear();
    for (std::size_t k = 0; k < in.data.n_inputs(); ++k) in.names.push_back("x" + std::to_string(k));
  }
  return in;
}

inline json header(const char* command, const RunConfig& c) {
  return json{{"command", command}, {"config", to_json(c)}};
}

/// Accepts a mask written by `select` / `fit` (top-level or nested "selected").
inline std::vector<bool> mask_from_json(const json& j) {
  if (j.contains("selected")) return j.at("selected").get<std::vector<bool>>();
  if (j.contains("result") && j.at("result").contains("selected"))
    return j.at("result").at("selected").get<std::vector<bool>>();
  throw ConfigError("mask file has no 'selected' array");
}

inline NetworkParams params_from_fit(const json& j) {
  if (j.contains("params")) return io::params_from_json(j.at("params"));
  if (j.contains("result") && j.at("result").contains("params"))
    return io::params_from_json(j.at("result").at("params"));
  throw ConfigError("fit file has no 'params' object");
}

}  // namespace detail

inline void cmd_simulate(const RunConfig& c, std::ostream& out) {
  const auto report = run_experiment(c.sim, c.methods, c.pipeline, c.train, c.jobs);
  json j = detail::header("simulate", c);
  json seeds = json::array();
  for (int r = 0; r < c.sim.repeats; ++r) {
    const auto s = replication_seeds(c.sim.seed, r);
    seeds.push_back({{"replication", r}, {"model", s.model}, {"data", s.data}, {"train", s.train}});
  }
  j["replication_seeds"] = seeds;
  j["report"] = io::report_to_json(report);
  detail::write_json(detail::output_path(c, "simulate.json"), j);
  detail::write_rate_tables(c, report);
  std::size_t failed = 0;
  for (const auto& r : report.records) failed += r.failed;
  out << "simulate: " << report.records.size() << " records, " << failed << " failed\n";
}

inline void cmd_report(const RunConfig& c, std::ostream& out) {
  if (c.input.empty()) throw ConfigError("report needs --input (a simulate.json file)");
  const json src = detail::read_json(c.input);
  if (!src.contains("report")) throw ConfigError("'" + c.input + "' has no 'report' section");
  const auto report = io::report_from_json(src.at("report"));
  json j = detail::header("report", c);
  json fdr = json::array(), tpr = json::array();
  for (const auto& r : fdr_table(report))
    fdr.push_back({{"sigma2", r.sigma2}, {"method", to_string(r.method)}, {"feature", r.feature}, {"fdr", r.rate}});
  for (const auto& r : tpr_table(report))
    tpr.push_back({{"sigma2", r.sigma2}, {"method", to_string(r.method)}, {"feature", r.feature}, {"tpr", r.rate}});
  j["fdr"] = fdr;
  j["tpr"] = tpr;
  detail::write_json(detail::output_path(c, "report.json"), j);
  detail::write_rate_tables(c, report);
  out << "report: " << fdr.size() << " FDR rows, " << tpr.size() << " TPR rows\n";
}

inline void cmd_fit(const RunConfig& c, std::ostream& out) {
  const auto in = detail::load_input(c);
  const auto result = run_pipeline(in.data, c.method, c.pipeline, c.train);
  json j = detail::header("fit", c);
  j["n"] = in.data.size();
  j["feature_names"] = in.names;
  j["result"] = io::selection_to_json(result);
  detail::write_json(detail::output_path(c, "fit.json"), j);
  for (const auto& w : result.warnings) out << "warning: " << w << "\n";
  std::size_t kept = 0;
  for (bool b : result.selected) kept += b;
  out << "fit: " << to_string(c.method) << " selected " << kept << " of " << result.selected.size()
      << " features\n";
}

inline void cmd_cv(const RunConfig& c, std::ostream& out) {
  const auto in = detail::load_input(c);
  json j = detail::header("cv", c);
  j["method"] = to_string(c.method);
  auto stage_json = [](const CvResult& r) {
    return json{{"best", r.best}, {"table", io::cv_table_to_json(r.table)}};
  };
  std::optional<NetworkParams> init;
  if (c.method == Method::GL || c.method == Method::GL_AGL) {
    auto gl = agl::detail::group_lasso_stage(in.data, c.pipeline, c.train);
    j["lambda"] = stage_json(gl.cv);
    init = std::move(gl.fit.params);
  } else {
    init = fit_erm(in.data, c.train).params;
  }
  if (c.method != Method::GL) {
    const auto ad = agl::detail::adaptive_stage(in.data, *init, c.pipeline, c.train);
    j["zeta"] = stage_json(ad.cv);
  }
  detail::write_json(detail::output_path(c, "cv.json"), j);
  out << "cv: " << to_string(c.method) << " done\n";
}

inline void cmd_select(const RunConfig& c, std::ostream& out) {
  if (c.fit.empty()) throw ConfigError("select needs --fit (a fit.json file)");
  const auto params = detail::params_from_fit(detail::read_json(c.fit));
  const auto norms = group_norms(params);
  const auto mask = select_features(norms, c.pipeline.cutoff);
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) kept.push_back(k);
  json j = detail::header("select", c);
  j["cutoff"] = c.pipeline.cutoff;
  j["norms"] = norms;
  j["selected"] = mask;
  j["selected_features"] = kept;
  detail::write_json(detail::output_path(c, "select.json"), j);
  out << "select: " << kept.size() << " of " << mask.size() << " features above "
      << c.pipeline.cutoff << "\n";
}

inline void cmd_stability(const RunConfig& c, std::ostream& out) {
  const auto in = detail::load_input(c);
  const auto st = stability_run(in.data, c.method, c.pipeline, c.train, c.repeats, c.jobs);
  json j = detail::header("stability", c);
  j["feature_names"] = in.names;
  j["frequency"] = st.frequency;
  j["seeds"] = st.seeds;
  j["masks"] = st.masks;
  detail::write_json(detail::output_path(c, "stability.json"), j);
  std::ostringstream csv;
  csv << "feature,name,frequency\n";
  for (std::size_t k = 0; k < st.frequency.size(); ++k) {
    std::string name = in.names[k];
    std::replace(name.begin(), name.end(), ',', ';');
    csv << k << ",\"" << name << "\"," << io::format_double(st.frequency[k]) << "\n";
  }
  detail::write_text(detail::output_path(c, "stability.csv"), csv.str());
  out << "stability: " << c.repeats << " runs\n";
}

inline void cmd_validate(const RunConfig& c, std::ostream& out) {
  const auto in = detail::load_input(c);
  if (c.mask.empty()) throw ConfigError("validate needs --mask (a select.json or fit.json file)");
  const auto mask = detail::mask_from_json(detail::read_json(c.mask));
  if (mask.size() != in.data.n_inputs())
    throw ConfigError("mask length does not match the number of features");
  const auto v = validation_study(in.data, mask, c.train, c.repeats, c.jobs);
  json j = detail::header("validate", c);
  j["mask"] = mask;
  j["mean_accuracy_full"] = v.mean_accuracy_full;
  j["mean_accuracy_selected"] = v.mean_accuracy_selected;
  j["accuracy_full"] = v.accuracy_full;
  j["accuracy_selected"] = v.accuracy_selected;
  detail::write_json(detail::output_path(c, "validate.json"), j);
  out << "validate: full " << v.mean_accuracy_full << ", selected " << v.mean_accuracy_selected
      << "\n";
}

namespace detail {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs, epochs, batch_size, hidden, repeats, folds, target_column, n,
      n_significant, n_nonsignificant;
  std::optional<double> cutoff, gamma, learning_rate, init_scale;
  std::optional<std::string> delimiter, mode, method, task, data, names, fit, mask, input,
      output, header;
  std::vector<std::string> methods;
  std::vector<double> sigma2, lambda_grid, zeta_grid;
};

inline void add_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "JSON configuration file");
  sub.add_option("--seed", f.seed, "base random seed");
  sub.add_option("--jobs", f.jobs, "maximum concurrent tasks");
  sub.add_option("--delimiter", f.delimiter, "field delimiter of the data file");
  sub.add_option("--cutoff", f.cutoff, "selection cutoff on group norms");
  sub.add_option("--gamma", f.gamma, "adaptive weight exponent");
  sub.add_option("--epochs", f.epochs, "training epochs");
  sub.add_option("--mode", f.mode, "subgradient or proximal")
      ->check(CLI::IsMember({"subgradient", "proximal"}));
  sub.add_option("--batch-size", f.batch_size);
  sub.add_option("--learning-rate", f.learning_rate);
  sub.add_option("--init-scale", f.init_scale);
  sub.add_option("--hidden", f.hidden, "hidden width");
  sub.add_option("--repeats", f.repeats, "replications / stability runs / validation splits");
  sub.add_option("--folds", f.folds, "cross-validation folds");
  sub.add_option("--method", f.method, "GL, ERM_AGL or GL_AGL");
  sub.add_option("--methods", f.methods, "methods for simulate");
  sub.add_option("--task", f.task, "regression or binary");
  sub.add_option("--data", f.data, "input table");
  sub.add_option("--target-column", f.target_column, "target column index (negative: from end)");
  sub.add_option("--header", f.header, "detect, present or absent");
  sub.add_option("--names", f.names, "feature names file, one per line");
  sub.add_option("--fit", f.fit, "fit.json for select");
  sub.add_option("--mask", f.mask, "mask file for validate");
  sub.add_option("--input", f.input, "simulate.json for report");
  sub.add_option("--output", f.output, "output directory");
  sub.add_option("--n", f.n, "simulated sample size");
  sub.add_option("--n-significant", f.n_significant);
  sub.add_option("--n-nonsignificant", f.n_nonsignificant);
  sub.add_option("--sigma2", f.sigma2, "noise variances");
  sub.add_option("--lambda-grid", f.lambda_grid);
  sub.add_option("--zeta-grid", f.zeta_grid);
}

inline json overrides(const Flags& f) {
  json j = json::object();
  auto put = [&](const char* key, const auto& opt) {
    if (opt) j[key] = *opt;
  };
  put("seed", f.seed);
  put("jobs", f.jobs);
  put("delimiter", f.delimiter);
  put("cutoff", f.cutoff);
  put("gamma", f.gamma);
  put("epochs", f.epochs);
  put("mode", f.mode);
  put("batch_size", f.batch_size);
  put("learning_rate", f.learning_rate);
  put("init_scale", f.init_scale);
  put("hidden", f.hidden);
  put("repeats", f.repeats);
  put("folds", f.folds);
  put("method", f.method);
  put("task", f.task);
  put("data", f.data);
  put("target_column", f.target_column);
  put("header", f.header);
  put("names", f.names);
  put("fit", f.fit);
  put("mask", f.mask);
  put("input", f.input);
  put("output", f.output);
  put("n", f.n);
  put("n_significant", f.n_significant);
  put("n_nonsignificant", f.n_nonsignificant);
  if (!f.methods.empty()) j["methods"] = f.methods;
  if (!f.sigma2.empty()) j["sigma2"] = f.sigma2;
  if (!f.lambda_grid.empty()) j["lambda_grid"] = f.lambda_grid;
  if (!f.zeta_grid.empty()) j["zeta_grid"] = f.zeta_grid;
  return j;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Neural-network feature selection with the adaptive group lasso", "agl"};
  app.require_subcommand(1);
  detail::Flags flags;
  using Command = void (*)(const RunConfig&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"simulate", "replicated simulation study; writes simulate.json, fdr.csv, tpr.csv", cmd_simulate},
      {"fit", "run a selection pipeline on a data file; writes fit.json", cmd_fit},
      {"cv", "cross-validation tables for a pipeline; writes cv.json", cmd_cv},
      {"select", "threshold the group norms of a saved fit; writes select.json", cmd_select},
      {"stability", "selection frequency over repeated fits; writes stability.json/.csv", cmd_stability},
      {"validate", "held-out accuracy, full vs selected features; writes validate.json", cmd_validate},
      {"report", "re-render a simulate.json into fdr.csv/tpr.csv/report.json", cmd_report},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) {
    subs.push_back(app.add_subcommand(name, help));
    detail::add_flags(*subs.back(), flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    json merged = json::object();
    if (!flags.config.empty()) {
      merged = detail::read_json(flags.config);
      validate_schema(merged);
    }
    merged.update(detail::overrides(flags));
    const RunConfig cfg = resolve(merged);
    out << to_json(cfg).dump(2) << "\n";
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) std::get<2>(commands[i])(cfg, out);
    return kExitOk;
  } catch (const DivergenceError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace agl::cli
