#pragma once

// JSON encodings of parameters, selection results and experiment reports.
// Parameters are stored as {"n_inputs", "n_hidden", "values"} where values is
// the flat layout: first layer row-major, bias1, output weights, bias2.

#include <charconv>
#include <string>
#include <vector>

#include "json.hpp"

#include "agl/core_net.hpp"
#include "agl/error.hpp"
#include "agl/metrics.hpp"
#include "agl/optim.hpp"
#include "agl/pipeline.hpp"

namespace agl::io {

using nlohmann::json;

inline constexpr const char* kParamLayout = "first_layer_row_major,bias1,output_weights,bias2";

inline json params_to_json(const NetworkParams& p) {
  return json{{"n_inputs", p.n_inputs()},
              {"n_hidden", p.n_hidden()},
              {"layout", kParamLayout},
              {"values", std::vector<double>(p.flat().begin(), p.flat().end())}};
}

inline NetworkParams params_from_json(const json& j) {
  try {
    return NetworkParams::from_flat(j.at("n_inputs").get<std::size_t>(),
                                    j.at("n_hidden").get<std::size_t>(),
                                    j.at("values").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed parameter object: ") + e.what());
  }
}

inline json cv_table_to_json(const std::vector<CvEntry>& table) {
  json out = json::array();
  for (const auto& e : table) out.push_back({{"value", e.value}, {"mean_loss", e.mean_loss}});
  return out;
}

inline json selection_to_json(const SelectionResult& r) {
  json j{{"method", to_string(r.method)},
         {"params", params_to_json(r.fitted)},
         {"norms", r.norms},
         {"selected", r.selected},
         {"chosen_lambda", r.chosen_lambda},
         {"chosen_zeta", r.chosen_zeta ? json(*r.chosen_zeta) : json(nullptr)},
         {"cv_table", cv_table_to_json(r.cv_table)},
         {"trace", r.trace},
         {"warnings", r.warnings}};
  if (!r.lambda_cv_table.empty()) j["lambda_cv_table"] = cv_table_to_json(r.lambda_cv_table);
  return j;
}

inline json record_to_json(const ReplicationRecord& r) {
  json j{{"sigma2", r.sigma2},
         {"method", to_string(r.method)},
         {"replication", r.replication},
         {"selected", r.selected},
         {"support", r.support},
         {"norms", r.norms},
         {"chosen_lambda", r.chosen_lambda},
         {"chosen_zeta", r.chosen_zeta ? json(*r.chosen_zeta) : json(nullptr)},
         {"failed", r.failed}};
  if (r.failed) j["error"] = r.error;
  return j;
}

inline ReplicationRecord record_from_json(const json& j) {
  ReplicationRecord r;
  r.sigma2 = j.at("sigma2").get<double>();
  const auto m = parse_method(j.at("method").get<std::string>());
  if (!m) throw ContractViolation("unknown method in report: " + j.at("method").dump());
  r.method = *m;
  r.replication = j.at("replication").get<int>();
  r.selected = j.at("selected").get<std::vector<bool>>();
  r.support = j.at("support").get<std::vector<bool>>();
  r.norms = j.value("norms", std::vector<double>{});
  r.chosen_lambda = j.value("chosen_lambda", 0.0);
  if (j.contains("chosen_zeta") && !j.at("chosen_zeta").is_null())
    r.chosen_zeta = j.at("chosen_zeta").get<double>();
  r.failed = j.value("failed", false);
  r.error = j.value("error", std::string{});
  return r;
}

inline json report_to_json(const ExperimentReport& report) {
  json recs = json::array();
  for (const auto& r : report.records) recs.push_back(record_to_json(r));
  return json{{"records", recs}};
}

inline ExperimentReport report_from_json(const json& j) {
  try {
    ExperimentReport report;
    for (const auto& r : j.at("records")) report.records.push_back(record_from_json(r));
    return report;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed experiment report: ") + e.what());
  }
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace agl::io
