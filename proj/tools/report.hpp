#pragma once

// Report rows, model JSON and golden-value files shared by the CLI commands.

#include "mfbwalk/walk_model.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mfbwalk::cli {

/// A model file or JSON document does not follow {p,q,r,p0,q0,r0,s0,N,i0}.
class SchemaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

nlohmann::json model_to_json(const WalkModel &model);
RawParameters model_from_json(const nlohmann::json &j);

/// One line of a report. `index` is an integer site/barrier index, or a
/// string for compound indices such as "0:2" (reach) or "" (totals).
struct Row {
  std::string quantity;
  nlohmann::json index;
  std::optional<double> closed_form;
  std::optional<double> oracle;
  std::optional<double> tolerance;
  std::optional<double> absorption_mass; // visits only
  std::optional<bool> pass;              // verify only

  /// |closed_form - oracle| when both are present.
  std::optional<double> delta() const;
};

enum class OutputFormat { Json, Csv };

/// JSON: {"command", "model", "rows": [{quantity, index, closed_form,
/// oracle, delta, tolerance, ...}]}. CSV columns, in order:
/// quantity,index,closed_form,oracle,delta,tolerance then absorption_mass
/// (visits) or pass (verify) when `extra_column` names one.
void write_report(std::ostream &out, OutputFormat format,
                  const std::string &command, const WalkModel &model,
                  const std::vector<Row> &rows,
                  const std::string &extra_column = {});

/// Golden record: one oracle value with its provenance.
struct GoldenRecord {
  nlohmann::json model;
  std::string quantity;
  nlohmann::json index;
  double value = 0.0;
  double error_bound = 0.0;
  std::string oracle;        // "truncated_solver", "periodic_solve", ...
  nlohmann::json provenance; // {"K": ..} / {"seed": .., "walks": ..} / {"steps": [..]}
};

nlohmann::json golden_to_json(const std::vector<GoldenRecord> &records);
std::vector<GoldenRecord> golden_from_json(const nlohmann::json &j);

} // namespace mfbwalk::cli
