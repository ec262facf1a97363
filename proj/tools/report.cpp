#include "report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace mfbwalk::cli {

using nlohmann::json;

json model_to_json(const WalkModel &model) {
  const RawParameters &m = model.parameters();
  return json{{"p", m.p},   {"q", m.q},   {"r", m.r},
              {"p0", m.p0}, {"q0", m.q0}, {"r0", m.r0},
              {"s0", m.s0}, {"N", m.N},   {"i0", m.i0}};
}

namespace {

double number_field(const json &j, const char *key) {
  if (!j.contains(key))
    throw SchemaError(std::string("model is missing field '") + key + "'");
  const json &v = j.at(key);
  if (!v.is_number())
    throw SchemaError(std::string("model field '") + key +
                      "' must be a number");
  return v.get<double>();
}

std::int64_t integer_field(const json &j, const char *key) {
  if (!j.contains(key))
    throw SchemaError(std::string("model is missing field '") + key + "'");
  const json &v = j.at(key);
  if (v.is_number_integer())
    return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15)
      return static_cast<std::int64_t>(d);
  }
  throw SchemaError(std::string("model field '") + key +
                    "' must be an integer");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_cell(const std::optional<double> &v) {
  return v ? format_double(*v) : std::string();
}

std::string csv_index(const json &index) {
  if (index.is_string())
    return index.get<std::string>();
  if (index.is_null())
    return {};
  return index.dump();
}

json optional_number(const std::optional<double> &v) {
  if (!v || !std::isfinite(*v))
    return nullptr;
  return *v;
}

} // namespace

RawParameters model_from_json(const json &j) {
  if (!j.is_object())
    throw SchemaError("model must be a JSON object");
  RawParameters m;
  m.p = number_field(j, "p");
  m.q = number_field(j, "q");
  m.r = number_field(j, "r");
  m.p0 = number_field(j, "p0");
  m.q0 = number_field(j, "q0");
  m.r0 = number_field(j, "r0");
  m.s0 = number_field(j, "s0");
  m.N = integer_field(j, "N");
  m.i0 = integer_field(j, "i0");
  return m;
}

std::optional<double> Row::delta() const {
  if (closed_form && oracle)
    return std::abs(*closed_form - *oracle);
  return std::nullopt;
}

void write_report(std::ostream &out, OutputFormat format,
                  const std::string &command, const WalkModel &model,
                  const std::vector<Row> &rows,
                  const std::string &extra_column) {
  if (format == OutputFormat::Json) {
    json jrows = json::array();
    for (const Row &r : rows) {
      json jr{{"quantity", r.quantity},
              {"index", r.index},
              {"closed_form", optional_number(r.closed_form)},
              {"oracle", optional_number(r.oracle)},
              {"delta", optional_number(r.delta())},
              {"tolerance", optional_number(r.tolerance)}};
      if (r.absorption_mass)
        jr["absorption_mass"] = *r.absorption_mass;
      if (r.pass)
        jr["pass"] = *r.pass;
      jrows.push_back(std::move(jr));
    }
    json doc{{"command", command},
             {"model", model_to_json(model)},
             {"branch", to_string(model.branch())},
             {"rows", std::move(jrows)}};
    out << doc.dump(2) << '\n';
    return;
  }

  out << "quantity,index,closed_form,oracle,delta,tolerance";
  if (!extra_column.empty())
    out << ',' << extra_column;
  out << '\n';
  for (const Row &r : rows) {
    out << r.quantity << ',' << csv_index(r.index) << ','
        << csv_cell(r.closed_form) << ',' << csv_cell(r.oracle) << ','
        << csv_cell(r.delta()) << ',' << csv_cell(r.tolerance);
    if (extra_column == "absorption_mass")
      out << ',' << csv_cell(r.absorption_mass);
    else if (extra_column == "pass")
      out << ',' << (r.pass ? (*r.pass ? "true" : "false") : "");
    out << '\n';
  }
}

json golden_to_json(const std::vector<GoldenRecord> &records) {
  json arr = json::array();
  for (const GoldenRecord &g : records) {
    json rec{{"model", g.model},
             {"quantity", g.quantity},
             {"index", g.index},
             {"value", g.value},
             {"error_bound", g.error_bound},
             {"oracle", g.oracle}};
    for (const auto &[key, value] : g.provenance.items())
      rec[key] = value;
    arr.push_back(std::move(rec));
  }
  return arr;
}

std::vector<GoldenRecord> golden_from_json(const json &j) {
  if (!j.is_array())
    throw SchemaError("golden file must hold a JSON array of records");
  static const char *const kCore[] = {"model", "quantity", "index", "value",
                                      "error_bound", "oracle"};
  std::vector<GoldenRecord> out;
  for (const json &rec : j) {
    for (const char *key : kCore)
      if (!rec.contains(key))
        throw SchemaError(std::string("golden record is missing '") + key +
                          "'");
    GoldenRecord g;
    g.model = rec.at("model");
    g.quantity = rec.at("quantity").get<std::string>();
    g.index = rec.at("index");
    g.value = rec.at("value").get<double>();
    g.error_bound = rec.at("error_bound").get<double>();
    g.oracle = rec.at("oracle").get<std::string>();
    g.provenance = json::object();
    for (const auto &[key, value] : rec.items()) {
      bool core = false;
      for (const char *c : kCore)
        core = core || key == c;
      if (!core)
        g.provenance[key] = value;
    }
    out.push_back(std::move(g));
  }
  return out;
}

} // namespace mfbwalk::cli
