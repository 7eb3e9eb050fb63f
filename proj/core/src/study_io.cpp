#include "crt/study_io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "crt/csv_io.hpp"
#include "crt/error.hpp"

namespace crt {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Drops a trailing comment, ignoring '#' inside string literals.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw SchemaError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw SchemaError("config key '" + key + "' must be a number, got " + v.dump());
  return v.get<double>();
}

long long get_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw SchemaError("config key '" + key + "' must be an integer, got " + v.dump());
  return v.get<long long>();
}

std::vector<double> get_numbers(const json& v, const std::string& key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw SchemaError("config key '" + key + "' must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_number(e, key));
  return out;
}

std::vector<std::string> get_strings(const json& v, const std::string& key) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw SchemaError("config key '" + key + "' must be a string or a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError("config key '" + key + "' must list strings, got " + e.dump());
    out.push_back(e.get<std::string>());
  }
  return out;
}

Binning parse_binning(const std::string& s) {
  if (s == "raw") return Binning::Raw;
  if (s == "transformed") return Binning::Transformed;
  throw SchemaError("unknown binning '" + s + "' (expected raw or transformed)");
}

BoundsProcedure parse_bounds(const std::string& s) {
  if (s == "neighborhood") return BoundsProcedure::Neighborhood;
  if (s == "bin") return BoundsProcedure::Bin;
  throw SchemaError("unknown bounds procedure '" + s + "' (expected bin or neighborhood)");
}

std::string na_int(bool present, long long v) { return present ? std::to_string(v) : "NA"; }

std::string procedure_column(const ProcedureSpec& p) {
  std::string s(kind_name(p.kind));
  if (p.kind == ProcedureKind::Conditional && p.bounds == BoundsProcedure::Bin) s += "_bin";
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

template <typename Table, typename Writer>
void write_to_path(const Table& table, const std::filesystem::path& path, Writer writer) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  writer(table, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> expect_fields(const std::string& line, std::size_t count, int line_no) {
  auto fields = csv::split_line(line);
  if (fields.size() != count)
    throw SchemaError("line " + std::to_string(line_no) + ": expected " + std::to_string(count) + " fields, got " +
                      std::to_string(fields.size()));
  return fields;
}

void expect_header(std::istream& in, std::string_view header) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw SchemaError("unexpected CSV header '" + line + "', expected '" + std::string(header) + "'");
}

int parse_int(const std::string& field, const std::string& context) {
  const double v = csv::parse_double(field, context);
  if (!std::isfinite(v) || v != std::floor(v)) throw SchemaError(context + ": expected an integer, got '" + field + "'");
  return static_cast<int>(v);
}

}  // namespace

StudyConfig parse_config(std::istream& in) {
  std::map<std::string, json> values;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SchemaError("config line " + std::to_string(line_no) + " is not of the form key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string text = trim(line.substr(eq + 1));
    if (key.empty()) throw SchemaError("config line " + std::to_string(line_no) + " has an empty key");
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      throw SchemaError("config line " + std::to_string(line_no) + ": cannot parse value of '" + key + "': " + text);
    }
    if (!values.emplace(key, std::move(value)).second) throw SchemaError("config key '" + key + "' appears twice");
  }

  StudyConfig cfg;
  if (!values.count("alpha")) throw SchemaError("config is missing required key 'alpha'");

  std::string cem_mode = "quantile";
  int cem_groups = 2;
  std::optional<int> reference_draws;
  std::optional<BoundsProcedure> bounds;
  std::vector<std::string> procedure_labels;

  for (const auto& [key, v] : values) {
    if (key == "alpha") {
      cfg.alpha = get_number(v, key);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw SchemaError("config key 'seed' must be a non-negative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "replications" || key == "R") {
      cfg.replications = static_cast<int>(get_integer(v, key));
    } else if (key == "draws" || key == "M") {
      cfg.draws = get_integer(v, key);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(get_integer(v, key));
    } else if (key == "models" || key == "model") {
      cfg.models.clear();
      for (const auto& s : get_strings(v, key)) cfg.models.push_back(parse_model(s));
    } else if (key == "betas" || key == "beta") {
      cfg.betas = get_numbers(v, key);
    } else if (key == "taus" || key == "tau") {
      cfg.taus = get_numbers(v, key);
    } else if (key == "designs" || key == "design") {
      const json list = v.is_array() && !v.empty() && v.front().is_number() ? json::array({v}) : v;
      if (!list.is_array()) throw SchemaError("config key '" + key + "' must be a list of [treated, control] pairs");
      cfg.designs.clear();
      for (const auto& d : list) {
        if (d.is_string()) {
          cfg.designs.push_back(Design::parse(d.get<std::string>()));
          continue;
        }
        if (!d.is_array() || d.size() != 2) throw SchemaError("each design must be [treated, control]");
        cfg.designs.push_back(
            Design{static_cast<int>(get_integer(d[0], key)), static_cast<int>(get_integer(d[1], key))});
      }
    } else if (key == "procedures") {
      procedure_labels = get_strings(v, key);
    } else if (key == "sigma_tau") {
      cfg.sigma_tau = get_number(v, key);
    } else if (key == "max_failure_fraction") {
      cfg.max_failure_fraction = get_number(v, key);
    } else if (key == "D") {
      reference_draws = static_cast<int>(get_integer(v, key));
    } else if (key == "bounds") {
      bounds = parse_bounds(get_as<std::string>(v, key));
    } else if (key == "cem.mode") {
      cem_mode = get_as<std::string>(v, key);
      if (cem_mode != "quantile" && cem_mode != "sturges" && cem_mode != "auto")
        throw SchemaError("cem.mode must be \"quantile\", \"sturges\" or \"auto\"");
    } else if (key == "cem.G") {
      cem_groups = static_cast<int>(get_integer(v, key));
    } else if (key == "validity.assignments") {
      cfg.assignments = static_cast<int>(get_integer(v, key));
    } else if (key == "validity.deciles") {
      cfg.deciles = static_cast<int>(get_integer(v, key));
    } else if (key == "validity.binning") {
      cfg.binnings.clear();
      for (const auto& s : get_strings(v, key)) cfg.binnings.push_back(parse_binning(s));
    } else {
      throw SchemaError("unknown config key '" + key + "'");
    }
  }

  for (const auto& label : procedure_labels) {
    if (label == "cem") {
      ProcedureSpec p;
      p.kind = cem_mode == "sturges" ? ProcedureKind::CemSturges
               : cem_mode == "auto"  ? ProcedureKind::CemEqualWidth
                                     : ProcedureKind::CemQuantile;
      p.groups = cem_groups;
      cfg.procedures.push_back(p);
    } else {
      cfg.procedures.push_back(ProcedureSpec::parse(label));
    }
  }
  if (cfg.procedures.empty()) cfg.procedures = StudyConfig::default_procedures();
  for (auto& p : cfg.procedures) {
    if (p.kind != ProcedureKind::Conditional) continue;
    if (reference_draws) p.reference_draws = *reference_draws;
    if (bounds) p.bounds = *bounds;
  }
  cfg.validate();
  return cfg;
}

StudyConfig read_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_config(in);
}

void write_power_csv(const PowerTable& table, std::ostream& out) {
  out << kPowerHeader << '\n';
  for (const auto& r : table.rows) {
    const auto& p = r.procedure;
    const bool cond = p.kind == ProcedureKind::Conditional;
    out << model_name(r.model) << ',' << csv::format_double(r.beta) << ',' << csv::format_double(r.tau) << ','
        << r.design.label() << ',' << procedure_column(p) << ',' << na_int(cond, p.tiers) << ','
        << (cond ? csv::format_double(p.acceptance) : "NA") << ','
        << na_int(p.kind == ProcedureKind::CemQuantile || p.kind == ProcedureKind::CemEqualWidth, p.groups) << ',' << statistic_name(p.statistic) << ','
        << r.replications << ',' << r.draws << ',' << csv::format_double(r.reject_rate) << ','
        << csv::format_double(r.mc_se) << '\n';
  }
}

void write_power_csv(const PowerTable& table, const std::filesystem::path& path) {
  write_to_path(table, path, [](const PowerTable& t, std::ostream& o) { write_power_csv(t, o); });
}

PowerTable parse_power_csv(std::istream& in) {
  expect_header(in, kPowerHeader);
  PowerTable table;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = expect_fields(line, 13, line_no);
    const std::string ctx = "power CSV line " + std::to_string(line_no);
    PowerRow r;
    r.model = parse_model(f[0]);
    r.beta = csv::parse_double(f[1], ctx);
    r.tau = csv::parse_double(f[2], ctx);
    r.design = Design::parse(f[3]);
    ProcedureSpec& p = r.procedure;
    if (f[4] == "unconditional") {
      p.kind = ProcedureKind::Unconditional;
    } else if (f[4] == "conditional" || f[4] == "conditional_bin") {
      p.kind = ProcedureKind::Conditional;
      p.bounds = f[4] == "conditional_bin" ? BoundsProcedure::Bin : BoundsProcedure::Neighborhood;
      p.tiers = parse_int(f[5], ctx);
      p.acceptance = csv::parse_double(f[6], ctx);
    } else if (f[4] == "cem_quantile") {
      p.kind = ProcedureKind::CemQuantile;
      p.groups = parse_int(f[7], ctx);
    } else if (f[4] == "cem_auto") {
      p.kind = ProcedureKind::CemEqualWidth;
      p.groups = parse_int(f[7], ctx);
    } else if (f[4] == "cem_sturges") {
      p.kind = ProcedureKind::CemSturges;
    } else {
      throw SchemaError(ctx + ": unknown procedure '" + f[4] + "'");
    }
    if (f[8] == "sd") {
      p.statistic = StatisticKind::MeanDiff;
    } else if (f[8] == "int") {
      p.statistic = StatisticKind::Interaction;
    } else {
      throw SchemaError(ctx + ": unknown statistic '" + f[8] + "'");
    }
    r.replications = parse_int(f[9], ctx);
    r.draws = parse_int(f[10], ctx);
    r.reject_rate = csv::parse_double(f[11], ctx);
    r.mc_se = csv::parse_double(f[12], ctx);
    table.rows.push_back(r);
  }
  return table;
}

PowerTable read_power_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_power_csv(in);
}

void write_decile_csv(const DecileTable& table, std::ostream& out) {
  out << kDecileHeader << '\n';
  for (const auto& r : table.rows) {
    out << model_name(r.model) << ',' << csv::format_double(r.beta) << ',' << r.procedure << ',' << r.decile << ','
        << r.replications << ',' << csv::format_double(r.reject_rate) << ',' << csv::format_double(r.mc_se) << ','
        << binning_name(r.binning) << '\n';
  }
}

void write_decile_csv(const DecileTable& table, const std::filesystem::path& path) {
  write_to_path(table, path, [](const DecileTable& t, std::ostream& o) { write_decile_csv(t, o); });
}

DecileTable parse_decile_csv(std::istream& in) {
  expect_header(in, kDecileHeader);
  DecileTable table;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = expect_fields(line, 8, line_no);
    const std::string ctx = "decile CSV line " + std::to_string(line_no);
    DecileRow r;
    r.model = parse_model(f[0]);
    r.beta = csv::parse_double(f[1], ctx);
    r.procedure = ProcedureSpec::parse(f[2]).label();
    r.decile = parse_int(f[3], ctx);
    r.replications = parse_int(f[4], ctx);
    r.reject_rate = csv::parse_double(f[5], ctx);
    r.mc_se = csv::parse_double(f[6], ctx);
    r.binning = parse_binning(f[7]);
    table.rows.push_back(r);
  }
  return table;
}

DecileTable read_decile_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_decile_csv(in);
}

}  // namespace crt
