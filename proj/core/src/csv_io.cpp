#include "crt/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "crt/error.hpp"

namespace crt {

namespace csv {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("failed to format number");
  return std::string(buf, ptr);
}

double parse_double(const std::string& field, const std::string& context) {
  if (field.empty()) throw SchemaError("missing value for " + context);
  if (field == "NA") return std::nan("");
  if (field == "inf" || field == "Inf") return INFINITY;
  if (field == "-inf" || field == "-Inf") return -INFINITY;
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw SchemaError("non-numeric value '" + field + "' for " + context);
  return value;
}

}  // namespace csv

ExperimentData parse_experiment_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("experiment CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = csv::split_line(line);
  if (header.size() < 3) throw SchemaError("experiment CSV needs columns x1..xp,w,y");
  const std::size_t p = header.size() - 2;
  for (std::size_t j = 0; j < p; ++j) {
    if (header[j] != "x" + std::to_string(j + 1))
      throw SchemaError("expected column 'x" + std::to_string(j + 1) + "' at position " + std::to_string(j + 1) +
                        ", found '" + header[j] + "'");
  }
  if (header[p] != "w" || header[p + 1] != "y") throw SchemaError("last two columns must be 'w' and 'y'");

  std::vector<double> xs;
  std::vector<std::uint8_t> w;
  std::vector<double> y;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size())
      throw SchemaError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string ctx = "column '" + header[j] + "' in row " + std::to_string(row);
      if (fields[j].empty() || fields[j] == "NA") throw SchemaError("missing value for " + ctx);
      const double v = csv::parse_double(fields[j], ctx);
      if (!std::isfinite(v)) throw SchemaError("non-finite value for " + ctx);
      if (j < p) {
        xs.push_back(v);
      } else if (j == p) {
        if (v != 0.0 && v != 1.0) throw SchemaError("treatment must be 0 or 1 in row " + std::to_string(row));
        w.push_back(static_cast<std::uint8_t>(v));
      } else {
        y.push_back(v);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(w.size());
  Matrix x(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j)
      x(i, j) = xs[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(j)];
  return ExperimentData(std::move(x), Assignment(std::move(w)), Eigen::Map<Vector>(y.data(), n));
}

ExperimentData read_experiment_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_experiment_csv(in);
}

void write_experiment_csv(const ExperimentData& data, std::ostream& out) {
  const int p = data.covariate_count();
  for (int j = 0; j < p; ++j) out << 'x' << (j + 1) << ',';
  out << "w,y\n";
  const auto& x = data.covariates();
  for (int i = 0; i < data.units(); ++i) {
    for (int j = 0; j < p; ++j) out << csv::format_double(x(i, j)) << ',';
    out << static_cast<int>(data.observed_assignment()[i]) << ',' << csv::format_double(data.outcomes()(i)) << '\n';
  }
}

void write_experiment_csv(const ExperimentData& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_experiment_csv(data, out);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace crt
