#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "crt/data.hpp"

namespace crt {

/// Reads an experiment from CSV with header `x1,...,xp,w,y`.
/// Rows with missing fields, non-numeric values or w outside {0,1} are rejected.
ExperimentData read_experiment_csv(const std::filesystem::path& path);
ExperimentData parse_experiment_csv(std::istream& in);

void write_experiment_csv(const ExperimentData& data, const std::filesystem::path& path);
void write_experiment_csv(const ExperimentData& data, std::ostream& out);

namespace csv {

/// Splits one line on commas. Quoted fields are not supported.
std::vector<std::string> split_line(const std::string& line);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

double parse_double(const std::string& field, const std::string& context);

}  // namespace csv

}  // namespace crt
