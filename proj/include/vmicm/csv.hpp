#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "vmicm/model.hpp"

namespace vmicm {

// Header `y,x1..xq,g1..gp`; the intercept gene column is added on read.
// Throws InputError naming the offending row and column.
Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);

// Writes with 17 significant digits so a read reproduces every value exactly.
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset_file(const std::string& path, const Dataset& data);

// Plain `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> read_key_values(const std::string& path);

std::string format_double(double value);

}  // namespace vmicm
