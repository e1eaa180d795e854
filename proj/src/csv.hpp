// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace trimreg {

// Shortest string that parses back to exactly x ('.' decimal separator,
// locale independent). Keeps CSV output byte-stable across runs.
std::string format_double(double x);

double parse_double(const std::string& s);
long long parse_int(const std::string& s);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Comma separated, header row, '\n' newlines, UTF-8. Fields must be free of
// commas, quotes and newlines (everything written here is numeric or a plain
// token); offending fields throw rather than silently corrupting the file.
void write_table(const std::string& path, const Table& table);
Table read_table(const std::string& path);

}  // namespace trimreg
