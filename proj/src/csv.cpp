// Copyright (c) 2026 trimreg developers.
// SPDX-License-Identifier: Apache-2.0
#include "csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace trimreg {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double out = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::runtime_error("not a number: '" + s + "'");
  return out;
}

long long parse_int(const std::string& s) {
  long long out = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("not an integer: '" + s + "'");
  return out;
}

namespace {

void check_field(const std::string& f) {
  for (char c : f)
    if (c == ',' || c == '"' || c == '\n' || c == '\r')
      throw std::runtime_error("csv field needs quoting, refusing to write: '" + f + "'");
}

void write_row(std::ofstream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    check_field(row[i]);
    if (i) out << ',';
    out << row[i];
  }
  out << '\n';
}

}  // namespace

void write_table(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_row(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::runtime_error("csv row width mismatch writing " + path);
    write_row(out, row);
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw std::runtime_error("empty csv: " + path);
  return table;
}

}  // namespace trimreg
