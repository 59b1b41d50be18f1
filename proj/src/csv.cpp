#include "brw/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "brw/errors.hpp"

namespace brw {

void append_number(std::string& out, double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  out.append(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw OutputUnwritable("cannot open " + path.string() + " for writing");
  for (const auto& name : header) field(std::string_view(name));
  end_row();
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CsvWriter::separator() {
  if (row_started_) buffer_.push_back(',');
  row_started_ = true;
}

CsvWriter& CsvWriter::field(double value) {
  separator();
  append_number(buffer_, value);
  return *this;
}

CsvWriter& CsvWriter::field(std::int64_t value) {
  separator();
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  buffer_.append(buf, res.ptr);
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view value) {
  separator();
  buffer_.append(value);
  return *this;
}

void CsvWriter::end_row() {
  buffer_.push_back('\n');
  row_started_ = false;
  flush_if_large();
}

void CsvWriter::flush_if_large() {
  if (buffer_.size() < (1u << 20)) return;
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  buffer_.clear();
  if (!out_) throw OutputUnwritable("write failed: " + path_.string());
}

void CsvWriter::close() {
  if (!out_.is_open()) return;
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  buffer_.clear();
  out_.close();
  if (out_.fail()) throw OutputUnwritable("write failed: " + path_.string());
}

std::vector<std::vector<double>> read_csv_columns(const std::filesystem::path& path,
                                                  const std::vector<std::string>& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigInvalid("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw EmptySample(path.string() + " is empty");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::vector<std::size_t> index;
  for (const auto& name : columns) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ConfigInvalid("column '" + name + "' not found in " + path.string());
    }
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  std::vector<std::vector<double>> out(columns.size());
  std::vector<double> row(header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    std::size_t col = 0;
    while (col < header.size()) {
      const char* comma = std::find(p, end, ',');
      double value = std::nan("");
      const auto res = std::from_chars(p, comma, value);
      if (res.ec != std::errc() && comma != p) {
        // Booleans and other tokens are tolerated in unrequested columns.
        value = std::nan("");
      }
      row[col++] = value;
      if (comma == end) break;
      p = comma + 1;
    }
    if (col != header.size()) {
      throw ConfigInvalid(path.string() + ": short row at line " + std::to_string(line_no));
    }
    for (std::size_t i = 0; i < index.size(); ++i) out[i].push_back(row[index[i]]);
  }
  return out;
}

}  // namespace brw
