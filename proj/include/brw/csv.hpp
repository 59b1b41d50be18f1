#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace brw {

/// Buffered CSV writer. Numbers use the shortest round-trip representation,
/// so identical values always produce identical bytes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& field(double value);
  CsvWriter& field(std::int64_t value);
  CsvWriter& field(std::string_view value);
  void end_row();
  void close();

 private:
  void separator();
  void flush_if_large();

  std::filesystem::path path_;
  std::ofstream out_;
  std::string buffer_;
  bool row_started_ = false;
};

/// Appends the shortest round-trip decimal form of `value`.
void append_number(std::string& out, double value);

/// Reads the named numeric columns (in the order given) from a CSV file.
/// Throws ConfigInvalid for an unreadable file, a missing column or a short row.
std::vector<std::vector<double>> read_csv_columns(const std::filesystem::path& path,
                                                  const std::vector<std::string>& columns);

}  // namespace brw
