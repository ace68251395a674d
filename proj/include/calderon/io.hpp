#pragma once

#include <string>
#include <vector>

namespace calderon {

// Shortest round-trip decimal form ("%.17g"), the single number format of every output.
std::string format_number(double v);

// RFC 4180 CSV with a header row, CRLF line ends and quoting where needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  void add_numbers(const std::vector<double>& values);
  std::string str() const;
  // Throws IoError carrying the path when the file cannot be written.
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(const std::string& cell);

// Throws IoError with the path on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace calderon
