#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace xirl {

/// Locale-independent shortest round-trip text for a double ('.' decimal separator).
std::string format_number(double value);

/// Streams a header row followed by numeric rows. Every row must match the header width.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  void row(const std::vector<double>& values);

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }

 private:
  std::ostream& out_;
  std::vector<std::string> header_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column, or -1.
  [[nodiscard]] int column(std::string_view name) const;
  [[nodiscard]] std::vector<double> values(std::string_view name) const;
};

/// Parses a numeric CSV with a header row. Throws FormatError naming the
/// source and 1-based line number on malformed content.
CsvTable parse_csv(std::istream& in, std::string_view source_name);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace xirl
