#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moral {

/// RFC 4180 reader: quoted fields may contain the delimiter, doubled quotes
/// and newlines. A UTF-8 byte-order mark on the first field is dropped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter = ',');

/// A parsed file with a header row; columns are looked up by name.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path, char delimiter = ',');
  static CsvTable parse(std::string_view text, char delimiter = ',');

  std::size_t rows() const noexcept { return rows_.size(); }
  const std::vector<std::string>& header() const noexcept { return header_; }
  /// Case-insensitive column lookup.
  std::optional<std::size_t> column(std::string_view name) const;
  /// Like column() but throws naming `context` when the column is missing.
  std::size_t require(std::string_view name, std::string_view context) const;
  const std::string& at(std::size_t row, std::size_t col) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Quote a field if it contains the delimiter, a quote or a line break.
std::string csv_escape(std::string_view field, char delimiter = ',');

}  // namespace moral
