#include "moral/csv.hpp"

#include <cctype>
#include <stdexcept>

#include "moral/hash.hpp"

namespace moral {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text, char delimiter) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
    row.clear();
  };

  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

CsvTable CsvTable::parse(std::string_view text, char delimiter) {
  auto rows = parse_csv(text, delimiter);
  CsvTable table;
  if (rows.empty()) return table;
  table.header_ = std::move(rows.front());
  table.rows_.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  for (std::size_t r = 0; r < table.rows_.size(); ++r) {
    if (table.rows_[r].size() != table.header_.size()) {
      throw std::runtime_error("csv: row " + std::to_string(r + 2) + " has " +
                               std::to_string(table.rows_[r].size()) + " fields, header has " +
                               std::to_string(table.header_.size()));
    }
  }
  return table;
}

CsvTable CsvTable::read(const std::filesystem::path& path, char delimiter) {
  try {
    return parse(read_file(path), delimiter);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (iequals(header_[i], name)) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::require(std::string_view name, std::string_view context) const {
  if (auto c = column(name)) return *c;
  throw std::runtime_error(std::string(context) + ": missing column '" + std::string(name) + "'");
}

const std::string& CsvTable::at(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }

std::string csv_escape(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace moral
