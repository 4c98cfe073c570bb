#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace fracwave {

/// Shortest text that round-trips a double (17 significant digits).
std::string format_double(double v);

/// Writes `# fracwave-<kind> v1`, a header line, then rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view kind, const std::vector<std::string>& columns);

  CsvWriter& cell(double v);
  template <class I>
    requires std::is_integral_v<I>
  CsvWriter& cell(I v) {
    if constexpr (std::is_same_v<I, bool>) {
      return cell(std::string_view(v ? "true" : "false"));
    } else {
      return cell(std::string_view(std::to_string(v)));
    }
  }
  CsvWriter& cell(std::string_view v);
  CsvWriter& cell(const char* v) { return cell(std::string_view(v)); }
  CsvWriter& cell(const std::string& v) { return cell(std::string_view(v)); }
  void end_row();
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t pending_ = 0;
};

struct CsvTable {
  std::string kind;  // from the version line, e.g. "inequality"
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace fracwave
