#include "fracwave/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fracwave {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::string_view kind, const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
  out_ << "# fracwave-" << kind << " v1\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(std::string_view v) {
  if (pending_ >= columns_) throw std::logic_error("too many cells in a row of '" + path_.string() + "'");
  if (pending_ > 0) out_ << ',';
  out_ << v;
  ++pending_;
  return *this;
}

void CsvWriter::end_row() {
  if (pending_ != columns_) throw std::logic_error("incomplete row in '" + path_.string() + "'");
  out_ << '\n';
  pending_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("failed writing '" + path_.string() + "'");
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (std::getline(in, line) && line.rfind("# fracwave-", 0) == 0) {
    const auto rest = line.substr(11);
    t.kind = rest.substr(0, rest.find(' '));
    std::getline(in, line);
  }
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split(line));
  }
  return t;
}

}  // namespace fracwave
