#ifndef PLUGSMC_CSV_HPP
#define PLUGSMC_CSV_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace plugsmc {

/// Shortest round-trip-safe text for a double ("nan", "inf", "-inf" for
/// non-finite values). Output is locale independent.
std::string format_number(double value);

/// Comma-separated writer with a fixed header. Cells are written exactly as
/// formatted, so identical inputs give byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  CsvWriter& cell(double value);
  CsvWriter& cell(long long value);
  CsvWriter& cell(int value) { return cell(static_cast<long long>(value)); }
  CsvWriter& cell(std::string_view text);
  void end_row();

  long rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t columns_;
  std::size_t filled_ = 0;
  long rows_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws DomainError when absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> numeric_column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace plugsmc

#endif  // PLUGSMC_CSV_HPP
