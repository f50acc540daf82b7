#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace subgeo {

/// How a number in a summary was obtained.
enum class Provenance { Exact, McCi, GridCertified };
const char* to_string(Provenance p);

/// {"value": v, "provenance": "..."}; non-finite values become the strings
/// "inf", "-inf", "nan" so the document stays valid JSON.
nlohmann::json tagged(double v, Provenance p);
nlohmann::json tagged(long v, Provenance p);
nlohmann::json tagged(int v, Provenance p);
nlohmann::json tagged(bool v, Provenance p);

/// Floats as %.17g; integers and strings as is.
std::string format_double(double v);

class CsvWriter {
 public:
  using Cell = std::variant<double, long, std::string>;

  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<Cell>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::size_t ncols_;
  std::FILE* f_ = nullptr;
};

/// `prefix` + "_" + name, creating the parent directory.
std::filesystem::path output_path(const std::string& prefix, const std::string& name);

/// UTC, ISO 8601. Only ever written under "metadata".
std::string utc_timestamp();

}  // namespace subgeo
