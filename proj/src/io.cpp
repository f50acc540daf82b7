#include "subgeo/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include "subgeo/error.hpp"

namespace subgeo {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "exact";
    case Provenance::McCi: return "mc_ci";
    case Provenance::GridCertified: return "grid_certified";
  }
  return "?";
}

nlohmann::json tagged(double v, Provenance p) {
  nlohmann::json j;
  if (std::isnan(v))
    j["value"] = "nan";
  else if (std::isinf(v))
    j["value"] = v > 0 ? "inf" : "-inf";
  else
    j["value"] = v;
  j["provenance"] = to_string(p);
  return j;
}

nlohmann::json tagged(long v, Provenance p) { return {{"value", v}, {"provenance", to_string(p)}}; }
nlohmann::json tagged(int v, Provenance p) { return tagged(static_cast<long>(v), p); }
nlohmann::json tagged(bool v, Provenance p) { return {{"value", v}, {"provenance", to_string(p)}}; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
    : path_(path), ncols_(columns.size()) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw Error("io", "cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < columns.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", columns[i].c_str());
  std::fputc('\n', f_);
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != ncols_) throw Error("io", "row width does not match the header of " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) std::fputc(',', f_);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>)
            std::fputs(format_double(v).c_str(), f_);
          else if constexpr (std::is_same_v<T, long>)
            std::fprintf(f_, "%ld", v);
          else
            std::fputs(v.c_str(), f_);
        },
        cells[i]);
  }
  std::fputc('\n', f_);
}

std::filesystem::path output_path(const std::string& prefix, const std::string& name) {
  std::filesystem::path p(prefix + "_" + name);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace subgeo
