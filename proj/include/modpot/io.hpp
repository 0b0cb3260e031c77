#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Deterministic text output: identical inputs produce byte-identical files.
// Doubles are printed with %.17g; nothing time- or path-dependent is emitted.

namespace modpot {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            const std::string& provenance = "") {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    out_.open(path, std::ios::binary);
    if (!out_) throw std::runtime_error("cannot open output file `" + path + "`");
    if (!provenance.empty()) out_ << "# " << provenance << "\n";
    for (size_t i = 0; i < header.size(); ++i)
      out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i)
      out_ << format_double(values[i]) << (i + 1 < values.size() ? "," : "\n");
  }

  void row_text(const std::vector<std::string>& values) {
    for (size_t i = 0; i < values.size(); ++i)
      out_ << values[i] << (i + 1 < values.size() ? "," : "\n");
  }

private:
  std::ofstream out_;
};

using KvRecord = std::vector<std::pair<std::string, std::string>>;

inline void write_record(const std::string& path, const KvRecord& kv) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file `" + path + "`");
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

inline bool files_identical(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return ca == cb;
}

}  // namespace modpot
