#pragma once

// CSV output: '.' decimal separator, 17 significant digits, LF line endings,
// metadata rows prefixed with '#'.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "vfc/error.hpp"

namespace vfc::csv {

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) fail(ErrorKind::config, "cannot write '" + path.string() + "'");
  }

  Writer& meta(const std::string& key, const std::string& value) {
    out_ << "# " << key << " = " << value << '\n';
    return *this;
  }
  Writer& meta(const std::string& key, double value) { return meta(key, num(value)); }

  Writer& header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
    return *this;
  }

  Writer& row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << num(vals[i]);
    out_ << '\n';
    return *this;
  }

  Writer& text_row(const std::vector<std::string>& vals) { return header(vals); }

  ~Writer() { out_.flush(); }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Two-column key,value file.
inline void write_key_values(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, std::string>>& rows) {
  Writer w(path);
  w.header({"key", "value"});
  for (const auto& [k, v] : rows) w.text_row({k, v});
}

}  // namespace vfc::csv
