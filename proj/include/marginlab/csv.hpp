#pragma once

#include <charconv>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "marginlab/config.hpp"
#include "marginlab/version.hpp"

namespace marginlab {

// Shortest decimal representation that round-trips the double exactly, so
// CSV diffs are meaningful.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// CSV file with a '#'-prefixed manifest header block. The header carries
// everything needed to reproduce the file: command, version, seed, config
// hash and the full config echo. Wall-clock duration is deliberately kept
// out so reruns are byte-identical.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& command, const Config& cfg,
            std::uint64_t seed) {
    out_.open(path, std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open output file '" + path + "'");
    out_ << "# command: " << command << "\n";
    out_ << "# version: " << kVersion << "\n";
    out_ << "# seed: " << seed << "\n";
    out_ << "# config-hash: " << config_hash(cfg) << "\n";
    for (const auto& [k, v] : cfg.entries()) out_ << "# config: " << k << " = " << v << "\n";
  }

  void header(const std::vector<std::string>& columns) { row_strings(columns); }

  void row_strings(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  class Row {
   public:
    explicit Row(std::ofstream& out) : out_(out) {}
    Row& operator<<(double v) {
      sep();
      out_ << format_double(v);
      return *this;
    }
    template <std::integral T>
    Row& operator<<(T v) {
      sep();
      out_ << v;
      return *this;
    }
    Row& operator<<(const std::string& v) {
      sep();
      out_ << v;
      return *this;
    }
    Row& operator<<(const char* v) {
      sep();
      out_ << v;
      return *this;
    }
    ~Row() { out_ << '\n'; }

   private:
    void sep() {
      if (!first_) out_ << ',';
      first_ = false;
    }
    std::ofstream& out_;
    bool first_ = true;
  };

  Row row() { return Row(out_); }

 private:
  std::ofstream out_;
};

}  // namespace marginlab
