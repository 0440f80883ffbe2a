#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spectral/linalg.hpp"

namespace spectral::io {

// File problems map to CLI exit code 66.
struct FileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal string that round-trips the exact double.
std::string format_double(double v);

// Parses a full double; rejects trailing garbage.
double parse_double(const std::string& s, const std::string& context);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Matrix CSV: one row per line, comma separated. Load validates squareness
// and symmetry: relative asymmetry beyond 1e-12 is an error, below it the
// matrix is symmetrized.
SymMatrix load_symmetric_csv(const std::string& path);
std::string matrix_to_csv(const SymMatrix& a);

std::string vector_to_csv_row(const Vector& v);

// SHA-256 of a byte string, hex encoded (manifest input digests).
std::string sha256_hex(const std::string& bytes);

// Plain-text run manifest written next to outputs. Timing lives only here,
// so the numeric outputs of a rerun stay byte-identical.
struct RunManifest {
  std::string command_line;
  std::string version;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;       // frozen effective config
  std::map<std::string, std::string> input_digests;
  std::map<std::string, double> phase_seconds;
  std::vector<std::string> outputs;
  std::string status = "complete";  // complete | partial | error

  std::string render() const;
  void write(const std::string& dir) const;  // <dir>/manifest.txt
};

}  // namespace spectral::io
