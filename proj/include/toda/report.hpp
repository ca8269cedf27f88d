#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include "toda/fem.hpp"

namespace toda {

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& p);

// %.17g, "nan" / "inf" / "-inf" for non-finite values.
std::string fmt17(double v);

// Comma separated, one header row, numbers at 17 significant digits. Lines
// starting with '#' carry metadata (seed, config hash, footers).
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void comment(const std::string& line);
  CsvWriter& add(double v);
  CsvWriter& add(long long v);
  CsvWriter& add(int v) { return add(static_cast<long long>(v)); }
  CsvWriter& add(const std::string& v);
  void end_row();
  std::string str() const;
  std::size_t rows() const { return rows_; }

 private:
  std::vector<std::string> cols_;
  std::vector<std::string> head_, body_;
  std::vector<std::string> cur_;
  std::size_t rows_ = 0;
};

// Mesh (Mesh::write format), then "field <name> <n>" and one value per node.
void write_field_dump(std::ostream& os, const ScalarField& f, const std::string& name);

// Output directory of one run. Files are written through it; finish() writes
// manifest.json listing every file in the directory with its SHA-256.
class RunOutput {
 public:
  // Creates `dir`. A non-empty directory is only accepted if it holds the
  // manifest of an earlier run; the files listed there are removed first.
  RunOutput(std::filesystem::path dir, std::string command, std::string config_hash,
            std::uint64_t seed);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& content);

  void stage_begin(const std::string& name);
  void stage_end(const std::string& name, const std::string& status, const std::string& message = "");
  void finish();

  struct Stage {
    std::string name, status, message;
    double seconds = 0;
  };
  const std::vector<Stage>& stages() const { return stages_; }

 private:
  std::filesystem::path dir_;
  std::string command_, hash_;
  std::uint64_t seed_;
  std::string started_;
  std::vector<Stage> stages_;
  std::vector<double> t0_;
};

const char* artifact_version();

}  // namespace toda
