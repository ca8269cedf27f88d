#include "toda/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace toda {

namespace fs = std::filesystem;

const char* artifact_version() { return "0.4.0"; }

namespace {

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (unsigned i = 0; i < n; ++i) {
    s[2 * i] = digits[d[i] >> 4];
    s[2 * i + 1] = digits[d[i] & 15];
  }
  return s;
}

struct Digest {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Digest() {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  }
  ~Digest() { EVP_MD_CTX_free(ctx); }
  void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx, p, n); }
  std::string final() {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    EVP_DigestFinal_ex(ctx, out, &n);
    return hex(out, n);
  }
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  Digest d;
  d.update(data.data(), data.size());
  return d.final();
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  Digest d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.final();
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : cols_(std::move(columns)) {}

void CsvWriter::comment(const std::string& line) {
  (rows_ == 0 && cur_.empty() ? head_ : body_).push_back("# " + line);
}

CsvWriter& CsvWriter::add(double v) {
  cur_.push_back(fmt17(v));
  return *this;
}
CsvWriter& CsvWriter::add(long long v) {
  cur_.push_back(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::add(const std::string& v) {
  if (v.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    cur_.push_back(q + "\"");
  } else {
    cur_.push_back(v);
  }
  return *this;
}

void CsvWriter::end_row() {
  if (cur_.size() != cols_.size())
    throw DimensionError("CSV row has " + std::to_string(cur_.size()) + " fields, header has " +
                         std::to_string(cols_.size()));
  std::string line;
  for (std::size_t i = 0; i < cur_.size(); ++i) line += (i ? "," : "") + cur_[i];
  body_.push_back(std::move(line));
  cur_.clear();
  ++rows_;
}

std::string CsvWriter::str() const {
  std::string s;
  for (const auto& l : head_) s += l + "\n";
  for (std::size_t i = 0; i < cols_.size(); ++i) s += (i ? "," : "") + cols_[i];
  s += "\n";
  for (const auto& l : body_) s += l + "\n";
  return s;
}

void write_field_dump(std::ostream& os, const ScalarField& f, const std::string& name) {
  f.mesh->write(os);
  os << "field " << name << " " << f.values.size() << "\n";
  for (Eigen::Index i = 0; i < f.values.size(); ++i) os << fmt17(f.values[i]) << "\n";
}

RunOutput::RunOutput(fs::path dir, std::string command, std::string config_hash, std::uint64_t seed)
    : dir_(std::move(dir)), command_(std::move(command)), hash_(std::move(config_hash)), seed_(seed) {
  std::error_code ec;
  if (fs::exists(dir_)) {
    if (!fs::is_directory(dir_)) throw ConfigError("output path '" + dir_.string() + "' is not a directory");
    const bool empty = fs::is_empty(dir_);
    if (!empty) {
      const fs::path man = dir_ / "manifest.json";
      if (!fs::exists(man))
        throw ConfigError("output directory '" + dir_.string() + "' is not empty and holds no manifest");
      nlohmann::json j;
      try {
        std::ifstream in(man);
        in >> j;
      } catch (const std::exception&) {
        throw ConfigError("unreadable manifest in '" + dir_.string() + "'");
      }
      for (const auto& f : j.value("files", nlohmann::json::array())) {
        const fs::path p = dir_ / f.value("path", std::string());
        if (p.lexically_normal().string().rfind(dir_.lexically_normal().string(), 0) == 0) fs::remove(p, ec);
      }
      fs::remove(man, ec);
      if (!fs::is_empty(dir_))
        throw ConfigError("output directory '" + dir_.string() + "' holds files the previous manifest did not list");
    }
  }
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  started_ = utc_now();
}

void RunOutput::write(const std::string& name, const std::string& content) {
  const fs::path p = path(name);
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void RunOutput::stage_begin(const std::string& name) {
  stages_.push_back({name, "running", "", 0});
  t0_.push_back(now_s());
}

void RunOutput::stage_end(const std::string& name, const std::string& status, const std::string& message) {
  for (std::size_t i = stages_.size(); i-- > 0;)
    if (stages_[i].name == name && stages_[i].status == "running") {
      stages_[i].status = status;
      stages_[i].message = message;
      stages_[i].seconds = now_s() - t0_[i];
      return;
    }
  stages_.push_back({name, status, message, 0});
  t0_.push_back(now_s());
}

void RunOutput::finish() {
  nlohmann::json j;
  j["artifact_version"] = artifact_version();
  j["command"] = command_;
  j["config_hash"] = hash_;
  j["seed"] = seed_;
  j["started"] = started_;
  j["finished"] = utc_now();
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages_)
    j["stages"].push_back({{"name", s.name}, {"status", s.status}, {"message", s.message}, {"seconds", s.seconds}});
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir_))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  j["files"] = nlohmann::json::array();
  for (const auto& f : files)
    j["files"].push_back({{"path", fs::relative(f, dir_).generic_string()},
                          {"bytes", fs::file_size(f)},
                          {"sha256", sha256_file(f)}});
  write("manifest.json", j.dump(2) + "\n");
}

}  // namespace toda
