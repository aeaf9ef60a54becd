#include "feasplan/harness/io.hpp"

#include "feasplan/common/error.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

namespace feasplan::harness {

namespace {

std::string unique_suffix() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[32];
  std::snprintf(buf, sizeof(buf), ".tmp-%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += unique_suffix();
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string manifest_text(const Manifest& m) {
  std::string out;
  for (const auto& [k, v] : m) out += k + " = " + v + "\n";
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest: expected key = value, got '" + line + "'");
    m.emplace_back(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
  }
  return m;
}

const std::string& manifest_value(const Manifest& m, std::string_view key) {
  for (const auto& [k, v] : m) {
    if (k == key) return v;
  }
  throw FormatError("manifest: missing '" + std::string(key) + "'");
}

StagedDir::StagedDir(fs::path target) : target_(std::move(target)) {
  staging_ = target_;
  staging_ += unique_suffix();
  fs::create_directories(staging_);
}

StagedDir::~StagedDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedDir::commit() {
  std::error_code ec;
  if (fs::exists(target_)) fs::remove_all(target_);
  fs::rename(staging_, target_, ec);
  if (ec) throw Error("cannot promote " + staging_.string() + " to " + target_.string() + ": " + ec.message());
  committed_ = true;
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_number(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace feasplan::harness
