#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace feasplan::harness {

namespace fs = std::filesystem;

// Writes to a sibling temporary file, then renames over path.
void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

// Ordered key-value pairs, one `key = value` per line.
using Manifest = std::vector<std::pair<std::string, std::string>>;
std::string manifest_text(const Manifest& m);
Manifest parse_manifest(std::string_view text);
// Value of key; throws FormatError when absent.
const std::string& manifest_value(const Manifest& m, std::string_view key);

// Output directory assembled under a temporary name and promoted on commit.
// Uncommitted staging directories are removed on destruction.
class StagedDir {
 public:
  explicit StagedDir(fs::path target);
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir();

  [[nodiscard]] const fs::path& path() const { return staging_; }
  [[nodiscard]] fs::path file(std::string_view name) const { return staging_ / name; }
  void commit();

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

// Shortest decimal form that reads back to the same double.
std::string format_number(double v);
double parse_number(std::string_view s);

}  // namespace feasplan::harness
