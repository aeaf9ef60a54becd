#include "feasplan/common/error.hpp"
#include "feasplan/common/hash.hpp"
#include "feasplan/denoiser/denoiser.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace feasplan::denoiser {
namespace {

constexpr const char* kMagic = "feasplan_checkpoint";
constexpr int kVersion = 1;

void put_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes.data(), 8);
}

double get_le(std::istream& is) {
  std::array<unsigned char, 8> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), 8)) {
    throw FormatError("checkpoint: truncated parameter data");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i)]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string header_line(std::istream& is, const std::string& key) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("checkpoint: missing '" + key + "'");
  if (line.rfind(key + " ", 0) != 0) {
    throw FormatError("checkpoint: expected '" + key + "', got '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

std::uint64_t parse_hex(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 16);
    if (used != s.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint: bad " + key + " '" + s + "'");
  }
}

}  // namespace

void write_checkpoint(std::ostream& os, const DenoiserParams& params, const CheckpointMeta& meta) {
  params.validate();
  os << kMagic << ' ' << kVersion << '\n';
  os << "mode " << mode_name(params.mode) << '\n';
  os << "horizon " << params.horizon << '\n';
  os << "time_dim " << params.time.dim << '\n';
  os << "layers " << params.weights.front().rows();
  for (const Tensor& w : params.weights) os << ' ' << w.cols();
  os << '\n';
  os << "schedule_hash " << hex64(meta.schedule_hash) << '\n';
  os << "config_hash " << hex64(meta.config_hash) << '\n';
  os << "seed " << meta.seed << '\n';
  os << "end_header\n";
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const Tensor& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_le(os, w(r, c));
    }
    for (Eigen::Index c = 0; c < params.biases[l].cols(); ++c) put_le(os, params.biases[l](0, c));
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  Checkpoint ck;
  std::string line;
  if (!std::getline(is, line)) throw FormatError("checkpoint: empty stream");
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != kMagic) throw FormatError("checkpoint: bad magic '" + magic + "'");
    if (version != kVersion) {
      throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
    }
  }
  DenoiserParams& p = ck.params;
  p.mode = parse_mode(header_line(is, "mode"));
  p.horizon = static_cast<std::size_t>(std::stoul(header_line(is, "horizon")));
  p.time.dim = std::stoi(header_line(is, "time_dim"));
  std::vector<Eigen::Index> sizes;
  {
    std::istringstream ls(header_line(is, "layers"));
    Eigen::Index n = 0;
    while (ls >> n) sizes.push_back(n);
  }
  if (sizes.size() < 2) throw FormatError("checkpoint: need at least two layer sizes");
  ck.meta.schedule_hash = parse_hex(header_line(is, "schedule_hash"), "schedule_hash");
  ck.meta.config_hash = parse_hex(header_line(is, "config_hash"), "config_hash");
  ck.meta.seed = std::stoull(header_line(is, "seed"));
  if (!std::getline(is, line) || line != "end_header") {
    throw FormatError("checkpoint: missing end_header");
  }
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] <= 0 || sizes[l + 1] <= 0) throw FormatError("checkpoint: nonpositive layer size");
    Tensor w(sizes[l], sizes[l + 1]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = get_le(is);
    }
    Tensor b(1, sizes[l + 1]);
    for (Eigen::Index c = 0; c < b.cols(); ++c) b(0, c) = get_le(is);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("checkpoint: trailing bytes after parameter data");
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint: inconsistent layer sizes: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const DenoiserParams& params,
                     const CheckpointMeta& meta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_checkpoint(os, params, meta);
  if (!os) throw Error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_checkpoint(is);
}

}  // namespace feasplan::denoiser
