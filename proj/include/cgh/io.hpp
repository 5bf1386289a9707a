#pragma once

#include <cgh/error.hpp>
#include <cgh/grid.hpp>

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace cgh {

/// Array file: "CGH1", u32 rank, rank x u64 sizes, then f64 values (complex as interleaved re, im),
/// row-major, all little-endian. Real and complex arrays share the header; the payload length
/// tells them apart.
struct ArrayData {
  std::vector<std::uint64_t> shape;
  bool is_complex = false;
  std::vector<double> values;  ///< interleaved when complex
};

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  if (pos + sizeof(U) > in.size()) throw ConfigError("array file is truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bits |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::string encode_array(std::span<const std::uint64_t> shape, std::span<const double> values, bool is_complex) {
  std::uint64_t count = 1;
  for (auto s : shape) count *= s;
  if (values.size() != count * (is_complex ? 2 : 1)) throw ConfigError("encode_array: shape does not match data");
  std::string out = "CGH1";
  out.reserve(8 + 8 * shape.size() + 8 * values.size());
  detail::put_le(out, static_cast<std::uint32_t>(shape.size()));
  for (auto s : shape) detail::put_le(out, s);
  for (double v : values) detail::put_le(out, v);
  return out;
}

inline std::string encode_array(std::span<const std::uint64_t> shape, std::span<const Complex> values) {
  return encode_array(shape, std::span<const double>(reinterpret_cast<const double*>(values.data()), 2 * values.size()),
                      true);
}

inline ArrayData decode_array(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 4, "CGH1") != 0) throw ConfigError("not a CGH1 array file");
  std::size_t pos = 4;
  ArrayData a;
  const auto rank = detail::get_le<std::uint32_t>(bytes, pos);
  if (rank > 16) throw ConfigError("array file rank is implausible");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    a.shape.push_back(detail::get_le<std::uint64_t>(bytes, pos));
    count *= a.shape.back();
  }
  const std::size_t payload = bytes.size() - pos;
  if (payload == 8 * count) a.is_complex = false;
  else if (payload == 16 * count) a.is_complex = true;
  else throw ConfigError("array file payload does not match its shape");
  a.values.resize(payload / 8);
  for (double& v : a.values) v = detail::get_le<double>(bytes, pos);
  return a;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Writes to a sibling temporary and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvTable& add(double v) { return add_text(format_number(v)); }
  CsvTable& add(std::size_t v) { return add_text(std::to_string(v)); }
  CsvTable& add(int v) { return add_text(std::to_string(v)); }
  CsvTable& add(bool v) { return add_text(v ? "1" : "0"); }
  CsvTable& add(const std::string& s) {
    std::string q = s;
    if (q.find_first_of(",\"\n") != std::string::npos) {
      std::string e = "\"";
      for (char c : q) e += c == '"' ? std::string("\"\"") : std::string(1, c);
      q = e + "\"";
    }
    return add_text(q);
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += '\n';
    }
    return out;
  }

 private:
  CsvTable& add_text(std::string s) {
    if (rows_.empty()) rows_.emplace_back();
    rows_.back().push_back(std::move(s));
    return *this;
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct FileRecord {
  std::string path;  ///< relative to the output directory
  std::uint64_t bytes = 0;
  std::string sha256;
};

/// Single writer for one run's output directory; keeps the inventory for the manifest.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw ConfigError("cannot create output directory " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }
  const std::vector<FileRecord>& files() const { return files_; }

  void write(const std::string& relative, const std::string& bytes) {
    write_file_atomic(root_ / relative, bytes);
    files_.push_back({relative, bytes.size(), sha256_hex(bytes)});
  }

  void write_real(const std::string& relative, std::span<const std::uint64_t> shape, std::span<const double> v) {
    write(relative, encode_array(shape, v, false));
  }

  void write_complex(const std::string& relative, std::span<const std::uint64_t> shape, std::span<const Complex> v) {
    write(relative, encode_array(shape, v));
  }

  void write_csv(const std::string& relative, const CsvTable& t) { write(relative, t.str()); }

 private:
  std::filesystem::path root_;
  std::vector<FileRecord> files_;
};

}  // namespace cgh
