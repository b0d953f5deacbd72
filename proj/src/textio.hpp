#pragma once

// Internal text/file helpers shared by the dataset and checkpoint writers.

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace groves::detail {

// 17 significant digits: enough for every double to round-trip exactly
// through decimal text.
inline std::string format_double17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// FNV-1a, 64-bit; used for dataset fingerprints.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

inline bool has_gz_suffix(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

// Line-oriented writer over a plain or gzip file.
class LineWriter {
 public:
  explicit LineWriter(const std::string& path) : path_(path) {
    if (has_gz_suffix(path)) {
      gz_ = gzopen(path.c_str(), "wb");
      if (!gz_) throw std::runtime_error(path + ": cannot open for writing");
    } else {
      out_.open(path, std::ios::binary);
      if (!out_) throw std::runtime_error(path + ": cannot open for writing");
    }
  }
  ~LineWriter() { close(); }
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void write_line(const std::string& line) {
    if (gz_) {
      if (gzwrite(gz_, line.data(), static_cast<unsigned>(line.size())) !=
              static_cast<int>(line.size()) ||
          gzwrite(gz_, "\n", 1) != 1)
        throw std::runtime_error(path_ + ": write failed");
    } else {
      out_ << line << '\n';
      if (!out_) throw std::runtime_error(path_ + ": write failed");
    }
  }

  void close() {
    if (gz_) {
      gzclose(gz_);
      gz_ = nullptr;
    }
    if (out_.is_open()) out_.close();
  }

 private:
  std::string path_;
  gzFile gz_ = nullptr;
  std::ofstream out_;
};

// Line-oriented reader over a plain or gzip file; tracks 1-based line
// numbers for error reporting.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path) {
    if (has_gz_suffix(path)) {
      gz_ = gzopen(path.c_str(), "rb");
      if (!gz_) throw std::runtime_error(path + ": cannot open");
    } else {
      in_.open(path, std::ios::binary);
      if (!in_) throw std::runtime_error(path + ": cannot open");
    }
  }
  ~LineReader() {
    if (gz_) gzclose(gz_);
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next_line(std::string& line) {
    line.clear();
    bool got = false;
    if (gz_) {
      char chunk[1 << 16];
      while (gzgets(gz_, chunk, sizeof(chunk))) {
        got = true;
        line += chunk;
        if (!line.empty() && line.back() == '\n') break;
      }
    } else {
      if (std::getline(in_, line)) got = true;
    }
    if (!got) return false;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
      line.pop_back();
    ++line_;
    return true;
  }

  int line_number() const { return line_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  gzFile gz_ = nullptr;
  std::ifstream in_;
  int line_ = 0;
};

}  // namespace groves::detail
