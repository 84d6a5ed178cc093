#include "planex/scanio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string_view>
#include <vector>

#include <png.h>
#include <zlib.h>

#include "planex/rng.hpp"

namespace planex {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Line-oriented tokenizer that reports 1-based line numbers.
class LineReader {
 public:
  LineReader(const std::string& text, std::string what) : text_(text), what_(std::move(what)) {}

  /// Next line that is not blank and, if `skip_comments`, not a comment.
  bool next(std::vector<std::string_view>& tokens, bool skip_comments = true) {
    while (pos_ < text_.size()) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string::npos) end = text_.size();
      std::string_view line(text_.data() + pos_, end - pos_);
      pos_ = end + 1;
      ++line_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      tokens.clear();
      std::size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
      }
      if (tokens.empty()) continue;
      if (skip_comments && tokens[0].front() == '#') continue;
      return true;
    }
    ++line_;
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, what_ + " line " + std::to_string(line_) + ": " + msg);
  }

  void expect(std::vector<std::string_view>& tokens, std::size_t count, const std::string& item) {
    if (!next(tokens)) fail("unexpected end of file, expected " + item);
    if (tokens.size() != count) {
      fail("expected " + std::to_string(count) + " fields for " + item + ", got " +
           std::to_string(tokens.size()));
    }
  }

  double real(std::string_view tok) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail("bad number '" + std::string(tok) + "'");
    }
    return v;
  }

  template <typename T>
  T integer(std::string_view tok) const {
    T v{};
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail("bad integer '" + std::string(tok) + "'");
    }
    return v;
  }

 private:
  const std::string& text_;
  std::string what_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

void append_real(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string read_file(const std::string& path) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string out;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw Error(ErrorCode::IoError, "cannot decompress " + path);
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb9");
    if (f == nullptr) throw Error(ErrorCode::IoError, "cannot create " + path);
    const bool ok =
        data.empty() || gzwrite(f, data.data(), static_cast<unsigned>(data.size())) > 0;
    if (gzclose(f) != Z_OK || !ok) throw Error(ErrorCode::IoError, "cannot write " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
}

std::string format_scan(const OrganizedScan& scan) {
  std::string out = "opc 1\n";
  out += std::to_string(scan.width()) + " " + std::to_string(scan.height()) + "\n";
  for (int i = 0; i < 3; ++i) {
    append_real(out, scan.origin()[i]);
    out += i < 2 ? ' ' : '\n';
  }
  append_real(out, scan.noise_sigma());
  out += '\n';
  out.reserve(out.size() + scan.size() * 64);
  for (int r = 0; r < scan.height(); ++r) {
    for (int c = 0; c < scan.width(); ++c) {
      const Ray& ray = scan.at(r, c);
      out += std::to_string(r);
      out += ' ';
      out += std::to_string(c);
      for (int i = 0; i < 3; ++i) {
        out += ' ';
        append_real(out, ray.valid ? ray.point[i] : 0.0);
      }
      out += ray.valid ? " 1\n" : " 0\n";
    }
  }
  return out;
}

OrganizedScan parse_scan(const std::string& text) {
  LineReader in(text, "scan");
  std::vector<std::string_view> t;
  in.expect(t, 2, "magic");
  if (t[0] != "opc" || t[1] != "1") in.fail("bad magic, expected 'opc 1'");
  in.expect(t, 2, "dimensions");
  const int w = in.integer<int>(t[0]);
  const int h = in.integer<int>(t[1]);
  if (w <= 0 || h <= 0) in.fail("dimensions must be positive");
  in.expect(t, 3, "origin");
  const Vec3 origin(in.real(t[0]), in.real(t[1]), in.real(t[2]));
  in.expect(t, 1, "sigma");
  const double sigma = in.real(t[0]);
  if (!(sigma > 0.0)) in.fail("sigma must be positive");

  OrganizedScan scan(w, h, origin, sigma);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::string item = "record of pixel (" + std::to_string(r) + ", " + std::to_string(c) + ")";
      in.expect(t, 6, item);
      if (in.integer<int>(t[0]) != r || in.integer<int>(t[1]) != c) {
        in.fail("out-of-order record, expected " + item);
      }
      const Vec3 p(in.real(t[2]), in.real(t[3]), in.real(t[4]));
      const int valid = in.integer<int>(t[5]);
      if (valid == 1) {
        if (!p.allFinite() || p == origin) in.fail("valid pixel needs an endpoint off the origin");
        scan.set_endpoint(scan.index(r, c), p);
      } else if (valid != 0) {
        in.fail("valid flag must be 0 or 1");
      }
    }
  }
  if (in.next(t)) in.fail("trailing data after the last record");
  return scan;
}

void save_scan(const OrganizedScan& scan, const std::string& path) {
  write_file(path, format_scan(scan));
}

OrganizedScan load_scan(const std::string& path) { return parse_scan(read_file(path)); }

std::string format_labels(const Segmentation& seg) {
  Label maxval = 1;
  for (const Label l : seg.labels) maxval = std::max(maxval, l);
  std::string out = "P2\n" + std::to_string(seg.width) + " " + std::to_string(seg.height) + "\n" +
                    std::to_string(maxval) + "\n";
  for (int r = 0; r < seg.height; ++r) {
    for (int c = 0; c < seg.width; ++c) {
      if (c > 0) out += ' ';
      out += std::to_string(seg.labels[static_cast<std::size_t>(r) * seg.width + c]);
    }
    out += '\n';
  }
  return out;
}

Segmentation parse_labels(const std::string& text) {
  // PGM allows line breaks anywhere; read whitespace-separated tokens.
  LineReader in(text, "labels");
  std::vector<std::string_view> line;
  std::vector<std::string_view> tokens;
  const auto token = [&](const char* item) {
    while (tokens.empty()) {
      if (!in.next(line)) in.fail(std::string("unexpected end of file, expected ") + item);
      tokens.assign(line.rbegin(), line.rend());
    }
    const std::string_view tok = tokens.back();
    tokens.pop_back();
    return tok;
  };
  if (token("magic") != "P2") in.fail("bad magic, expected 'P2'");
  const int w = in.integer<int>(token("width"));
  const int h = in.integer<int>(token("height"));
  if (w <= 0 || h <= 0) in.fail("dimensions must be positive");
  const Label maxval = in.integer<Label>(token("maxval"));
  if (maxval == 0) in.fail("maxval must be positive");
  std::vector<Label> labels(static_cast<std::size_t>(w) * h);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const std::string item = "label " + std::to_string(k);
    labels[k] = in.integer<Label>(token(item.c_str()));
    if (labels[k] > maxval) in.fail("label exceeds maxval");
  }
  if (!tokens.empty() || in.next(line)) in.fail("trailing data after the last label");
  return segmentation_from_labels(w, h, std::move(labels));
}

void save_labels(const Segmentation& seg, const std::string& path) {
  write_file(path, format_labels(seg));
}

Segmentation load_labels(const std::string& path) { return parse_labels(read_file(path)); }

std::string format_planes(const Segmentation& seg) {
  std::string out = "# id nx ny nz offset count\n";
  for (const auto& [id, rec] : seg.planes) {
    if (!rec.has_geometry) continue;
    out += std::to_string(id);
    for (int i = 0; i < 3; ++i) {
      out += ' ';
      append_real(out, rec.normal[i]);
    }
    out += ' ';
    append_real(out, rec.offset);
    out += ' ' + std::to_string(rec.member_count) + '\n';
  }
  return out;
}

void parse_planes(const std::string& text, Segmentation& seg) {
  LineReader in(text, "planes");
  std::vector<std::string_view> t;
  std::map<Label, PlaneRecord> parsed;
  while (in.next(t)) {
    if (t.size() != 6) in.fail("expected 6 fields, got " + std::to_string(t.size()));
    const Label id = in.integer<Label>(t[0]);
    PlaneRecord rec;
    rec.normal = Vec3(in.real(t[1]), in.real(t[2]), in.real(t[3]));
    rec.offset = in.real(t[4]);
    rec.member_count = in.integer<std::size_t>(t[5]);
    rec.has_geometry = true;
    if (!(std::abs(rec.normal.norm() - 1.0) <= 1e-9)) in.fail("normal is not unit length");
    if (!std::isfinite(rec.offset)) in.fail("offset is not finite");
    const auto it = seg.planes.find(id);
    if (it == seg.planes.end()) in.fail("plane " + std::to_string(id) + " has no labeled pixels");
    if (it->second.member_count != rec.member_count) {
      in.fail("plane " + std::to_string(id) + " count disagrees with the labels");
    }
    if (!parsed.emplace(id, rec).second) in.fail("plane " + std::to_string(id) + " repeats");
  }
  for (const auto& [id, rec] : parsed) seg.planes[id] = rec;
}

void save_planes(const Segmentation& seg, const std::string& path) {
  write_file(path, format_planes(seg));
}

void load_planes(const std::string& path, Segmentation& seg) { parse_planes(read_file(path), seg); }

Segmentation load_segmentation(const std::string& labels_path, const std::string& planes_path) {
  Segmentation seg = load_labels(labels_path);
  if (!planes_path.empty()) load_planes(planes_path, seg);
  return seg;
}

void check_dimensions(const OrganizedScan& scan, const Segmentation& seg) {
  if (scan.width() != seg.width || scan.height() != seg.height) {
    throw Error(ErrorCode::DimensionMismatch,
                "labels are " + std::to_string(seg.width) + "x" + std::to_string(seg.height) +
                    " but the scan is " + std::to_string(scan.width()) + "x" +
                    std::to_string(scan.height()));
  }
}

std::array<std::uint8_t, 3> label_color(Label label) {
  if (label == 0) return {0, 0, 0};
  const std::uint64_t h = mix64(label);
  // Keep every channel away from black so planes stand out from outliers.
  return {static_cast<std::uint8_t>(0x40 | (h & 0xff)),
          static_cast<std::uint8_t>(0x40 | ((h >> 8) & 0xff)),
          static_cast<std::uint8_t>(0x40 | ((h >> 16) & 0xff))};
}

void save_label_png(const Segmentation& seg, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (fp == nullptr) throw Error(ErrorCode::IoError, "cannot create " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  std::vector<png_byte> row(static_cast<std::size_t>(seg.width) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorCode::IoError, "cannot write " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(seg.width),
               static_cast<png_uint_32>(seg.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < seg.height; ++r) {
    for (int c = 0; c < seg.width; ++c) {
      const auto rgb = label_color(seg.labels[static_cast<std::size_t>(r) * seg.width + c]);
      for (int i = 0; i < 3; ++i) row[static_cast<std::size_t>(c) * 3 + i] = rgb[i];
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw Error(ErrorCode::IoError, "cannot write " + path);
}

}  // namespace planex
