#include "strata/matrix_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "strata/error.hpp"

namespace strata {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "matrix payloads are read as native little-endian");

namespace {

constexpr char kMagic[8] = {'P', 'C', 'L', 'O', 'U', 'D', '0', '1'};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

PointCloud load_csv(const std::string& text) {
  std::vector<double> coords;
  std::size_t dim = 0;
  std::size_t row = 0;
  bool first_line = true;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size() && numeric; ++i) numeric = parse_double(fields[i], values[i]);
    if (!numeric) {
      if (first_line) {
        first_line = false;  // header
        continue;
      }
      throw DataError("malformed CSV value on line " + std::to_string(line_no) + " (row " +
                      std::to_string(row) + ")");
    }
    first_line = false;
    if (dim == 0) dim = values.size();
    if (values.size() != dim)
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(values.size()) +
                      " columns, expected " + std::to_string(dim));
    for (double v : values)
      if (!std::isfinite(v)) throw DataError("non-finite value in row " + std::to_string(row));
    coords.insert(coords.end(), values.begin(), values.end());
    ++row;
  }
  if (row < 2) throw DataError("matrix needs at least 2 rows, found " + std::to_string(row));
  return PointCloud(std::move(coords), dim);
}

std::vector<double> decode_payload(const char* data, std::size_t bytes, std::size_t count,
                                   ElementType dtype) {
  const std::size_t width = dtype == ElementType::f32 ? 4 : 8;
  if (bytes < count * width)
    throw DataError("payload truncated: need " + std::to_string(count * width) +
                    " bytes, have " + std::to_string(bytes));
  std::vector<double> out(count);
  if (dtype == ElementType::f64) {
    std::memcpy(out.data(), data, count * 8);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, data + 4 * i, 4);
      out[i] = static_cast<double>(f);
    }
  }
  return out;
}

void check_finite(const std::vector<double>& coords, std::size_t dim) {
  for (std::size_t i = 0; i < coords.size(); ++i)
    if (!std::isfinite(coords[i]))
      throw DataError("non-finite value in row " + std::to_string(i / dim));
}

PointCloud load_binary(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw DataError("missing PCLOUD01 magic");
  std::uint32_t header_len;
  std::memcpy(&header_len, bytes.data() + 8, 4);
  if (12 + static_cast<std::size_t>(header_len) > bytes.size()) throw DataError("malformed header length");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed header: ") + e.what());
  }
  std::size_t p = 0, dim = 0;
  std::string dtype, order;
  try {
    p = header.at("p").get<std::size_t>();
    dim = header.at("D").get<std::size_t>();
    dtype = header.at("dtype").get<std::string>();
    order = header.value("order", std::string("row"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed header: ") + e.what());
  }
  if (order != "row") throw DataError("unsupported order '" + order + "'");
  ElementType et;
  if (dtype == "f32") et = ElementType::f32;
  else if (dtype == "f64") et = ElementType::f64;
  else throw DataError("unsupported dtype '" + dtype + "'");
  if (dim == 0 || p < 2) throw DataError("header needs p >= 2 and D >= 1");
  const std::size_t off = 12 + header_len;
  auto coords = decode_payload(bytes.data() + off, bytes.size() - off, p * dim, et);
  check_finite(coords, dim);
  return PointCloud(std::move(coords), dim);
}

// Pulls the value text following 'key': in a numpy header dict.
std::string npy_field(const std::string& header, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  const auto k = header.find(quoted);
  if (k == std::string::npos) throw DataError("npy header lacks " + key);
  auto pos = header.find(':', k + quoted.size());
  if (pos == std::string::npos) throw DataError("malformed npy header");
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  if (pos >= header.size()) throw DataError("malformed npy header");
  const char open = header[pos];
  std::size_t end;
  if (open == '\'' || open == '"') {
    end = header.find(open, pos + 1);
    if (end == std::string::npos) throw DataError("malformed npy header");
    return header.substr(pos + 1, end - pos - 1);
  }
  if (open == '(') {
    end = header.find(')', pos);
    if (end == std::string::npos) throw DataError("malformed npy header");
    return header.substr(pos + 1, end - pos - 1);
  }
  end = header.find_first_of(",}", pos);
  return std::string(trim(std::string_view(header).substr(pos, end - pos)));
}

PointCloud load_npy(const std::string& bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0)
    throw DataError("missing npy magic");
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0, off = 0;
  if (major == 1) {
    std::uint16_t n;
    std::memcpy(&n, bytes.data() + 8, 2);
    header_len = n;
    off = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw DataError("truncated npy header");
    std::uint32_t n;
    std::memcpy(&n, bytes.data() + 8, 4);
    header_len = n;
    off = 12;
  } else {
    throw DataError("unsupported npy version " + std::to_string(major));
  }
  if (off + header_len > bytes.size()) throw DataError("truncated npy header");
  const std::string header = bytes.substr(off, header_len);
  const std::string descr = npy_field(header, "descr");
  ElementType et;
  if (descr == "<f8") et = ElementType::f64;
  else if (descr == "<f4") et = ElementType::f32;
  else throw DataError("unsupported npy dtype '" + descr + "' (need <f4 or <f8)");
  if (npy_field(header, "fortran_order") != "False")
    throw DataError("npy arrays must be in C order");
  std::vector<std::size_t> shape;
  for (auto part : split(npy_field(header, "shape"), ',')) {
    part = trim(part);
    if (part.empty()) continue;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size()) throw DataError("malformed npy shape");
    shape.push_back(v);
  }
  if (shape.empty() || shape.size() > 2) throw DataError("npy array must be 1-d or 2-d");
  const std::size_t p = shape[0];
  const std::size_t dim = shape.size() == 2 ? shape[1] : 1;
  if (p < 2 || dim == 0) throw DataError("npy array needs >= 2 rows and >= 1 column");
  const std::size_t data_off = off + header_len;
  auto coords = decode_payload(bytes.data() + data_off, bytes.size() - data_off, p * dim, et);
  check_finite(coords, dim);
  return PointCloud(std::move(coords), dim);
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t parse_hex4(const std::string& s, std::size_t pos) {
  if (pos + 4 > s.size()) throw DataError("truncated \\u escape");
  unsigned v = 0;
  const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + 4, v, 16);
  if (ec != std::errc() || ptr != s.data() + pos + 4) throw DataError("invalid \\u escape");
  return static_cast<char32_t>(v);
}

}  // namespace

MatrixFormat parse_format(const std::string& name) {
  if (name == "csv") return MatrixFormat::csv;
  if (name == "binary" || name == "bin" || name == "pcloud") return MatrixFormat::binary;
  if (name == "npy") return MatrixFormat::npy;
  throw InvalidArgument("unknown matrix format '" + name + "'");
}

std::string to_string(MatrixFormat f) {
  switch (f) {
    case MatrixFormat::csv: return "csv";
    case MatrixFormat::binary: return "binary";
    case MatrixFormat::npy: return "npy";
  }
  return "unknown";
}

MatrixFormat detect_format(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".csv" || ext == ".txt") return MatrixFormat::csv;
  if (ext == ".npy") return MatrixFormat::npy;
  return MatrixFormat::binary;
}

PointCloud load_matrix(const fs::path& path, std::optional<MatrixFormat> format) {
  const MatrixFormat f = format ? *format : detect_format(path);
  const std::string bytes = read_file(path);
  switch (f) {
    case MatrixFormat::csv: return load_csv(bytes);
    case MatrixFormat::binary: return load_binary(bytes);
    case MatrixFormat::npy: return load_npy(bytes);
  }
  throw InvalidArgument("unknown matrix format");
}

void save_matrix(const fs::path& path, const PointCloud& cloud,
                 std::optional<MatrixFormat> format, ElementType dtype) {
  const MatrixFormat f = format ? *format : detect_format(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto coords = cloud.coords();

  auto write_payload = [&] {
    if (dtype == ElementType::f64) {
      out.write(reinterpret_cast<const char*>(coords.data()),
                static_cast<std::streamsize>(coords.size() * sizeof(double)));
    } else {
      for (double v : coords) {
        const auto fv = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&fv), 4);
      }
    }
  };

  switch (f) {
    case MatrixFormat::csv:
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto row = cloud.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
          if (j) out << ',';
          out << format_double(row[j]);
        }
        out << '\n';
      }
      break;
    case MatrixFormat::binary: {
      const nlohmann::json header = {{"p", cloud.size()},
                                     {"D", cloud.dim()},
                                     {"dtype", dtype == ElementType::f32 ? "f32" : "f64"},
                                     {"order", "row"}};
      const std::string h = header.dump();
      const auto len = static_cast<std::uint32_t>(h.size());
      out.write(kMagic, 8);
      out.write(reinterpret_cast<const char*>(&len), 4);
      out.write(h.data(), static_cast<std::streamsize>(h.size()));
      write_payload();
      break;
    }
    case MatrixFormat::npy: {
      std::string h = "{'descr': '" + std::string(dtype == ElementType::f32 ? "<f4" : "<f8") +
                      "', 'fortran_order': False, 'shape': (" + std::to_string(cloud.size()) +
                      ", " + std::to_string(cloud.dim()) + "), }";
      // pad so the data starts on a 64-byte boundary, header ends in '\n'
      const std::size_t total = 10 + h.size() + 1;
      h.append((64 - total % 64) % 64, ' ');
      h.push_back('\n');
      const auto len = static_cast<std::uint16_t>(h.size());
      out.write("\x93NUMPY\x01\x00", 8);
      out.write(reinterpret_cast<const char*>(&len), 2);
      out.write(h.data(), static_cast<std::streamsize>(h.size()));
      write_payload();
      break;
    }
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::string unescape_token(const std::string& line) {
  std::string out;
  out.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c != '\\') {
      out.push_back(c);
      continue;
    }
    if (i + 1 >= line.size()) throw DataError("dangling backslash");
    const char e = line[++i];
    if (e == '\\') {
      out.push_back('\\');
    } else if (e == 'u') {
      char32_t cp = parse_hex4(line, i + 1);
      i += 4;
      if (cp >= 0xD800 && cp <= 0xDBFF) {
        if (i + 2 >= line.size() || line[i + 1] != '\\' || line[i + 2] != 'u')
          throw DataError("unpaired surrogate in \\u escape");
        const char32_t lo = parse_hex4(line, i + 3);
        if (lo < 0xDC00 || lo > 0xDFFF) throw DataError("invalid surrogate pair");
        cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
        i += 6;
      } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
        throw DataError("unpaired surrogate in \\u escape");
      }
      append_utf8(out, cp);
    } else {
      throw DataError(std::string("invalid escape \\") + e);
    }
  }
  return out;
}

std::string escape_token(const std::string& token) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const auto c = static_cast<unsigned char>(token[i]);
    if (c == '\\') {
      out += "\\\\";
    } else if (c < 0x20 || c == 0x7F || (i == 0 && c == ' ')) {
      out += "\\u00";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

std::vector<std::string> load_vocab(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    try {
      tokens.push_back(unescape_token(line));
    } catch (const DataError& e) {
      throw DataError("vocab line " + std::to_string(line_no) + ": " + e.what());
    }
    pos = end + 1;
  }
  return tokens;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace strata
