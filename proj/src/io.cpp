#include "gravden/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gravden::io {

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

struct PlyHeader {
  bool ascii = true;
  std::vector<PlyElement> elements;
  std::size_t body_offset = 0;
  std::size_t body_line = 0;  // 1-based line number of the first body line
};

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorKind::ParseError, msg); }

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

std::optional<PlyType> parse_type(std::string_view s) {
  if (s == "char" || s == "int8") return PlyType::Int8;
  if (s == "uchar" || s == "uint8") return PlyType::UInt8;
  if (s == "short" || s == "int16") return PlyType::Int16;
  if (s == "ushort" || s == "uint16") return PlyType::UInt16;
  if (s == "int" || s == "int32") return PlyType::Int32;
  if (s == "uint" || s == "uint32") return PlyType::UInt32;
  if (s == "float" || s == "float32") return PlyType::Float32;
  if (s == "double" || s == "float64") return PlyType::Float64;
  return std::nullopt;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Reads lines from a buffer, tracking line numbers and stripping a trailing \r.
class LineReader {
 public:
  LineReader(std::string_view data, std::size_t pos = 0, std::size_t line = 1)
      : data_(data), pos_(pos), line_(line) {}

  bool next(std::string_view& out) {
    if (pos_ >= data_.size()) return false;
    auto end = data_.find('\n', pos_);
    if (end == std::string_view::npos) end = data_.size();
    out = data_.substr(pos_, end - pos_);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    current_ = line_++;
    pos_ = end + 1;
    return true;
  }

  std::size_t pos() const noexcept { return std::min(pos_, data_.size()); }
  std::size_t line() const noexcept { return current_; }
  std::size_t next_line() const noexcept { return line_; }

 private:
  std::string_view data_;
  std::size_t pos_;
  std::size_t line_;
  std::size_t current_ = 0;
};

double parse_number(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    parse_fail("line " + std::to_string(line) + ": invalid number '" + std::string(tok) + "'");
  return v;
}

PlyHeader parse_ply_header(std::string_view bytes) {
  LineReader lines(bytes);
  std::string_view line;
  if (!lines.next(line) || line != "ply") parse_fail("line 1: missing 'ply' magic");

  PlyHeader h;
  bool have_format = false;
  bool ended = false;
  while (lines.next(line)) {
    const auto tok = split_ws(line);
    const auto where = "line " + std::to_string(lines.line()) + ": ";
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3) parse_fail(where + "malformed format line");
      if (tok[1] == "ascii") {
        h.ascii = true;
      } else if (tok[1] == "binary_little_endian") {
        h.ascii = false;
      } else if (tok[1] == "binary_big_endian") {
        parse_fail(where + "big-endian PLY is not supported");
      } else {
        parse_fail(where + "unknown PLY format '" + std::string(tok[1]) + "'");
      }
      if (tok[2] != "1.0") parse_fail(where + "unsupported PLY version '" + std::string(tok[2]) + "'");
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) parse_fail(where + "malformed element line");
      PlyElement e;
      e.name = std::string(tok[1]);
      std::size_t count = 0;
      auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (ec != std::errc() || p != tok[2].data() + tok[2].size()) parse_fail(where + "invalid element count");
      e.count = count;
      h.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (h.elements.empty()) parse_fail(where + "property before any element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = parse_type(tok[2]);
        auto vt = parse_type(tok[3]);
        if (!ct || !vt) parse_fail(where + "unknown list property type");
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *vt;
        prop.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = parse_type(tok[1]);
        if (!t) parse_fail(where + "unknown property type '" + std::string(tok[1]) + "'");
        prop.type = *t;
        prop.name = std::string(tok[2]);
      } else {
        parse_fail(where + "malformed property line");
      }
      h.elements.back().props.push_back(std::move(prop));
    } else if (tok[0] == "end_header") {
      ended = true;
      break;
    } else {
      parse_fail(where + "unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_format) parse_fail("PLY header has no format line");
  if (!ended) parse_fail("PLY header is not terminated by end_header");
  h.body_offset = lines.pos();
  h.body_line = lines.next_line();
  return h;
}

struct VertexLayout {
  std::size_t element = 0;
  int x = -1, y = -1, z = -1, label = -1;
};

VertexLayout locate_vertex(const PlyHeader& h, ReadInfo& info) {
  VertexLayout v;
  auto it = std::find_if(h.elements.begin(), h.elements.end(), [](const auto& e) { return e.name == "vertex"; });
  if (it == h.elements.end()) parse_fail("PLY header declares no vertex element");
  v.element = static_cast<std::size_t>(it - h.elements.begin());
  for (std::size_t i = 0; i < it->props.size(); ++i) {
    const auto& p = it->props[i];
    const auto idx = static_cast<int>(i);
    if (p.name == "x") v.x = idx;
    if (p.name == "y") v.y = idx;
    if (p.name == "z") v.z = idx;
    if (p.name == "is_noise") v.label = idx;
  }
  if (v.x < 0 || v.y < 0 || v.z < 0) parse_fail("vertex element lacks x, y or z");
  for (int c : {v.x, v.y, v.z}) {
    const auto& p = it->props[static_cast<std::size_t>(c)];
    if (p.is_list || (p.type != PlyType::Float32 && p.type != PlyType::Float64))
      parse_fail("vertex property '" + p.name + "' must be float or double");
  }
  if (v.label >= 0) {
    const auto& p = it->props[static_cast<std::size_t>(v.label)];
    if (p.is_list || p.type == PlyType::Float32 || p.type == PlyType::Float64)
      parse_fail("is_noise must be an integer property");
  }
  info.precision = it->props[static_cast<std::size_t>(v.x)].type == PlyType::Float32 ? CoordPrecision::Float32
                                                                                     : CoordPrecision::Float64;
  for (const auto& e : h.elements)
    if (e.name != "vertex" && e.count > 0)
      info.warnings.push_back("skipping " + std::to_string(e.count) + " '" + e.name + "' records");
  return v;
}

class NonFiniteLog {
 public:
  void add(std::string where) {
    if (entries_.size() < 10) entries_.push_back(std::move(where));
    ++count_;
  }
  void raise_if_any() const {
    if (count_ == 0) return;
    std::string msg = std::to_string(count_) + " record(s) with non-finite coordinates:";
    for (const auto& e : entries_) msg += " " + e;
    if (count_ > entries_.size()) msg += " ...";
    parse_fail(msg);
  }

 private:
  std::vector<std::string> entries_;
  std::size_t count_ = 0;
};

std::uint8_t checked_label(double v, const std::string& where) {
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  parse_fail(where + ": is_noise must be 0 or 1");
}

PointCloudd read_ply_ascii(std::string_view bytes, const PlyHeader& h, const VertexLayout& v) {
  LineReader lines(bytes, h.body_offset, h.body_line);
  std::string_view line;
  auto next_record = [&]() {
    while (lines.next(line))
      if (!split_ws(line).empty()) return true;
    return false;
  };

  for (std::size_t e = 0; e < v.element; ++e)
    for (std::size_t r = 0; r < h.elements[e].count; ++r)
      if (!next_record())
        parse_fail("body ends inside element '" + h.elements[e].name + "' before the vertex records");

  const auto& vert = h.elements[v.element];
  const auto n = static_cast<Eigen::Index>(vert.count);
  Points3<double> pts(3, n);
  std::vector<std::uint8_t> labels;
  if (v.label >= 0) labels.resize(vert.count);
  NonFiniteLog bad;
  std::vector<double> values(vert.props.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!next_record())
      parse_fail("header declares " + std::to_string(vert.count) + " vertices, body has " + std::to_string(r));
    const auto tok = split_ws(line);
    const auto where = "line " + std::to_string(lines.line());
    std::size_t t = 0;
    for (std::size_t p = 0; p < vert.props.size(); ++p) {
      if (t >= tok.size()) parse_fail(where + ": too few values in vertex record");
      if (vert.props[p].is_list) {
        const auto len = static_cast<std::size_t>(parse_number(tok[t++], lines.line()));
        if (t + len > tok.size()) parse_fail(where + ": list runs past end of record");
        t += len;
        continue;
      }
      values[p] = parse_number(tok[t++], lines.line());
    }
    if (t != tok.size()) parse_fail(where + ": unexpected trailing values in vertex record");
    pts.col(r) << values[static_cast<std::size_t>(v.x)], values[static_cast<std::size_t>(v.y)],
        values[static_cast<std::size_t>(v.z)];
    if (!pts.col(r).allFinite()) bad.add(where);
    if (v.label >= 0) labels[static_cast<std::size_t>(r)] = checked_label(values[static_cast<std::size_t>(v.label)], where);
  }
  bad.raise_if_any();
  return PointCloudd(std::move(pts), std::move(labels));
}

class BinaryCursor {
 public:
  BinaryCursor(std::string_view data, std::size_t pos) : data_(data), pos_(pos) {}

  bool can_read(std::size_t n) const noexcept { return pos_ + n <= data_.size(); }
  std::size_t pos() const noexcept { return pos_; }

  double read(PlyType t) {
    const auto n = type_size(t);
    if (!can_read(n)) parse_fail("byte " + std::to_string(pos_) + ": unexpected end of binary data");
    std::uint64_t raw = 0;
    for (std::size_t i = 0; i < n; ++i)
      raw |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += n;
    switch (t) {
      case PlyType::Int8: return static_cast<std::int8_t>(raw);
      case PlyType::UInt8: return static_cast<std::uint8_t>(raw);
      case PlyType::Int16: return static_cast<std::int16_t>(raw);
      case PlyType::UInt16: return static_cast<std::uint16_t>(raw);
      case PlyType::Int32: return static_cast<std::int32_t>(raw);
      case PlyType::UInt32: return static_cast<std::uint32_t>(raw);
      case PlyType::Float32: return std::bit_cast<float>(static_cast<std::uint32_t>(raw));
      case PlyType::Float64: return std::bit_cast<double>(raw);
    }
    return 0.0;
  }

  void skip(std::size_t n) {
    if (!can_read(n)) parse_fail("byte " + std::to_string(pos_) + ": unexpected end of binary data");
    pos_ += n;
  }

 private:
  std::string_view data_;
  std::size_t pos_;
};

void skip_binary_record(BinaryCursor& cur, const PlyElement& e) {
  for (const auto& p : e.props) {
    if (p.is_list) {
      const auto len = static_cast<std::size_t>(cur.read(p.count_type));
      cur.skip(len * type_size(p.type));
    } else {
      cur.skip(type_size(p.type));
    }
  }
}

PointCloudd read_ply_binary(std::string_view bytes, const PlyHeader& h, const VertexLayout& v) {
  BinaryCursor cur(bytes, h.body_offset);
  for (std::size_t e = 0; e < v.element; ++e)
    for (std::size_t r = 0; r < h.elements[e].count; ++r) skip_binary_record(cur, h.elements[e]);

  const auto& vert = h.elements[v.element];
  const auto n = static_cast<Eigen::Index>(vert.count);
  Points3<double> pts(3, n);
  std::vector<std::uint8_t> labels;
  if (v.label >= 0) labels.resize(vert.count);
  NonFiniteLog bad;
  std::vector<double> values(vert.props.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto start = cur.pos();
    if (start >= bytes.size())
      parse_fail("header declares " + std::to_string(vert.count) + " vertices, data ends after " + std::to_string(r));
    for (std::size_t p = 0; p < vert.props.size(); ++p) {
      const auto& prop = vert.props[p];
      if (prop.is_list) {
        const auto len = static_cast<std::size_t>(cur.read(prop.count_type));
        cur.skip(len * type_size(prop.type));
        continue;
      }
      if (!cur.can_read(type_size(prop.type)))
        parse_fail("header declares " + std::to_string(vert.count) + " vertices, data ends inside record " +
                   std::to_string(r) + " (byte " + std::to_string(cur.pos()) + ")");
      values[p] = cur.read(prop.type);
    }
    const auto where = "vertex " + std::to_string(r) + " (byte " + std::to_string(start) + ")";
    pts.col(r) << values[static_cast<std::size_t>(v.x)], values[static_cast<std::size_t>(v.y)],
        values[static_cast<std::size_t>(v.z)];
    if (!pts.col(r).allFinite()) bad.add(where);
    if (v.label >= 0) labels[static_cast<std::size_t>(r)] = checked_label(values[static_cast<std::size_t>(v.label)], where);
  }
  bad.raise_if_any();
  return PointCloudd(std::move(pts), std::move(labels));
}

PointCloudd read_xyz(std::string_view bytes) {
  LineReader lines(bytes);
  std::string_view line;
  std::vector<double> coords;
  std::vector<std::uint8_t> labels;
  std::optional<bool> labeled;
  NonFiniteLog bad;
  while (lines.next(line)) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const auto where = "line " + std::to_string(lines.line());
    if (tok.size() != 3 && tok.size() != 4) parse_fail(where + ": expected 'x y z [is_noise]'");
    const bool has_label = tok.size() == 4;
    if (!labeled) labeled = has_label;
    if (*labeled != has_label) parse_fail(where + ": is_noise column present on some lines only");
    double p[3];
    for (int a = 0; a < 3; ++a) {
      p[a] = parse_number(tok[static_cast<std::size_t>(a)], lines.line());
      coords.push_back(p[a]);
    }
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) bad.add(where);
    if (has_label) labels.push_back(checked_label(parse_number(tok[3], lines.line()), where));
  }
  bad.raise_if_any();
  const auto n = static_cast<Eigen::Index>(coords.size() / 3);
  Points3<double> pts = Eigen::Map<const Points3<double>>(coords.data(), 3, n);
  return PointCloudd(std::move(pts), std::move(labels));
}

template <typename T>
void append_number(std::string& out, T value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

template <typename T>
void append_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const auto raw = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((raw >> (8 * i)) & 0xffu));
}

std::string lowercase_ext(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

std::string to_string(CloudFormat format) {
  switch (format) {
    case CloudFormat::PlyAscii: return "ply-ascii";
    case CloudFormat::PlyBinaryLittleEndian: return "ply-binary-le";
    case CloudFormat::Xyz: return "xyz";
  }
  return "unknown";
}

CloudFormat parse_format(std::string_view name) {
  if (name == "ply-ascii") return CloudFormat::PlyAscii;
  if (name == "ply-binary-le" || name == "ply") return CloudFormat::PlyBinaryLittleEndian;
  if (name == "xyz") return CloudFormat::Xyz;
  throw Error(ErrorKind::InvalidParameter, "unknown cloud format '" + std::string(name) + "'");
}

CloudFormat infer_format(const std::filesystem::path& path) {
  const auto ext = lowercase_ext(path);
  if (ext == ".xyz" || ext == ".txt") return CloudFormat::Xyz;
  if (ext != ".ply") throw Error(ErrorKind::InvalidParameter, "cannot infer cloud format of '" + path.string() + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) return CloudFormat::PlyBinaryLittleEndian;  // output path that does not exist yet
  std::string head(512, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return head.find("format ascii") != std::string::npos ? CloudFormat::PlyAscii : CloudFormat::PlyBinaryLittleEndian;
}

PointCloudd parse_cloud(std::string_view bytes, CloudFormat format, ReadInfo* info) {
  ReadInfo local;
  ReadInfo& out = info ? *info : local;
  out.format = format;
  if (format == CloudFormat::Xyz) {
    out.precision = CoordPrecision::Float64;
    return read_xyz(bytes);
  }
  const auto header = parse_ply_header(bytes);
  if (header.ascii != (format == CloudFormat::PlyAscii)) {
    out.format = header.ascii ? CloudFormat::PlyAscii : CloudFormat::PlyBinaryLittleEndian;
  }
  const auto layout = locate_vertex(header, out);
  return header.ascii ? read_ply_ascii(bytes, header, layout) : read_ply_binary(bytes, header, layout);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

PointCloudd read_cloud(const std::filesystem::path& path, std::optional<CloudFormat> format, ReadInfo* info) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_cloud(bytes, format ? *format : infer_format(path), info);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ParseError) throw;
    throw Error(ErrorKind::ParseError, path.string() + ": " + (e.what() + std::strlen("ParseError: ")));
  }
}

std::string serialize_cloud(const PointCloudd& cloud, CloudFormat format, CoordPrecision precision) {
  cloud.validate();
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "refusing to write an empty cloud");
  const bool f32 = precision == CoordPrecision::Float32;
  const bool labeled = cloud.has_labels();
  std::string out;

  if (format == CloudFormat::Xyz) {
    out.reserve(static_cast<std::size_t>(cloud.size()) * 48);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        if (a) out.push_back(' ');
        if (f32) append_number(out, static_cast<float>(cloud.points(a, i)));
        else append_number(out, cloud.points(a, i));
      }
      if (labeled) out += cloud.labels[static_cast<std::size_t>(i)] ? " 1" : " 0";
      out.push_back('\n');
    }
    return out;
  }

  const bool ascii = format == CloudFormat::PlyAscii;
  const char* type = f32 ? "float" : "double";
  out += "ply\n";
  out += ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* axis : {"x", "y", "z"}) out += std::string("property ") + type + " " + axis + "\n";
  if (labeled) out += "property uchar is_noise\n";
  out += "end_header\n";
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto label = labeled ? cloud.labels[static_cast<std::size_t>(i)] : std::uint8_t{0};
    if (ascii) {
      for (int a = 0; a < 3; ++a) {
        if (a) out.push_back(' ');
        if (f32) append_number(out, static_cast<float>(cloud.points(a, i)));
        else append_number(out, cloud.points(a, i));
      }
      if (labeled) out += label ? " 1" : " 0";
      out.push_back('\n');
    } else {
      for (int a = 0; a < 3; ++a) {
        if (f32) append_le(out, static_cast<float>(cloud.points(a, i)));
        else append_le(out, cloud.points(a, i));
      }
      if (labeled) out.push_back(static_cast<char>(label ? 1 : 0));
    }
  }
  return out;
}

void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path, CloudFormat format,
                 CoordPrecision precision) {
  const auto bytes = serialize_cloud(cloud, format, precision);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path.string() + "' failed");
}

}  // namespace gravden::io
