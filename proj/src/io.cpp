#include "saesim/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "saesim/errors.hpp"

namespace saesim::io {

static_assert(std::endian::native == std::endian::little, "NPY decoding assumes a little-endian host");

namespace {

constexpr std::string_view kNpyMagic = "\x93NUMPY";
constexpr std::size_t kNpyPreamble = 10;  // magic(6) + version(2) + header_len(2)

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Cursor over the python-literal dict of an NPY header.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("malformed NPY header: " + what, base_ + pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::string quoted() {
    skip_ws();
    if (pos_ >= text_.size() || (text_[pos_] != '\'' && text_[pos_] != '"')) fail("expected string");
    const char q = text_[pos_++];
    const auto end = text_.find(q, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  bool boolean() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::vector<Index> shape() {
    expect('(');
    std::vector<Index> dims;
    while (!consume(')')) {
      skip_ws();
      Index v = 0;
      const auto* first = text_.data() + pos_;
      const auto* last = text_.data() + text_.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || v < 0) fail("expected non-negative integer in shape");
      pos_ += static_cast<std::size_t>(ptr - first);
      dims.push_back(v);
      if (!consume(',')) {
        expect(')');
        break;
      }
    }
    return dims;
  }

  std::size_t pos() const { return pos_; }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

 private:
  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

}  // namespace

MatrixFileHeader parse_npy_header(std::string_view bytes) {
  if (bytes.size() < kNpyPreamble || bytes.substr(0, kNpyMagic.size()) != kNpyMagic) {
    throw FormatError("not an NPY file: bad magic", 0);
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    throw FormatError("unsupported NPY version " + std::to_string(major) + "." +
                          std::to_string(minor) + " (expected 1.0)",
                      6);
  }
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kNpyPreamble + header_len) {
    throw FormatError("truncated NPY header", bytes.size());
  }
  auto header = bytes.substr(kNpyPreamble, header_len);
  if (header.empty() || header.back() != '\n') {
    throw FormatError("NPY header must end with a newline", kNpyPreamble + header_len - 1);
  }
  header.remove_suffix(1);
  // Padding is spaces before the terminating newline.
  while (!header.empty() && header.back() == ' ') header.remove_suffix(1);

  HeaderParser p(header, kNpyPreamble);
  p.expect('{');
  std::optional<std::string> descr;
  std::optional<bool> fortran;
  std::optional<std::vector<Index>> shape;
  while (!p.consume('}')) {
    const auto key = p.quoted();
    p.expect(':');
    if (key == "descr") {
      descr = p.quoted();
    } else if (key == "fortran_order") {
      fortran = p.boolean();
    } else if (key == "shape") {
      shape = p.shape();
    } else {
      p.fail("unexpected key '" + key + "'");
    }
    if (!p.consume(',')) {
      p.expect('}');
      break;
    }
  }
  if (!p.at_end()) p.fail("trailing characters after dict");
  if (!descr || !fortran || !shape) {
    throw FormatError("NPY header missing descr, fortran_order or shape", kNpyPreamble);
  }

  MatrixFileHeader h;
  const auto& d = *descr;
  if (d.size() != 3 || (d[0] != '<' && d[0] != '|' && d[0] != '=') || d[1] != 'f' ||
      (d[2] != '4' && d[2] != '8')) {
    if (!d.empty() && d[0] == '>') {
      throw FormatError("big-endian NPY payload '" + d + "' is not supported", kNpyPreamble);
    }
    throw FormatError("unsupported NPY dtype '" + d + "' (expected <f4 or <f8)", kNpyPreamble);
  }
  h.dtype = d[2] == '4' ? DType::f32 : DType::f64;
  if (*fortran) throw FormatError("Fortran-order NPY arrays are not supported", kNpyPreamble);
  if (shape->size() != 2) {
    throw FormatError("non-2-D NPY array (" + std::to_string(shape->size()) + " dimensions)",
                      kNpyPreamble);
  }
  h.rows = (*shape)[0];
  h.cols = (*shape)[1];
  h.fortran_order = false;
  h.data_offset = kNpyPreamble + header_len;
  return h;
}

Matrix parse_npy(std::string_view bytes) {
  const auto h = parse_npy_header(bytes);
  const std::size_t item = h.dtype == DType::f32 ? 4 : 8;
  const std::size_t count = static_cast<std::size_t>(h.rows) * static_cast<std::size_t>(h.cols);
  const std::size_t payload = bytes.size() - h.data_offset;
  if (payload != count * item) {
    throw FormatError("NPY payload is " + std::to_string(payload) + " bytes, shape needs " +
                          std::to_string(count * item),
                      h.data_offset);
  }
  Matrix m(h.rows, h.cols);
  const char* src = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < count; ++i) {
    double v;
    if (h.dtype == DType::f32) {
      float f;
      std::memcpy(&f, src + i * 4, 4);
      v = f;
    } else {
      std::memcpy(&v, src + i * 8, 8);
    }
    m.data()[i] = v;
  }
  require_finite(m);
  return m;
}

std::string encode_npy(const Matrix& m, DType dtype) {
  std::string dict = std::string("{'descr': '") + (dtype == DType::f32 ? "<f4" : "<f8") +
                     "', 'fortran_order': False, 'shape': (" + std::to_string(m.rows()) + ", " +
                     std::to_string(m.cols()) + "), }";
  std::size_t total = kNpyPreamble + dict.size() + 1;
  const std::size_t pad = (64 - total % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');
  const std::size_t header_len = dict.size();

  std::string out(kNpyMagic);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header_len & 0xff));
  out.push_back(static_cast<char>((header_len >> 8) & 0xff));
  out += dict;
  const std::size_t count = static_cast<std::size_t>(m.size());
  const std::size_t item = dtype == DType::f32 ? 4 : 8;
  const std::size_t start = out.size();
  out.resize(start + count * item);
  for (std::size_t i = 0; i < count; ++i) {
    const double v = m.data()[i];
    if (dtype == DType::f32) {
      const float f = static_cast<float>(v);
      std::memcpy(out.data() + start + i * 4, &f, 4);
    } else {
      std::memcpy(out.data() + start + i * 8, &v, 8);
    }
  }
  return out;
}

Matrix parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto cell = trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (cell.empty()) throw FormatError("empty CSV cell", ln + 1, FormatError::Location::line);
      double v = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw FormatError("invalid number '" + std::string(cell) + "'", ln + 1,
                          FormatError::Location::line);
      }
      if (!std::isfinite(v)) {
        throw NonFiniteEntry(static_cast<Index>(rows.size()), static_cast<Index>(row.size()));
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged CSV row: " + std::to_string(row.size()) + " cells, expected " +
                            std::to_string(rows.front().size()),
                        ln + 1, FormatError::Location::line);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty CSV matrix", 1, FormatError::Location::line);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

Matrix load_matrix(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const auto ext = ascii_lower(path.extension().string());
  try {
    if (ext == ".npy") return parse_npy(bytes);
    if (ext == ".csv") return parse_csv(bytes);
    if (bytes.rfind(kNpyMagic, 0) == 0) return parse_npy(bytes);
    return parse_csv(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset(), e.location());
  }
}

void save_npy(const std::filesystem::path& path, const Matrix& m, DType dtype) {
  write_file(path, encode_npy(m, dtype));
}

TokenTable parse_token_table(std::string_view text) {
  std::vector<std::string> tokens;
  auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[ln]);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("invalid JSON string: ") + e.what(), ln + 1,
                        FormatError::Location::line);
    }
    if (!j.is_string()) {
      throw FormatError("token line is not a JSON string", ln + 1, FormatError::Location::line);
    }
    tokens.push_back(j.get<std::string>());
  }
  return TokenTable(std::move(tokens));
}

TokenTable load_token_table(const std::filesystem::path& path) {
  try {
    return parse_token_table(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset(), e.location());
  }
}

void save_token_table(const std::filesystem::path& path, const TokenTable& table) {
  std::string out;
  for (const auto& t : table.tokens()) {
    out += nlohmann::json(t).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    out.push_back('\n');
  }
  write_file(path, out);
}

ConceptLexicon parse_lexicon(std::string_view text, const StoplistConfig& stoplist) {
  std::vector<ConceptCategory> categories;
  std::set<std::string> names;
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("expected '<category> = <keywords>'", ln + 1, FormatError::Location::line);
    }
    ConceptCategory cat;
    cat.name = std::string(trim(line.substr(0, eq)));
    if (cat.name.empty()) throw FormatError("empty category name", ln + 1, FormatError::Location::line);
    if (!names.insert(cat.name).second) throw DuplicateCategory(cat.name);

    std::set<std::string> seen;
    auto rest = line.substr(eq + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto comma = rest.find(',', start);
      const auto raw = trim(rest.substr(start, comma == std::string_view::npos ? rest.npos : comma - start));
      if (!raw.empty() || comma != std::string_view::npos) {
        auto kw = ascii_lower(raw);
        if (kw.empty()) {
          throw FormatError("empty keyword in category '" + cat.name + "'", ln + 1,
                            FormatError::Location::line);
        }
        if (stoplist.contains(kw)) {
          throw InputError("lexicon keyword '" + kw + "' in category '" + cat.name +
                           "' is a non-concept stoplist token");
        }
        if (seen.insert(kw).second) cat.keywords.push_back(std::move(kw));
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    categories.push_back(std::move(cat));
  }
  return ConceptLexicon(std::move(categories));
}

ConceptLexicon load_lexicon(const std::filesystem::path& path, const StoplistConfig& stoplist) {
  try {
    return parse_lexicon(read_file(path), stoplist);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset(), e.location());
  }
}

std::string format_lexicon(const ConceptLexicon& lexicon) {
  std::string out;
  for (const auto& cat : lexicon.categories()) {
    out += cat.name + " =";
    for (std::size_t i = 0; i < cat.keywords.size(); ++i) {
      out += (i == 0 ? " " : ", ") + cat.keywords[i];
    }
    out.push_back('\n');
  }
  return out;
}

void save_lexicon(const std::filesystem::path& path, const ConceptLexicon& lexicon) {
  write_file(path, format_lexicon(lexicon));
}

ConceptLexicon default_lexicon() { return parse_lexicon(default_lexicon_text()); }

std::filesystem::path lexicon_path_from_env() {
  const char* v = std::getenv("SAESIM_LEXICON");
  return v == nullptr ? std::filesystem::path{} : std::filesystem::path(v);
}

}  // namespace saesim::io
