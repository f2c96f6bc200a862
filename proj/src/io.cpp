#include "barcoder/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace barcoder {

ParseError::ParseError(const std::string& source, const std::string& location, const std::string& what)
    : std::runtime_error(source + (location.empty() ? "" : ": " + location) + ": " + what) {}

EmbeddingFormat parse_embedding_format(const std::string& name) {
  if (name == "auto") return EmbeddingFormat::automatic;
  if (name == "text" || name == "csv") return EmbeddingFormat::text;
  if (name == "binary" || name == "bemb") return EmbeddingFormat::binary;
  throw std::invalid_argument("unknown format '" + name + "' (expected auto, text or binary)");
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string where(std::size_t line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

template <class T>
bool parse_number(std::string_view cell, T& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

void range_warning(const EmbeddingMatrix& m, std::vector<std::string>& warnings) {
  if (m.min_value() < -1.0f || m.max_value() > 1.0f) {
    warnings.push_back("values span [" + format_double(m.min_value()) + ", " +
                       format_double(m.max_value()) +
                       "], outside the default search bounds [-1, 1]; consider --bounds minmax");
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) throw std::invalid_argument(std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

std::vector<std::uint8_t> slurp(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace

LoadedEmbeddings read_embeddings_text(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool has_label = false;
  std::size_t n_dims = 0;
  std::size_t n_columns = 0;
  std::size_t n_rows = 0;
  std::vector<float> values;
  std::vector<std::uint32_t> labels;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (!have_header) {
      have_header = true;
      n_columns = cells.size();
      std::string last(cells.back());
      std::transform(last.begin(), last.end(), last.begin(), [](unsigned char c) { return std::tolower(c); });
      has_label = last == "label";
      n_dims = n_columns - (has_label ? 1 : 0);
      if (n_dims == 0) throw ParseError(source, "line " + std::to_string(line_no), "header has no feature columns");
      continue;
    }
    if (cells.size() != n_columns) {
      throw ParseError(source, "line " + std::to_string(line_no),
                       "ragged row: " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(n_columns));
    }
    const std::size_t sample = n_rows++;
    for (std::size_t c = 0; c < n_dims; ++c) {
      double v = 0.0;
      if (!parse_number(cells[c], v)) {
        throw ParseError(source, where(line_no, c + 1), "non-numeric cell '" + std::string(cells[c]) + "'");
      }
      const float f = static_cast<float>(v);
      if (!std::isfinite(v) || !std::isfinite(f)) {
        throw ParseError(source, where(line_no, c + 1),
                         "non-finite value at sample " + std::to_string(sample) +
                             ", dimension " + std::to_string(c));
      }
      values.push_back(f);
    }
    if (has_label) {
      std::uint32_t y = 0;
      if (!parse_number(cells[n_dims], y)) {
        throw ParseError(source, where(line_no, n_dims + 1),
                         "label '" + std::string(cells[n_dims]) + "' is not a non-negative integer");
      }
      labels.push_back(y);
    }
  }
  if (!have_header) throw ParseError(source, "", "empty file");
  if (values.empty()) throw ParseError(source, "", "no samples after the header");

  LoadedEmbeddings out{EmbeddingMatrix(n_rows, n_dims, std::move(values)), std::nullopt, {}};
  if (has_label) out.labels = LabelVector::from_values(std::move(labels));
  range_warning(out.matrix, out.warnings);
  return out;
}

LoadedEmbeddings read_embeddings_binary(std::istream& in, const std::string& source) {
  const std::vector<std::uint8_t> bytes = slurp(in);
  if (bytes.empty()) throw ParseError(source, "", "empty file");
  if (bytes.size() < 13) throw ParseError(source, "byte " + std::to_string(bytes.size()), "truncated header");
  if (std::memcmp(bytes.data(), "BEMB", 4) != 0) throw ParseError(source, "byte 0", "bad magic, expected BEMB");
  if (bytes[4] != kEmbeddingFormatVersion) {
    throw ParseError(source, "byte 4", "unsupported format version " + std::to_string(bytes[4]));
  }
  const std::size_t n = get_u32(bytes.data() + 5);
  const std::size_t d = get_u32(bytes.data() + 9);
  if (n == 0 || d == 0) throw ParseError(source, "byte 5", "empty matrix shape");
  const std::size_t expected = 13 + n * d * 4;
  if (bytes.size() != expected) {
    throw ParseError(source, "byte " + std::to_string(bytes.size()),
                     "payload size mismatch, expected " + std::to_string(expected) + " bytes total");
  }
  std::vector<float> values(n * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes.data() + 13 + 4 * i));
    if (!std::isfinite(values[i])) {
      throw ParseError(source, "byte " + std::to_string(13 + 4 * i),
                       "non-finite value at sample " + std::to_string(i / d) + ", dimension " +
                           std::to_string(i % d));
    }
  }
  LoadedEmbeddings out{EmbeddingMatrix(n, d, std::move(values)), std::nullopt, {}};
  range_warning(out.matrix, out.warnings);
  return out;
}

LoadedEmbeddings load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  std::ifstream in = open_in(path);
  if (format == EmbeddingFormat::automatic) {
    char magic[4] = {};
    in.read(magic, 4);
    format = (in.gcount() == 4 && std::memcmp(magic, "BEMB", 4) == 0) ? EmbeddingFormat::binary
                                                                     : EmbeddingFormat::text;
    in.clear();
    in.seekg(0);
  }
  return format == EmbeddingFormat::binary ? read_embeddings_binary(in, path.string())
                                           : read_embeddings_text(in, path.string());
}

void write_embeddings_text(std::ostream& out, const EmbeddingMatrix& matrix, const LabelVector* labels) {
  if (labels && labels->size() != matrix.n_samples()) {
    throw std::invalid_argument("labels do not match matrix rows");
  }
  for (std::size_t d = 0; d < matrix.n_dims(); ++d) out << (d ? "," : "") << 'f' << d;
  if (labels) out << ",label";
  out << '\n';
  std::array<char, 32> buf{};
  for (std::size_t r = 0; r < matrix.n_samples(); ++r) {
    const auto row = matrix.row(r);
    for (std::size_t d = 0; d < row.size(); ++d) {
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), row[d]);
      if (d) out << ',';
      out.write(buf.data(), res.ptr - buf.data());
    }
    if (labels) out << ',' << (*labels)[r];
    out << '\n';
  }
}

void write_embeddings_binary(std::ostream& out, const EmbeddingMatrix& matrix) {
  out.write("BEMB", 4);
  out.put(static_cast<char>(kEmbeddingFormatVersion));
  put_u32(out, checked_u32(matrix.n_samples(), "n_samples"));
  put_u32(out, checked_u32(matrix.n_dims(), "n_dims"));
  for (float v : matrix.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                     const LabelVector* labels, EmbeddingFormat format) {
  std::ofstream out = open_out(path);
  if (format == EmbeddingFormat::binary) {
    write_embeddings_binary(out, matrix);
  } else {
    write_embeddings_text(out, matrix, labels);
  }
  finish(out, path);
}

std::vector<std::uint8_t> encode_barcodes(const BinaryMatrix& binary) {
  const std::size_t n = binary.n_samples();
  const std::size_t d = binary.n_dims();
  const std::size_t row_bytes = (d + 7) / 8;
  std::vector<std::uint8_t> bytes(kBarcodeHeaderBytes + n * row_bytes, 0);
  std::memcpy(bytes.data(), "BBAR", 4);
  bytes[4] = kBarcodeFormatVersion;
  const std::uint32_t n32 = checked_u32(n, "n_samples");
  const std::uint32_t d32 = checked_u32(d, "n_dims");
  for (int b = 0; b < 4; ++b) {
    bytes[5 + b] = static_cast<std::uint8_t>((n32 >> (8 * b)) & 0xff);
    bytes[9 + b] = static_cast<std::uint8_t>((d32 >> (8 * b)) & 0xff);
  }
  std::uint8_t* payload = bytes.data() + kBarcodeHeaderBytes;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (binary.bit(r, c)) payload[r * row_bytes + c / 8] |= static_cast<std::uint8_t>(0x80u >> (c % 8));
    }
  }
  return bytes;
}

BinaryMatrix decode_barcodes(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < kBarcodeHeaderBytes) {
    throw ParseError(source, "byte " + std::to_string(bytes.size()), "truncated header");
  }
  if (std::memcmp(bytes.data(), "BBAR", 4) != 0) throw ParseError(source, "byte 0", "bad magic, expected BBAR");
  if (bytes[4] != kBarcodeFormatVersion) {
    throw ParseError(source, "byte 4", "unsupported format version " + std::to_string(bytes[4]));
  }
  const std::size_t n = get_u32(bytes.data() + 5);
  const std::size_t d = get_u32(bytes.data() + 9);
  const std::size_t row_bytes = (d + 7) / 8;
  const std::size_t expected = kBarcodeHeaderBytes + n * row_bytes;
  if (bytes.size() < expected) {
    throw ParseError(source, "byte " + std::to_string(bytes.size()),
                     "truncated payload, expected " + std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) {
    throw ParseError(source, "byte " + std::to_string(expected), "trailing bytes after payload");
  }
  BinaryMatrix out(n, d);
  const std::uint8_t* payload = bytes.data() + kBarcodeHeaderBytes;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (payload[r * row_bytes + c / 8] & (0x80u >> (c % 8))) out.set_bit(r, c, true);
    }
  }
  return out;
}

void save_barcodes(const BinaryMatrix& binary, const std::filesystem::path& path) {
  const auto bytes = encode_barcodes(binary);
  std::ofstream out = open_out(path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

BinaryMatrix load_barcodes(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const auto bytes = slurp(in);
  return decode_barcodes(bytes, path.string());
}

void write_thresholds(std::ostream& out, const ThresholdVector& thresholds,
                      const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << '\n';
  char buf[64];
  for (double v : thresholds.values()) {
    std::snprintf(buf, sizeof buf, "%#.17g", v);
    out << buf << '\n';
  }
}

ThresholdVector read_thresholds(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    double v = 0.0;
    if (!parse_number(t, v)) {
      throw ParseError(source, "line " + std::to_string(line_no), "not a number: '" + std::string(t) + "'");
    }
    if (!std::isfinite(v)) throw ParseError(source, "line " + std::to_string(line_no), "non-finite cut-point");
    values.push_back(v);
  }
  if (values.empty()) throw ParseError(source, "", "no cut-points");
  return ThresholdVector(std::move(values));
}

void save_thresholds(const std::filesystem::path& path, const ThresholdVector& thresholds,
                     const std::vector<std::string>& header) {
  std::ofstream out = open_out(path);
  write_thresholds(out, thresholds, header);
  finish(out, path);
}

ThresholdVector load_thresholds(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_thresholds(in, path.string());
}

void save_labels(const std::filesystem::path& path, const LabelVector& labels) {
  std::ofstream out = open_out(path);
  for (std::uint32_t y : labels.values()) out << y << '\n';
  finish(out, path);
}

LabelVector load_labels(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::uint32_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::uint32_t y = 0;
    if (!parse_number(t, y)) {
      throw ParseError(path.string(), "line " + std::to_string(line_no), "bad label '" + std::string(t) + "'");
    }
    labels.push_back(y);
  }
  if (labels.empty()) throw ParseError(path.string(), "", "no labels");
  return LabelVector::from_values(std::move(labels));
}

void write_model(std::ostream& out, const ClassifierModel& model) {
  out << "# softmax logistic regression\n";
  out << "# n_classes " << model.n_classes << " n_dims " << model.n_dims << " (bias last)\n";
  out << "# epochs " << model.meta.epochs << " final_loss " << format_double(model.meta.final_loss)
      << " converged " << (model.meta.converged ? 1 : 0) << '\n';
  for (std::size_t k = 0; k < model.n_classes; ++k) {
    for (std::size_t d = 0; d <= model.n_dims; ++d) {
      out << (d ? " " : "") << format_double(model.weight(k, d));
    }
    out << '\n';
  }
}

void write_trace_jsonl(std::ostream& out, const OptimizationTrace& trace) {
  using nlohmann::json;
  for (const DecisionRecord& d : trace.decisions) {
    json j = {{"type", "decision"},   {"run", d.run},
              {"iter", d.iteration},  {"dim", d.dim},
              {"x", d.x_value},       {"y", d.y_value},
              {"fx", d.x_fitness},    {"fy", d.y_fitness},
              {"winner", d.winner == Winner::x ? "x" : "y"},
              {"lower", d.lower},     {"upper", d.upper}};
    out << j.dump() << '\n';
  }
  for (const RunRecord& r : trace.runs) {
    json j = {{"type", "run"}, {"run", r.run}, {"fitness", r.final_fitness}, {"best", r.best_fitness}};
    out << j.dump() << '\n';
  }
  json s = {{"type", "summary"},         {"dims", trace.n_dims},
            {"r_max", trace.r_max},      {"maxiter", trace.maxiter},
            {"evaluations", trace.evaluations}, {"cache_hits", trace.cache_hits}};
  out << s.dump() << '\n';
}

}  // namespace barcoder
