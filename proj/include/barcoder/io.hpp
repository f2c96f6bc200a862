#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "barcoder/core_types.hpp"
#include "barcoder/cs_optimizer.hpp"
#include "barcoder/evaluator.hpp"

namespace barcoder {

/// Malformed input. `location` is "line L, column C" or "byte B".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, const std::string& location, const std::string& what);
};

enum class EmbeddingFormat { automatic, text, binary };

EmbeddingFormat parse_embedding_format(const std::string& name);

inline constexpr std::uint8_t kEmbeddingFormatVersion = 1;
inline constexpr std::uint8_t kBarcodeFormatVersion = 1;

struct LoadedEmbeddings {
  EmbeddingMatrix matrix;
  std::optional<LabelVector> labels;
  std::vector<std::string> warnings;
};

/// Text: comma-separated, one header row, one sample per line. A last header
/// cell named "label" marks a trailing integer label column.
/// Binary: "BEMB", version byte, u32 n_samples, u32 n_dims (little-endian),
/// then row-major little-endian float32 values. No labels.
LoadedEmbeddings read_embeddings_text(std::istream& in, const std::string& source = "<stream>");
LoadedEmbeddings read_embeddings_binary(std::istream& in, const std::string& source = "<stream>");
LoadedEmbeddings load_embeddings(const std::filesystem::path& path,
                                 EmbeddingFormat format = EmbeddingFormat::automatic);

void write_embeddings_text(std::ostream& out, const EmbeddingMatrix& matrix,
                           const LabelVector* labels = nullptr);
void write_embeddings_binary(std::ostream& out, const EmbeddingMatrix& matrix);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                     const LabelVector* labels, EmbeddingFormat format);

/// Barcode file: "BBAR", version byte, u32 n_samples, u32 n_dims, then each
/// row's bits MSB-first, rows padded to whole bytes.
std::vector<std::uint8_t> encode_barcodes(const BinaryMatrix& binary);
BinaryMatrix decode_barcodes(std::span<const std::uint8_t> bytes, const std::string& source = "<bytes>");
void save_barcodes(const BinaryMatrix& binary, const std::filesystem::path& path);
BinaryMatrix load_barcodes(const std::filesystem::path& path);

/// One cut-point per line with 17 significant digits; '#' lines are comments.
void write_thresholds(std::ostream& out, const ThresholdVector& thresholds,
                      const std::vector<std::string>& header = {});
ThresholdVector read_thresholds(std::istream& in, const std::string& source = "<stream>");
void save_thresholds(const std::filesystem::path& path, const ThresholdVector& thresholds,
                     const std::vector<std::string>& header = {});
ThresholdVector load_thresholds(const std::filesystem::path& path);

/// One integer label per line; '#' lines are comments.
void save_labels(const std::filesystem::path& path, const LabelVector& labels);
LabelVector load_labels(const std::filesystem::path& path);

/// Flat weight file: header comments, then n_classes lines of n_dims + 1
/// values (bias last).
void write_model(std::ostream& out, const ClassifierModel& model);

/// One JSON object per line: a "decision" record per coordinate step, a "run"
/// record per restart, and a closing "summary" record.
void write_trace_jsonl(std::ostream& out, const OptimizationTrace& trace);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace barcoder
