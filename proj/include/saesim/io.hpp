#pragma once

// On-disk interchange formats: NPY v1.0 / CSV matrices, JSON-lines token
// tables, the plain-text concept lexicon, and JSON / CSV score reports.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "saesim/stoplist.hpp"
#include "saesim/types.hpp"

namespace saesim::io {

enum class DType { f32, f64 };

struct MatrixFileHeader {
  DType dtype = DType::f64;
  Index rows = 0;
  Index cols = 0;
  bool fortran_order = false;
  /// Byte offset of the first payload byte.
  std::size_t data_offset = 0;
};

/// Parses and checks an NPY v1.0 header. Throws FormatError with a byte offset.
MatrixFileHeader parse_npy_header(std::string_view bytes);

/// Decodes a complete NPY v1.0 file image into a 64-bit row-major matrix.
Matrix parse_npy(std::string_view bytes);
/// Encodes `m` as an NPY v1.0 file image (little-endian, C order).
std::string encode_npy(const Matrix& m, DType dtype = DType::f64);

Matrix parse_csv(std::string_view text);

/// Loads `.npy` or `.csv` by extension; anything else is tried as NPY when it
/// starts with the NPY magic and as CSV otherwise.
Matrix load_matrix(const std::filesystem::path& path);
void save_npy(const std::filesystem::path& path, const Matrix& m, DType dtype = DType::f64);

TokenTable parse_token_table(std::string_view text);
TokenTable load_token_table(const std::filesystem::path& path);
void save_token_table(const std::filesystem::path& path, const TokenTable& table);

/// Parses the lexicon text format:
///
///     # comment
///     Emotions = joy, glee, pride
///
/// Keywords are trimmed, lowercased and deduplicated (first occurrence wins).
/// A keyword that normalizes to a stoplist token is rejected.
ConceptLexicon parse_lexicon(std::string_view text, const StoplistConfig& stoplist = {});
ConceptLexicon load_lexicon(const std::filesystem::path& path, const StoplistConfig& stoplist = {});
std::string format_lexicon(const ConceptLexicon& lexicon);
void save_lexicon(const std::filesystem::path& path, const ConceptLexicon& lexicon);

/// Text of the shipped lexicon (eight categories).
std::string_view default_lexicon_text();
ConceptLexicon default_lexicon();
/// Value of SAESIM_LEXICON when set, empty otherwise.
std::filesystem::path lexicon_path_from_env();

enum class ReportFormat { json, csv };

/// Picks the format from the file extension; `.csv` is CSV, anything else JSON.
ReportFormat format_for(const std::filesystem::path& path);

/// Report tagged with the layer pair it was computed for.
struct SweepRow {
  int layer_a = 0;
  int layer_b = 0;
  ScoreReport report;
  /// Empty on success, otherwise a diagnostic for a pair that could not be scored.
  std::string status;
};

/// Subspace-test outcome for one concept category.
struct SubspaceRow {
  std::string category;
  int test = 1;  ///< 1: shuffled pairing of the same subspaces; 2: random subsets of the same sizes.
  ScoreReport report;
  /// Empty on success, otherwise a warning (e.g. too few pairs survived).
  std::string status;
};

/// Floats use 6 significant digits; keys and columns have a fixed order.
std::string format_report(const ScoreReport& report, ReportFormat format);
std::string format_reports(std::span<const ScoreReport> reports, ReportFormat format);
std::string format_sweep(std::span<const SweepRow> rows, ReportFormat format);
std::string format_subspace(std::span<const SubspaceRow> rows, ReportFormat format);

void write_report(const ScoreReport& report, const std::filesystem::path& path,
                  ReportFormat format);
void write_reports(std::span<const ScoreReport> reports, const std::filesystem::path& path,
                   ReportFormat format);
void write_sweep(std::span<const SweepRow> rows, const std::filesystem::path& path,
                 ReportFormat format);
void write_subspace(std::span<const SubspaceRow> rows, const std::filesystem::path& path,
                    ReportFormat format);

/// Number rendering shared by every report writer.
std::string format_number(double v);

std::string read_file(const std::filesystem::path& path);
/// Throws InputError when the path cannot be written.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace saesim::io
