#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kwforge/attack.hpp"
#include "kwforge/model.hpp"
#include "kwforge/projection.hpp"

namespace kwforge {

struct ParallelPair {
  std::string source;
  std::string reference;

  friend bool operator==(const ParallelPair&, const ParallelPair&) = default;
};

/// Tab-separated "source<TAB>reference" lines; blank lines are skipped.
/// Throws DataError naming the line of a malformed entry.
std::vector<ParallelPair> load_parallel_corpus(const std::filesystem::path& tsv);

/// Two line-aligned files; blank lines are skipped in each. Throws DataError
/// naming both counts when they differ.
std::vector<ParallelPair> load_parallel_corpus(const std::filesystem::path& sources,
                                               const std::filesystem::path& references);

// Embedding map file -------------------------------------------------------
//
// Little-endian binary: "KWFMAP01", u64 d_lm, u64 d, u64 fingerprint of the
// translation model's embedding table, d_lm*d f64 weight (row-major), d_lm
// f64 bias.

void save_map(const std::filesystem::path& path, const EmbeddingMap& map, std::uint64_t table_fingerprint);

/// Throws DataError on a malformed file or, when `expected_table_fingerprint`
/// is given, on a fingerprint mismatch.
EmbeddingMap load_map(const std::filesystem::path& path,
                      std::optional<std::uint64_t> expected_table_fingerprint = std::nullopt);

// Projection index cache ---------------------------------------------------
//
// "KWFIDX01", u64 fingerprint, u64 |V|, u64 d_lm, u64 d, |V| u8 exclusion
// flags, |V|*d_lm f64 normalized rows, |V|*d f64 embedding table.

void save_index(const std::filesystem::path& path, const ProjectionIndex& index);

/// Returns nullopt when the file is missing or its fingerprint differs.
std::optional<ProjectionIndex> load_index(const std::filesystem::path& path, std::uint64_t expected_fingerprint);

/// Cache directory from KWFORGE_CACHE, if set and non-empty.
std::optional<std::filesystem::path> cache_directory();

/// Loads the index from `cache_dir` when a matching file exists, otherwise
/// builds it and (if a cache dir is given) stores it.
ProjectionIndex load_or_build_index(const NmtModel& model, const EmbeddingMap& map,
                                    const std::optional<std::filesystem::path>& cache_dir);

// Result records -----------------------------------------------------------

inline constexpr const char* kResultSchema = "kwforge.attack-results";
inline constexpr int kResultSchemaVersion = 1;

/// Settings shared by every record of one run.
struct RunMetadata {
  std::string model;
  std::string target_mode;  // "keyword" or "nth"
  std::string keyword;      // keyword mode
  std::size_t nth = 0;      // nth mode
  double learning_rate = 0.02;
  std::vector<double> alpha_schedule;
  std::size_t max_iterations = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct ResultRecord {
  std::string source;
  std::string reference;  // empty when unknown
  std::string clean_translation;
  std::string adversarial_translation;
  std::string keyword;                // resolved target token as text
  std::optional<double> similarity;   // sentence similarity(source, adversarial)
  AttackResult result;

  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

struct ResultFile {
  RunMetadata run;
  std::vector<ResultRecord> records;
};

/// One JSON object per line; the first line is a schema-versioned header.
void write_result_file(const std::filesystem::path& path, const ResultFile& file);
/// Throws DataError on a missing header, a schema/version mismatch or a bad line.
ResultFile read_result_file(const std::filesystem::path& path);

}  // namespace kwforge
