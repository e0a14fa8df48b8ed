#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kwforge/attack.hpp"
#include "kwforge/io.hpp"
#include "kwforge/model.hpp"

namespace kwforge {

/// One attacked sentence with everything needed to score it.
using BenchmarkRecord = ResultRecord;

/// BLEU settings recorded with every report.
inline constexpr const char* kBleuSignature =
    "corpus BLEU, 4-gram, exp smoothing, brevity penalty, whitespace tokenization, case-sensitive";

struct KeywordBreakdown {
  std::size_t total = 0;
  std::size_t successful = 0;
  std::size_t trivially_successful = 0;
  double asr = 0.0;
};

struct MetricsReport {
  double asr = 0.0;
  std::optional<double> rdbleu;      // over successful, non-trivial attacks
  std::optional<double> similarity;  // likewise
  std::size_t total = 0;
  std::size_t successful = 0;        // includes trivially successful
  std::size_t trivially_successful = 0;
  std::size_t failed = 0;
  std::size_t errored = 0;           // also counted in failed
  std::map<std::string, KeywordBreakdown> per_keyword;
  std::string bleu_signature = kBleuSignature;
  std::vector<std::string> warnings;
};

/// successes / total. Errored results count as failures. Throws
/// InvalidInputError on an empty list.
double compute_asr(std::span<const AttackResult> results);

/// Corpus BLEU in [0, 100]: clipped n-gram precisions up to 4, the mteval
/// "exp" smoothing for orders with no match, and the brevity penalty.
/// Throws InvalidInputError on empty or mismatched lists.
double compute_corpus_bleu(const std::vector<std::string>& hypotheses,
                           const std::vector<std::string>& references);

/// (clean - adversarial) / clean. Throws UndefinedMetricError when clean is 0.
double relative_decrease(double clean_bleu, double adversarial_bleu);

/// Relative BLEU decrease over successful, non-trivial records, both sides
/// scored against the references. 0 when no such record exists.
double compute_rdbleu(std::span<const BenchmarkRecord> records);

/// Semantic similarity between two sentences, 1 for identical meaning.
class SentenceSimilarityScorer {
 public:
  virtual ~SentenceSimilarityScorer() = default;
  virtual double score(const std::string& a, const std::string& b) const = 0;
};

/// Cosine between the mean LM-space embeddings of the two sentences.
class MeanEmbeddingScorer final : public SentenceSimilarityScorer {
 public:
  MeanEmbeddingScorer(const Vocabulary& vocab, const Matrix& embed_table, const EmbeddingMap& map);
  MeanEmbeddingScorer(const NmtModel& model, const EmbeddingMap& map)
      : MeanEmbeddingScorer(model.vocabulary(), model.embed_table(), map) {}

  double score(const std::string& a, const std::string& b) const override;

 private:
  Vector sentence_vector(const std::string& s) const;

  const Vocabulary& vocab_;
  Matrix lm_table_;
};

struct SimilaritySummary {
  std::optional<double> mean;  // nullopt when nothing was scored
  std::size_t scored = 0;
  std::vector<std::string> warnings;
};

/// Mean scorer(source, adversarial) over successful, non-trivial records.
/// Records whose scoring throws are skipped with a warning.
SimilaritySummary compute_similarity(std::span<const BenchmarkRecord> records,
                                     const SentenceSimilarityScorer& scorer);

/// Metrics from already scored records (similarity read from each record).
MetricsReport summarize(std::span<const BenchmarkRecord> records);

/// `sample_size` distinct indices below `total` (0: all), chosen by a seeded
/// shuffle and returned in ascending order. Throws InvalidInputError when
/// `sample_size` exceeds `total`.
std::vector<std::size_t> sample_indices(std::size_t total, std::size_t sample_size, std::uint64_t seed);

/// Pairs each result with its texts and, for completed attacks, the
/// similarity of source and adversarial text. Scorer failures are appended
/// to `warnings` and leave the similarity empty.
std::vector<BenchmarkRecord> assemble_records(const Vocabulary& vocab, const std::vector<ParallelPair>& pairs,
                                              const std::vector<AttackResult>& results,
                                              const SentenceSimilarityScorer& scorer,
                                              std::vector<std::string>& warnings);

struct BenchmarkOptions {
  std::size_t sample_size = 0;  // 0: every pair
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct BenchmarkOutcome {
  MetricsReport report;
  std::vector<BenchmarkRecord> records;
};

/// Samples `sample_size` pairs (seeded, without replacement, dataset order
/// kept), attacks each source, scores similarity and computes the metrics.
BenchmarkOutcome run_benchmark(const NmtModel& model, const EmbeddingMap& map, const ProjectionIndex& index,
                               const std::vector<ParallelPair>& dataset, const TargetSpec& target,
                               const AttackConfig& cfg, const BenchmarkOptions& options,
                               const SentenceSimilarityScorer& scorer);

/// Report as an indented JSON document.
std::string report_json(const MetricsReport& report);

}  // namespace kwforge
