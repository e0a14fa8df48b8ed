#include "kwforge/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "kwforge/errors.hpp"

namespace kwforge {

namespace {

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

bool scored(const BenchmarkRecord& r) {
  return r.result.success && !r.result.trivial && !r.result.error;
}

}  // namespace

double compute_asr(std::span<const AttackResult> results) {
  if (results.empty()) throw InvalidInputError("compute_asr: no results");
  const auto wins = std::count_if(results.begin(), results.end(),
                                  [](const AttackResult& r) { return r.success && !r.error; });
  return static_cast<double>(wins) / static_cast<double>(results.size());
}

double compute_corpus_bleu(const std::vector<std::string>& hypotheses,
                           const std::vector<std::string>& references) {
  if (hypotheses.empty()) throw InvalidInputError("bleu: no sentences");
  if (hypotheses.size() != references.size()) {
    throw InvalidInputError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                            std::to_string(references.size()) + " references");
  }
  constexpr std::size_t kOrder = 4;
  std::array<double, kOrder> correct{}, total{};
  double sys_len = 0.0, ref_len = 0.0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto hyp = words(hypotheses[s]);
    const auto ref = words(references[s]);
    sys_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    for (std::size_t n = 1; n <= kOrder; ++n) {
      const NgramCounts h = ngrams(hyp, n);
      const NgramCounts r = ngrams(ref, n);
      for (const auto& [gram, count] : h) {
        auto it = r.find(gram);
        if (it != r.end()) correct[n - 1] += static_cast<double>(std::min(count, it->second));
      }
      if (hyp.size() >= n) total[n - 1] += static_cast<double>(hyp.size() - n + 1);
    }
  }
  if (sys_len == 0.0 || correct[0] == 0.0) return 0.0;

  double log_sum = 0.0;
  double smooth = 1.0;
  for (std::size_t n = 0; n < kOrder; ++n) {
    if (total[n] == 0.0) return 0.0;  // hypotheses too short for this order
    double p;
    if (correct[n] == 0.0) {
      smooth *= 2.0;
      p = 1.0 / (smooth * total[n]);
    } else {
      p = correct[n] / total[n];
    }
    log_sum += std::log(p);
  }
  const double bp = sys_len < ref_len ? std::exp(1.0 - ref_len / sys_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(kOrder));
}

double relative_decrease(double clean_bleu, double adversarial_bleu) {
  if (clean_bleu == 0.0) throw UndefinedMetricError("RDBLEU undefined: clean BLEU is 0");
  return (clean_bleu - adversarial_bleu) / clean_bleu;
}

double compute_rdbleu(std::span<const BenchmarkRecord> records) {
  std::vector<std::string> clean, adv, refs;
  for (const BenchmarkRecord& r : records) {
    if (!scored(r)) continue;
    clean.push_back(r.clean_translation);
    adv.push_back(r.adversarial_translation);
    refs.push_back(r.reference);
  }
  if (clean.empty()) return 0.0;
  return relative_decrease(compute_corpus_bleu(clean, refs), compute_corpus_bleu(adv, refs));
}

MeanEmbeddingScorer::MeanEmbeddingScorer(const Vocabulary& vocab, const Matrix& embed_table,
                                         const EmbeddingMap& map)
    : vocab_(vocab) {
  if (embed_table.cols() != map.input_dim()) throw ShapeError("scorer: map/table width mismatch");
  lm_table_ = (embed_table * map.weight.transpose()).rowwise() + map.bias.transpose();
}

Vector MeanEmbeddingScorer::sentence_vector(const std::string& s) const {
  const TokenSequence seq = vocab_.tokenize(s);
  Vector acc = Vector::Zero(lm_table_.cols());
  for (TokenId id : seq.ids) acc += lm_table_.row(id).transpose();
  return acc / static_cast<double>(seq.size());
}

double MeanEmbeddingScorer::score(const std::string& a, const std::string& b) const {
  const Vector va = sentence_vector(a);
  const Vector vb = sentence_vector(b);
  const double aa = va.dot(va), bb = vb.dot(vb);
  if (!(aa > 0.0) || !(bb > 0.0)) throw NumericError("scorer: zero sentence vector");
  return std::clamp(va.dot(vb) / std::sqrt(aa * bb), -1.0, 1.0);
}

SimilaritySummary compute_similarity(std::span<const BenchmarkRecord> records,
                                     const SentenceSimilarityScorer& scorer) {
  SimilaritySummary out;
  double sum = 0.0;
  for (const BenchmarkRecord& r : records) {
    if (!scored(r)) continue;
    try {
      sum += scorer.score(r.source, r.result.adversarial_text);
      ++out.scored;
    } catch (const std::exception& e) {
      out.warnings.push_back("similarity skipped for '" + r.source + "': " + e.what());
    }
  }
  if (out.scored > 0) out.mean = sum / static_cast<double>(out.scored);
  return out;
}

MetricsReport summarize(std::span<const BenchmarkRecord> records) {
  if (records.empty()) throw InvalidInputError("summarize: no records");
  MetricsReport rep;
  std::vector<AttackResult> results;
  double sim_sum = 0.0;
  std::size_t sim_count = 0;
  for (const BenchmarkRecord& r : records) {
    results.push_back(r.result);
    ++rep.total;
    KeywordBreakdown& kw = rep.per_keyword[r.keyword];
    ++kw.total;
    if (r.result.error) {
      ++rep.errored;
      ++rep.failed;
      continue;
    }
    if (r.result.success) {
      ++rep.successful;
      ++kw.successful;
      if (r.result.trivial) {
        ++rep.trivially_successful;
        ++kw.trivially_successful;
      }
    } else {
      ++rep.failed;
    }
    if (scored(r)) {
      if (r.similarity) {
        sim_sum += *r.similarity;
        ++sim_count;
      } else {
        rep.warnings.push_back("no similarity score for '" + r.source + "'");
      }
    }
  }
  for (auto& [k, kw] : rep.per_keyword) kw.asr = static_cast<double>(kw.successful) / static_cast<double>(kw.total);
  rep.asr = compute_asr(results);
  try {
    rep.rdbleu = compute_rdbleu(records);
  } catch (const UndefinedMetricError& e) {
    rep.warnings.push_back(e.what());
  }
  if (sim_count > 0) rep.similarity = sim_sum / static_cast<double>(sim_count);
  return rep;
}

std::vector<std::size_t> sample_indices(std::size_t total, std::size_t sample_size, std::uint64_t seed) {
  const std::size_t n = sample_size == 0 ? total : sample_size;
  if (n > total) {
    throw InvalidInputError("sample size " + std::to_string(n) + " exceeds dataset size " + std::to_string(total));
  }
  std::vector<std::size_t> picked(total);
  std::iota(picked.begin(), picked.end(), 0);
  if (n < total) {
    std::mt19937_64 rng(seed);
    std::shuffle(picked.begin(), picked.end(), rng);
    picked.resize(n);
    std::sort(picked.begin(), picked.end());
  }
  return picked;
}

std::vector<BenchmarkRecord> assemble_records(const Vocabulary& vocab, const std::vector<ParallelPair>& pairs,
                                              const std::vector<AttackResult>& results,
                                              const SentenceSimilarityScorer& scorer,
                                              std::vector<std::string>& warnings) {
  if (pairs.size() != results.size()) throw InvalidInputError("assemble_records: pairs/results size mismatch");
  std::vector<BenchmarkRecord> out;
  out.reserve(pairs.size());
  for (std::size_t r = 0; r < results.size(); ++r) {
    BenchmarkRecord rec;
    rec.source = pairs[r].source;
    rec.reference = pairs[r].reference;
    rec.result = results[r];
    if (!rec.result.error) {
      rec.clean_translation = vocab.detokenize(rec.result.clean_translation);
      rec.adversarial_translation = vocab.detokenize(rec.result.translation);
      rec.keyword = vocab.token(rec.result.target_token);
      try {
        rec.similarity = scorer.score(rec.source, rec.result.adversarial_text);
      } catch (const std::exception& e) {
        warnings.push_back("similarity skipped for '" + rec.source + "': " + e.what());
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

BenchmarkOutcome run_benchmark(const NmtModel& model, const EmbeddingMap& map, const ProjectionIndex& index,
                               const std::vector<ParallelPair>& dataset, const TargetSpec& target,
                               const AttackConfig& cfg, const BenchmarkOptions& options,
                               const SentenceSimilarityScorer& scorer) {
  if (dataset.empty()) throw DataError("benchmark: empty dataset");
  const std::vector<std::size_t> picked = sample_indices(dataset.size(), options.sample_size, options.seed);

  const Vocabulary& vocab = model.vocabulary();
  std::vector<ParallelPair> pairs;
  std::vector<TokenSequence> sources;
  for (std::size_t i : picked) {
    pairs.push_back(dataset[i]);
    sources.push_back(vocab.tokenize(dataset[i].source));
  }
  const std::vector<AttackResult> results = attack_batch(model, map, index, sources, target, cfg, options.workers);

  BenchmarkOutcome out;
  std::vector<std::string> warnings;
  out.records = assemble_records(vocab, pairs, results, scorer, warnings);
  out.report = summarize(out.records);
  out.report.warnings.insert(out.report.warnings.begin(), warnings.begin(), warnings.end());
  return out;
}

std::string report_json(const MetricsReport& report) {
  using nlohmann::json;
  json kw = json::object();
  for (const auto& [k, b] : report.per_keyword) {
    kw[k] = {{"total", b.total},
             {"successful", b.successful},
             {"trivially_successful", b.trivially_successful},
             {"asr", b.asr}};
  }
  json j = {
      {"asr", report.asr},
      {"rdbleu", report.rdbleu ? json(*report.rdbleu) : json(nullptr)},
      {"similarity", report.similarity ? json(*report.similarity) : json(nullptr)},
      {"counts",
       {{"total", report.total},
        {"successful", report.successful},
        {"trivially_successful", report.trivially_successful},
        {"failed", report.failed},
        {"errored", report.errored}}},
      {"per_keyword", kw},
      {"bleu", report.bleu_signature},
      {"warnings", report.warnings},
  };
  return j.dump(2);
}

}  // namespace kwforge
