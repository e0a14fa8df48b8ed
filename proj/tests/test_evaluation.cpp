#include <gtest/gtest.h>

#include <algorithm>

#include "kwforge/errors.hpp"
#include "kwforge/evaluation.hpp"
#include "support.hpp"

using namespace kwforge;

namespace {

AttackResult outcome(bool success, bool trivial = false) {
  AttackResult r;
  r.success = success;
  r.trivial = trivial;
  return r;
}

BenchmarkRecord record(const std::string& reference, const std::string& clean, const std::string& adv, bool success,
                       bool trivial = false) {
  BenchmarkRecord r;
  r.source = "src";
  r.reference = reference;
  r.clean_translation = clean;
  r.adversarial_translation = adv;
  r.keyword = "guerre";
  r.result = outcome(success, trivial);
  r.result.adversarial_text = "src";
  return r;
}

class ConstantScorer : public SentenceSimilarityScorer {
 public:
  explicit ConstantScorer(double v) : v_(v) {}
  double score(const std::string& a, const std::string&) const override {
    if (a == "boom") throw ModelError("scorer failed");
    return v_;
  }

 private:
  double v_;
};

}  // namespace

// ASR -----------------------------------------------------------------------------------

TEST(Asr, AllSuccessful) {
  const std::vector<AttackResult> r = {outcome(true), outcome(true, true)};
  EXPECT_EQ(compute_asr(r), 1.0);
}

TEST(Asr, ThreeOfFour) {
  const std::vector<AttackResult> r = {outcome(true), outcome(false), outcome(true), outcome(true, true)};
  EXPECT_EQ(compute_asr(r), 0.75);
}

TEST(Asr, EmptyIsError) { EXPECT_THROW(compute_asr({}), InvalidInputError); }

TEST(Asr, ErroredResultsCountAsFailures) {
  std::vector<AttackResult> r = {outcome(true), outcome(false)};
  r[1].error = "boom";
  EXPECT_EQ(compute_asr(r), 0.5);
}

TEST(Asr, AppendingMonotonicity) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.6);
  std::vector<AttackResult> r = {outcome(coin(rng))};
  for (int i = 0; i < 200; ++i) {
    const double before = compute_asr(r);
    const bool s = coin(rng);
    r.push_back(outcome(s));
    if (s) {
      EXPECT_GE(compute_asr(r), before);
    } else {
      EXPECT_LE(compute_asr(r), before);
    }
  }
}

// BLEU ------------------------------------------------------------------------------------

TEST(Bleu, IdenticalIsHundred) {
  const std::vector<std::string> refs = {"le chat voit le chien noir", "un homme aime la paix et la guerre"};
  EXPECT_NEAR(compute_corpus_bleu(refs, refs), 100.0, 1e-12);
}

TEST(Bleu, NoSharedNgramsIsZero) {
  EXPECT_EQ(compute_corpus_bleu({"a b c d e"}, {"v w x y z"}), 0.0);
}

// Counts: 1-gram 10/14, 2-gram 6/12, 3-gram 4/10, 4-gram 2/8; hypothesis
// longer than reference (14 vs 12) so no brevity penalty.
// BLEU = 100 * (10/14 * 6/12 * 4/10 * 2/8)^(1/4).
TEST(Bleu, TwoSentenceHandOracle) {
  const std::vector<std::string> hyp = {"the cat sat on the mat", "a dog ran in the big park today"};
  const std::vector<std::string> ref = {"the cat sat on a mat", "the dog ran in the park"};
  EXPECT_NEAR(compute_corpus_bleu(hyp, ref), 43.47208719449914, 1e-6);
}

// Counts: 5/7, 2/5, 1/3, 0/2. The empty 4-gram precision is smoothed to
// 1/(2*2); length 7 vs 10 gives brevity penalty exp(1 - 10/7).
TEST(Bleu, SmoothingAndBrevityOracle) {
  const std::vector<std::string> hyp = {"le chat voit un chien", "un homme"};
  const std::vector<std::string> ref = {"le chat voit le chien", "le homme aime la guerre"};
  EXPECT_NEAR(compute_corpus_bleu(hyp, ref), 25.589480596702092, 1e-6);
}

TEST(Bleu, SuccessiveSmoothingOracle) {
  // Counts 3/4, 1/3, 0/2, 0/1: both empty orders smoothed, 1/(2*2) then 1/(4*1).
  EXPECT_NEAR(compute_corpus_bleu({"a b x d"}, {"a b c d"}), 35.35533905932737, 1e-9);
}

TEST(Bleu, ShortHypothesisBrevity) {
  EXPECT_NEAR(compute_corpus_bleu({"a b c d"}, {"a b c d e f"}), 60.653065971263366, 1e-9);
}

TEST(Bleu, HypothesesShorterThanFourTokensScoreZero) {
  EXPECT_EQ(compute_corpus_bleu({"a b"}, {"a b"}), 0.0);
}

TEST(Bleu, Errors) {
  EXPECT_THROW(compute_corpus_bleu({"a"}, {"a", "b"}), InvalidInputError);
  EXPECT_THROW(compute_corpus_bleu({}, {}), InvalidInputError);
}

TEST(Bleu, PermutationInvariantAndBounded) {
  const auto pairs = make_toy_parallel(3, 30);
  std::vector<std::string> hyp, ref;
  std::mt19937_64 rng(5);
  for (const auto& p : pairs) {
    ref.push_back(p.reference);
    std::string h = p.reference;
    if (rng() % 2) h += " guerre";
    if (rng() % 3 == 0) h = "le " + h;
    hyp.push_back(h);
  }
  const double base = compute_corpus_bleu(hyp, ref);
  EXPECT_GE(base, 0.0);
  EXPECT_LE(base, 100.0);
  std::vector<std::size_t> order(hyp.size());
  std::iota(order.begin(), order.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::string> h2, r2;
    for (std::size_t i : order) {
      h2.push_back(hyp[i]);
      r2.push_back(ref[i]);
    }
    EXPECT_NEAR(compute_corpus_bleu(h2, r2), base, 1e-9);
  }
}

// RDBLEU ------------------------------------------------------------------------------------

TEST(RdBleu, IdenticalTranslationsGiveZero) {
  const std::vector<BenchmarkRecord> r = {record("le chat voit le chien", "le chat voit le chien", "le chat voit le chien", true),
                                          record("un homme aime la paix", "un homme aime la guerre", "un homme aime la guerre", true)};
  EXPECT_EQ(compute_rdbleu(r), 0.0);
}

TEST(RdBleu, RelativeDecreaseArithmetic) {
  EXPECT_NEAR(relative_decrease(40.0, 32.0), 0.2, 1e-15);
  EXPECT_THROW(relative_decrease(0.0, 10.0), UndefinedMetricError);
}

TEST(RdBleu, CleanBleuZeroIsUndefined) {
  const std::vector<BenchmarkRecord> r = {record("a b c d e", "v w x y z", "v w x y z", true)};
  EXPECT_THROW(compute_rdbleu(r), UndefinedMetricError);
}

TEST(RdBleu, OnlySuccessfulNonTrivialRecordsCount) {
  const std::string ref = "le chat voit le chien noir";
  std::vector<BenchmarkRecord> r = {record(ref, ref, "le guerre voit le chien noir", true)};
  const double expected = relative_decrease(compute_corpus_bleu({ref}, {ref}),
                                            compute_corpus_bleu({"le guerre voit le chien noir"}, {ref}));
  EXPECT_NEAR(compute_rdbleu(r), expected, 1e-12);
  r.push_back(record(ref, "x y z w", "totally different text here", false));
  r.push_back(record(ref, "a b c d", "a b c d", true, true));
  BenchmarkRecord errored = record(ref, "", "", true);
  errored.result.error = "boom";
  r.push_back(errored);
  EXPECT_NEAR(compute_rdbleu(r), expected, 1e-12);
  EXPECT_LE(compute_rdbleu(r), 1.0);
}

TEST(RdBleu, NoQualifyingRecordsGivesZero) {
  EXPECT_EQ(compute_rdbleu(std::vector<BenchmarkRecord>{record("a b c d", "a b c d", "e f g h", false)}), 0.0);
}

// Similarity -------------------------------------------------------------------------------

TEST(Similarity, SourceEqualsAdversarialIsOne) {
  const ToyModel m = make_toy_model(7);
  const MeanEmbeddingScorer scorer(m, EmbeddingMap::identity_padded(16, 16));
  EXPECT_NEAR(scorer.score("the cat sees a dog", "the cat sees a dog"), 1.0, 1e-12);
  BenchmarkRecord r = record("le chat", "le chat", "le guerre", true);
  r.source = "the cat sees a dog";
  r.result.adversarial_text = r.source;
  const SimilaritySummary s = compute_similarity(std::vector<BenchmarkRecord>{r}, scorer);
  ASSERT_TRUE(s.mean.has_value());
  EXPECT_NEAR(*s.mean, 1.0, 1e-12);
}

TEST(Similarity, OrthogonalSentencesScoreZero) {
  Matrix table = Matrix::Zero(8, 3);
  table(4, 0) = 1.0;
  table(5, 1) = 2.0;
  table(6, 0) = 0.5;
  table(7, 2) = 1.0;
  const kwtest::TableModel model(kwtest::numbered_vocabulary(8), table);
  const MeanEmbeddingScorer scorer(model, EmbeddingMap::identity_padded(3, 3));
  EXPECT_NEAR(scorer.score("w4 w6", "w5 w7"), 0.0, 1e-15);
  EXPECT_NEAR(scorer.score("w4", "w6 w4"), 1.0, 1e-15);
  EXPECT_THROW(scorer.score("w4", "<pad>"), NumericError);
}

TEST(Similarity, OnlySuccessfulNonTrivialAndFailuresSkippedWithWarning) {
  std::vector<BenchmarkRecord> r = {record("a", "a", "b", true), record("a", "a", "b", false),
                                    record("a", "a", "a", true, true)};
  r.push_back(record("a", "a", "b", true));
  r.back().source = "boom";
  const SimilaritySummary s = compute_similarity(r, ConstantScorer(0.7));
  EXPECT_EQ(s.scored, 1u);
  ASSERT_TRUE(s.mean.has_value());
  EXPECT_EQ(*s.mean, 0.7);
  EXPECT_EQ(s.warnings.size(), 1u);
  EXPECT_FALSE(compute_similarity(std::vector<BenchmarkRecord>{r[1]}, ConstantScorer(0.7)).mean.has_value());
}

// Summaries and benchmarks ------------------------------------------------------------------

TEST(Summarize, CountsAndPerKeyword) {
  std::vector<BenchmarkRecord> r = {record("le chat voit le chien", "le chat voit le chien", "le guerre voit le chien", true),
                                    record("a b c d", "a b c d", "a b c d", false),
                                    record("a b c d", "a b c d", "a b c d", true, true)};
  r[0].similarity = 0.9;
  r[2].keyword = "paix";
  BenchmarkRecord errored;
  errored.source = "bad";
  errored.keyword = "";
  errored.result.error = "boom";
  r.push_back(errored);
  const MetricsReport rep = summarize(r);
  EXPECT_EQ(rep.total, 4u);
  EXPECT_EQ(rep.successful, 2u);
  EXPECT_EQ(rep.trivially_successful, 1u);
  EXPECT_EQ(rep.failed, 2u);
  EXPECT_EQ(rep.errored, 1u);
  EXPECT_EQ(rep.asr, 0.5);
  ASSERT_TRUE(rep.similarity.has_value());
  EXPECT_EQ(*rep.similarity, 0.9);
  ASSERT_TRUE(rep.rdbleu.has_value());
  EXPECT_EQ(rep.per_keyword.at("guerre").total, 2u);
  EXPECT_EQ(rep.per_keyword.at("guerre").successful, 1u);
  EXPECT_EQ(rep.per_keyword.at("paix").trivially_successful, 1u);
  EXPECT_THROW(summarize({}), InvalidInputError);
}

TEST(Summarize, UndefinedRdBleuBecomesWarning) {
  const std::vector<BenchmarkRecord> r = {record("a b c d e", "v w x y z", "v w x y z", true)};
  const MetricsReport rep = summarize(r);
  EXPECT_FALSE(rep.rdbleu.has_value());
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(SampleIndices, DeterministicSortedDistinct) {
  const auto a = sample_indices(100, 10, 5);
  EXPECT_EQ(a, sample_indices(100, 10, 5));
  EXPECT_NE(a, sample_indices(100, 10, 6));
  EXPECT_EQ(a.size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_EQ(sample_indices(4, 0, 1), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(sample_indices(4, 5, 1), InvalidInputError);
}

namespace {
struct BenchFixture {
  ToyModel model = make_toy_model(7);
  EmbeddingMap map = EmbeddingMap::identity_padded(16, 16);
  ProjectionIndex index = build_index(model, map);
  MeanEmbeddingScorer scorer{model, map};
  TargetSpec guerre = TargetSpec::predefined(model.vocabulary().id_of("guerre"));
  AttackConfig cfg = [] {
    AttackConfig c;
    c.max_iterations = 100;
    return c;
  }();
};
}  // namespace

TEST(RunBenchmark, SingleTrivialSentence) {
  BenchFixture f;
  const BenchmarkOutcome out =
      run_benchmark(f.model, f.map, f.index, {{"the war", "la guerre"}}, f.guerre, f.cfg, {}, f.scorer);
  EXPECT_EQ(out.report.asr, 1.0);
  EXPECT_EQ(out.report.trivially_successful, 1u);
  ASSERT_TRUE(out.report.rdbleu.has_value());
  EXPECT_EQ(*out.report.rdbleu, 0.0);
  EXPECT_FALSE(out.report.similarity.has_value());
}

TEST(RunBenchmark, DeterministicAndTotalsRecount) {
  BenchFixture f;
  const auto data = make_toy_parallel(21, 40);
  const BenchmarkOptions opts{15, 9, 2};
  const BenchmarkOutcome a = run_benchmark(f.model, f.map, f.index, data, f.guerre, f.cfg, opts, f.scorer);
  const BenchmarkOutcome b = run_benchmark(f.model, f.map, f.index, data, f.guerre, f.cfg, opts, f.scorer);
  EXPECT_EQ(report_json(a.report), report_json(b.report));
  EXPECT_EQ(a.records, b.records);

  ASSERT_EQ(a.records.size(), 15u);
  std::size_t ok = 0, trivial = 0, failed = 0;
  for (const auto& r : a.records) {
    ok += r.result.success;
    trivial += r.result.trivial;
    failed += !r.result.success;
    EXPECT_FALSE(r.reference.empty());
    if (r.result.success) {
      EXPECT_NE(r.adversarial_translation.find("guerre"), std::string::npos);
    }
  }
  EXPECT_EQ(a.report.total, 15u);
  EXPECT_EQ(a.report.successful, ok);
  EXPECT_EQ(a.report.trivially_successful, trivial);
  EXPECT_EQ(a.report.failed, failed);
  EXPECT_EQ(a.report.successful + a.report.failed, a.report.total);
  EXPECT_GE(a.report.asr, 0.0);
  EXPECT_LE(a.report.asr, 1.0);
  if (a.report.similarity) {
    EXPECT_GE(*a.report.similarity, -1.0);
    EXPECT_LE(*a.report.similarity, 1.0);
  }
}

TEST(RunBenchmark, SampleLargerThanDatasetIsError) {
  BenchFixture f;
  EXPECT_THROW(run_benchmark(f.model, f.map, f.index, make_toy_parallel(1, 3), f.guerre, f.cfg, {4, 0, 1}, f.scorer),
               InvalidInputError);
  EXPECT_THROW(run_benchmark(f.model, f.map, f.index, {}, f.guerre, f.cfg, {}, f.scorer), DataError);
}

TEST(ReportJson, CarriesBleuSignatureAndNulls) {
  MetricsReport rep;
  rep.asr = 0.5;
  const std::string j = report_json(rep);
  EXPECT_NE(j.find("\"rdbleu\": null"), std::string::npos) << j;
  EXPECT_NE(j.find("exp smoothing"), std::string::npos);
}
