#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "kwforge/errors.hpp"
#include "kwforge/io.hpp"
#include "support.hpp"

using namespace kwforge;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  o << text;
}

std::size_t count_nonblank_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
  }
  return n;
}

AttackResult sample_result() {
  AttackResult r;
  r.success = true;
  r.target_token = 37;
  r.source_tokens = TokenSequence{{4, 8, 20}};
  r.adversarial_tokens = TokenSequence{{4, 9, 20}};
  r.adversarial_text = "the war cat";
  r.clean_translation = TokenSequence{{28, 32}};
  r.translation = TokenSequence{{28, 37}};
  r.iterations_used = 512;
  r.alpha_used = 4.0;
  r.perturbed_token_count = 1;
  r.position_history = {0, 1, 1, 0};
  return r;
}

}  // namespace

TEST(ParallelCorpus, TwoLineTsvInOrder) {
  kwtest::TempDir dir("io");
  write_file(dir / "p.tsv", "the cat\tle chat\nthe dog\tle chien\n");
  const auto pairs = load_parallel_corpus(dir / "p.tsv");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0], (ParallelPair{"the cat", "le chat"}));
  EXPECT_EQ(pairs[1], (ParallelPair{"the dog", "le chien"}));
}

TEST(ParallelCorpus, BlankLinesAndCrlfTolerated) {
  kwtest::TempDir dir("io");
  write_file(dir / "p.tsv", "\nthe cat\tle chat\r\n\n  \nthe dog\tle chien");
  const auto pairs = load_parallel_corpus(dir / "p.tsv");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].reference, "le chat");
  EXPECT_EQ(pairs[1].reference, "le chien");
}

TEST(ParallelCorpus, MalformedLineNamesLineNumber) {
  kwtest::TempDir dir("io");
  write_file(dir / "p.tsv", "the cat\tle chat\n\nno tab here\n");
  try {
    load_parallel_corpus(dir / "p.tsv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(ParallelCorpus, TwoFileFormatAligned) {
  kwtest::TempDir dir("io");
  write_file(dir / "src.txt", "a b\n\nc d\n");
  write_file(dir / "ref.txt", "x y\nz w\n");
  const auto pairs = load_parallel_corpus(dir / "src.txt", dir / "ref.txt");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1], (ParallelPair{"c d", "z w"}));
}

TEST(ParallelCorpus, MisalignedFilesNameBothCounts) {
  kwtest::TempDir dir("io");
  write_file(dir / "src.txt", "a\nb\nc\n");
  write_file(dir / "ref.txt", "x\ny\n");
  try {
    load_parallel_corpus(dir / "src.txt", dir / "ref.txt");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos) << msg;
    EXPECT_NE(msg.find('2'), std::string::npos) << msg;
  }
}

TEST(ParallelCorpus, PairCountEqualsIndependentLineCount) {
  kwtest::TempDir dir("io");
  std::string text;
  const auto pairs = make_toy_parallel(9, 137);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    text += pairs[i].source + "\t" + pairs[i].reference + "\n";
    if (i % 10 == 0) text += "\n";
  }
  write_file(dir / "p.tsv", text);
  EXPECT_EQ(load_parallel_corpus(dir / "p.tsv").size(), count_nonblank_lines(dir / "p.tsv"));
  EXPECT_EQ(load_parallel_corpus(dir / "p.tsv"), pairs);
}

TEST(ParallelCorpus, MissingFile) {
  EXPECT_THROW(load_parallel_corpus("/nonexistent/file.tsv"), DataError);
}

TEST(MapFile, RoundTripIsExact) {
  kwtest::TempDir dir("io");
  std::mt19937_64 rng(1);
  const EmbeddingMap map{kwtest::random_matrix(5, 3, rng), kwtest::random_matrix(5, 1, rng)};
  save_map(dir / "m.bin", map, 0xabcdef);
  const EmbeddingMap back = load_map(dir / "m.bin", 0xabcdef);
  EXPECT_EQ(back.weight, map.weight);
  EXPECT_EQ(back.bias, map.bias);
  EXPECT_EQ(load_map(dir / "m.bin").weight, map.weight);
}

TEST(MapFile, FingerprintMismatchAndCorruption) {
  kwtest::TempDir dir("io");
  save_map(dir / "m.bin", EmbeddingMap::identity_padded(2, 2), 7);
  EXPECT_THROW(load_map(dir / "m.bin", 8), DataError);
  write_file(dir / "bad.bin", "KWFMAP01garbage");
  EXPECT_THROW(load_map(dir / "bad.bin"), DataError);
  write_file(dir / "sig.bin", std::string(64, 'x'));
  EXPECT_THROW(load_map(dir / "sig.bin"), DataError);
  EXPECT_THROW(load_map(dir / "missing.bin"), DataError);
}

TEST(IndexCache, RoundTripAndFingerprintCheck) {
  kwtest::TempDir dir("io");
  const ToyModel m = make_toy_model(7);
  const EmbeddingMap map = EmbeddingMap::identity_padded(16, 16);
  const ProjectionIndex idx = build_index(m, map);
  save_index(dir / "i.bin", idx);
  const auto back = load_index(dir / "i.bin", idx.fingerprint);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->lm_vocab, idx.lm_vocab);
  EXPECT_EQ(back->nmt_table, idx.nmt_table);
  EXPECT_EQ(back->excluded, idx.excluded);
  EXPECT_FALSE(load_index(dir / "i.bin", idx.fingerprint + 1).has_value());
  EXPECT_FALSE(load_index(dir / "none.bin", idx.fingerprint).has_value());
}

TEST(IndexCache, LoadOrBuildUsesCacheDirectory) {
  kwtest::TempDir dir("cache");
  const ToyModel m = make_toy_model(7);
  const EmbeddingMap map = EmbeddingMap::identity_padded(16, 16);
  const ProjectionIndex built = load_or_build_index(m, map, dir.path);
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path)) files += entry.is_regular_file();
  EXPECT_EQ(files, 1u);
  const ProjectionIndex cached = load_or_build_index(m, map, dir.path);
  EXPECT_EQ(cached.lm_vocab, built.lm_vocab);
  EXPECT_EQ(load_or_build_index(m, map, std::nullopt).lm_vocab, built.lm_vocab);
}

TEST(IndexCache, EnvironmentVariable) {
  ::setenv("KWFORGE_CACHE", "/tmp/some-cache", 1);
  ASSERT_TRUE(cache_directory().has_value());
  EXPECT_EQ(cache_directory()->string(), "/tmp/some-cache");
  ::setenv("KWFORGE_CACHE", "", 1);
  EXPECT_FALSE(cache_directory().has_value());
  ::unsetenv("KWFORGE_CACHE");
  EXPECT_FALSE(cache_directory().has_value());
}

TEST(ResultFile, RoundTripReproducesRecords) {
  kwtest::TempDir dir("io");
  ResultFile f;
  f.run = RunMetadata{"toy-7", "keyword", "guerre", 0, 0.02, {10.0, 4.0, 1.0}, 200, 42};
  ResultRecord a;
  a.source = "the dog cat";
  a.reference = "le chien chat";
  a.clean_translation = "le chien";
  a.adversarial_translation = "le guerre";
  a.keyword = "guerre";
  a.similarity = 0.8123456789012345;
  a.result = sample_result();
  ResultRecord b = a;
  b.similarity.reset();
  b.reference.clear();
  b.result = AttackResult{};
  b.result.source_tokens = TokenSequence{{500}};
  b.result.error = "token id 500 out of range \"quoted\"\ttab";
  ResultRecord c = a;
  c.result.trivial = true;
  c.result.iterations_used = 0;
  c.result.alpha_used = 0.1 + 0.2;  // not exactly representable in short decimal
  f.records = {a, b, c};
  write_result_file(dir / "r.jsonl", f);
  const ResultFile back = read_result_file(dir / "r.jsonl");
  EXPECT_EQ(back.run, f.run);
  ASSERT_EQ(back.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.records[i], f.records[i]) << i;
  EXPECT_EQ(count_nonblank_lines(dir / "r.jsonl"), 4u);
}

TEST(ResultFile, RejectsMissingHeaderAndBadLines) {
  kwtest::TempDir dir("io");
  write_file(dir / "empty.jsonl", "");
  EXPECT_THROW(read_result_file(dir / "empty.jsonl"), DataError);
  write_file(dir / "nohdr.jsonl", "{\"source\":\"x\"}\n");
  EXPECT_THROW(read_result_file(dir / "nohdr.jsonl"), DataError);
  write_file(dir / "ver.jsonl", "{\"schema\":\"kwforge.attack-results\",\"version\":99,\"run\":{}}\n");
  EXPECT_THROW(read_result_file(dir / "ver.jsonl"), DataError);

  ResultFile f;
  f.run.model = "toy-1";
  ResultRecord r;
  r.source = "a";
  r.result = sample_result();
  f.records = {r};
  write_result_file(dir / "ok.jsonl", f);
  std::ifstream in(dir / "ok.jsonl");
  std::string header;
  std::getline(in, header);
  write_file(dir / "broken.jsonl", header + "\n{not json\n");
  try {
    read_result_file(dir / "broken.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(ResultFile, HeaderOnlyFileHasNoRecords) {
  kwtest::TempDir dir("io");
  ResultFile f;
  f.run.model = "toy-1";
  write_result_file(dir / "h.jsonl", f);
  EXPECT_TRUE(read_result_file(dir / "h.jsonl").records.empty());
}
