#include "kwforge/io.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "kwforge/errors.hpp"

namespace kwforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMapMagic[8] = {'K', 'W', 'F', 'M', 'A', 'P', '0', '1'};
constexpr char kIndexMagic[8] = {'K', 'W', 'F', 'I', 'D', 'X', '0', '1'};

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::vector<std::string> read_nonblank_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    line = strip_cr(std::move(line));
    if (!blank(line)) out.push_back(std::move(line));
  }
  return out;
}

class Writer {
 public:
  explicit Writer(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write '" + path.string() + "'");
  }
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void matrix(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double v = m(i, j);
        raw(&v, sizeof v);
      }
    }
  }
  void close(const fs::path& path) {
    out_.close();
    if (!out_) throw DataError("failed writing '" + path.string() + "'");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open '" + path.string() + "'");
  }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("'" + path_.string() + "' is truncated");
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    raw(&v, sizeof v);
    return v;
  }
  Matrix matrix(std::uint64_t rows, std::uint64_t cols) {
    if (rows > (1u << 24) || cols > (1u << 24)) throw DataError("'" + path_.string() + "' has implausible dims");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) raw(&m(i, j), sizeof(double));
    }
    return m;
  }
  void magic(const char (&expected)[8]) {
    char got[8];
    raw(got, 8);
    if (std::memcmp(got, expected, 8) != 0) throw DataError("'" + path_.string() + "' has a wrong file signature");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw DataError("'" + path_.string() + "' has trailing bytes");
  }

 private:
  fs::path path_;
  std::ifstream in_;
};

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

json ids_json(const TokenSequence& s) { return s.ids; }

TokenSequence ids_from(const json& j) { return TokenSequence{j.get<std::vector<TokenId>>()}; }

json record_json(const ResultRecord& r) {
  const AttackResult& a = r.result;
  json j = {
      {"source", r.source},
      {"adversarial", a.adversarial_text},
      {"clean_translation", r.clean_translation},
      {"adversarial_translation", r.adversarial_translation},
      {"reference", r.reference},
      {"keyword", r.keyword},
      {"target_token", a.target_token},
      {"success", a.success},
      {"trivial", a.trivial},
      {"iterations", a.iterations_used},
      {"alpha_used", a.alpha_used},
      {"perturbed_token_count", a.perturbed_token_count},
      {"position_history", a.position_history},
      {"source_ids", ids_json(a.source_tokens)},
      {"adversarial_ids", ids_json(a.adversarial_tokens)},
      {"clean_translation_ids", ids_json(a.clean_translation)},
      {"adversarial_translation_ids", ids_json(a.translation)},
  };
  j["similarity"] = r.similarity ? json(*r.similarity) : json(nullptr);
  j["error"] = a.error ? json(*a.error) : json(nullptr);
  return j;
}

ResultRecord record_from(const json& j) {
  ResultRecord r;
  r.source = j.at("source").get<std::string>();
  r.clean_translation = j.at("clean_translation").get<std::string>();
  r.adversarial_translation = j.at("adversarial_translation").get<std::string>();
  r.reference = j.at("reference").get<std::string>();
  r.keyword = j.at("keyword").get<std::string>();
  if (!j.at("similarity").is_null()) r.similarity = j.at("similarity").get<double>();
  AttackResult& a = r.result;
  a.adversarial_text = j.at("adversarial").get<std::string>();
  a.target_token = j.at("target_token").get<TokenId>();
  a.success = j.at("success").get<bool>();
  a.trivial = j.at("trivial").get<bool>();
  a.iterations_used = j.at("iterations").get<std::size_t>();
  a.alpha_used = j.at("alpha_used").get<double>();
  a.perturbed_token_count = j.at("perturbed_token_count").get<std::size_t>();
  a.position_history = j.at("position_history").get<std::vector<std::size_t>>();
  a.source_tokens = ids_from(j.at("source_ids"));
  a.adversarial_tokens = ids_from(j.at("adversarial_ids"));
  a.clean_translation = ids_from(j.at("clean_translation_ids"));
  a.translation = ids_from(j.at("adversarial_translation_ids"));
  if (!j.at("error").is_null()) a.error = j.at("error").get<std::string>();
  return r;
}

json run_json(const RunMetadata& m) {
  return json{{"model", m.model},
              {"target_mode", m.target_mode},
              {"keyword", m.keyword},
              {"nth", m.nth},
              {"learning_rate", m.learning_rate},
              {"alpha_schedule", m.alpha_schedule},
              {"max_iterations", m.max_iterations},
              {"seed", m.seed}};
}

RunMetadata run_from(const json& j) {
  RunMetadata m;
  m.model = j.at("model").get<std::string>();
  m.target_mode = j.at("target_mode").get<std::string>();
  m.keyword = j.at("keyword").get<std::string>();
  m.nth = j.at("nth").get<std::size_t>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.alpha_schedule = j.at("alpha_schedule").get<std::vector<double>>();
  m.max_iterations = j.at("max_iterations").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace

std::vector<ParallelPair> load_parallel_corpus(const fs::path& tsv) {
  std::ifstream in(tsv);
  if (!in) throw DataError("cannot open '" + tsv.string() + "'");
  std::vector<ParallelPair> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(tsv.string() + ":" + std::to_string(lineno) + ": expected 'source<TAB>reference'");
    }
    ParallelPair p{line.substr(0, tab), line.substr(tab + 1)};
    if (blank(p.source) || blank(p.reference)) {
      throw DataError(tsv.string() + ":" + std::to_string(lineno) + ": empty source or reference");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ParallelPair> load_parallel_corpus(const fs::path& sources, const fs::path& references) {
  std::vector<std::string> src = read_nonblank_lines(sources);
  std::vector<std::string> ref = read_nonblank_lines(references);
  if (src.size() != ref.size()) {
    throw DataError("misaligned parallel corpus: " + std::to_string(src.size()) + " source lines vs " +
                    std::to_string(ref.size()) + " reference lines");
  }
  std::vector<ParallelPair> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out.push_back(ParallelPair{std::move(src[i]), std::move(ref[i])});
  return out;
}

void save_map(const fs::path& path, const EmbeddingMap& map, std::uint64_t table_fingerprint) {
  if (map.bias.size() != map.output_dim()) throw ShapeError("save_map: bias size mismatch");
  Writer w(path);
  w.raw(kMapMagic, 8);
  w.u64(static_cast<std::uint64_t>(map.output_dim()));
  w.u64(static_cast<std::uint64_t>(map.input_dim()));
  w.u64(table_fingerprint);
  w.matrix(map.weight);
  w.matrix(Matrix(map.bias.transpose()));
  w.close(path);
}

EmbeddingMap load_map(const fs::path& path, std::optional<std::uint64_t> expected_table_fingerprint) {
  Reader r(path);
  r.magic(kMapMagic);
  const std::uint64_t d_lm = r.u64();
  const std::uint64_t d = r.u64();
  const std::uint64_t fp = r.u64();
  if (expected_table_fingerprint && fp != *expected_table_fingerprint) {
    throw DataError("map '" + path.string() + "' was trained for a different model (fingerprint " + hex(fp) +
                    ", expected " + hex(*expected_table_fingerprint) + ")");
  }
  EmbeddingMap m;
  m.weight = r.matrix(d_lm, d);
  m.bias = r.matrix(1, d_lm).transpose();
  r.expect_end();
  if (!m.weight.allFinite() || !m.bias.allFinite()) throw DataError("map '" + path.string() + "' has non-finite values");
  return m;
}

void save_index(const fs::path& path, const ProjectionIndex& index) {
  Writer w(path);
  w.raw(kIndexMagic, 8);
  w.u64(index.fingerprint);
  w.u64(index.vocab_size());
  w.u64(static_cast<std::uint64_t>(index.lm_vocab.cols()));
  w.u64(static_cast<std::uint64_t>(index.nmt_table.cols()));
  for (bool e : index.excluded) {
    const std::uint8_t b = e ? 1 : 0;
    w.raw(&b, 1);
  }
  w.matrix(index.lm_vocab);
  w.matrix(index.nmt_table);
  w.close(path);
}

std::optional<ProjectionIndex> load_index(const fs::path& path, std::uint64_t expected_fingerprint) {
  if (!fs::exists(path)) return std::nullopt;
  Reader r(path);
  r.magic(kIndexMagic);
  ProjectionIndex index;
  index.fingerprint = r.u64();
  if (index.fingerprint != expected_fingerprint) return std::nullopt;
  const std::uint64_t v = r.u64();
  const std::uint64_t d_lm = r.u64();
  const std::uint64_t d = r.u64();
  if (v > (1u << 24)) throw DataError("'" + path.string() + "' has implausible vocabulary size");
  index.excluded.resize(v);
  for (std::uint64_t i = 0; i < v; ++i) {
    std::uint8_t b = 0;
    r.raw(&b, 1);
    index.excluded[i] = b != 0;
  }
  index.lm_vocab = r.matrix(v, d_lm);
  index.nmt_table = r.matrix(v, d);
  r.expect_end();
  return index;
}

std::optional<fs::path> cache_directory() {
  const char* env = std::getenv("KWFORGE_CACHE");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return fs::path(env);
}

ProjectionIndex load_or_build_index(const NmtModel& model, const EmbeddingMap& map,
                                    const std::optional<fs::path>& cache_dir) {
  if (!cache_dir) return build_index(model, map);
  const std::uint64_t fp = index_fingerprint(model, map, default_excluded_ids(model.vocabulary()));
  const fs::path file = *cache_dir / ("index-" + hex(fp) + ".bin");
  if (auto cached = load_index(file, fp)) return std::move(*cached);
  ProjectionIndex index = build_index(model, map);
  fs::create_directories(*cache_dir);
  save_index(file, index);
  return index;
}

void write_result_file(const fs::path& path, const ResultFile& file) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  json header = {{"schema", kResultSchema}, {"version", kResultSchemaVersion}, {"run", run_json(file.run)}};
  out << header.dump() << '\n';
  for (const ResultRecord& r : file.records) out << record_json(r).dump() << '\n';
  out.close();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

ResultFile read_result_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  ResultFile file;
  std::size_t lineno = 0;
  bool have_header = false;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        if (j.value("schema", "") != kResultSchema) throw DataError("not a result file");
        if (j.value("version", -1) != kResultSchemaVersion) {
          throw DataError("unsupported schema version " + j.at("version").dump());
        }
        file.run = run_from(j.at("run"));
        have_header = true;
        continue;
      }
      file.records.push_back(record_from(j));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw DataError(path.string() + ": empty result file (no header)");
  return file;
}

}  // namespace kwforge
