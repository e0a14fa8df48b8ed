#include "kwforge/toy_data.hpp"

#include <random>
#include <sstream>

#include "kwforge/errors.hpp"
#include "kwforge/toy_model.hpp"

namespace kwforge {

namespace {

const std::vector<std::string> kDeterminers = {"the", "a"};
const std::vector<std::string> kAdjectives = {"big", "small", "old", "new", "red"};
const std::vector<std::string> kVerbs = {"sees", "likes", "builds", "finds", "fears"};
const std::vector<std::string> kNouns = {"cat",  "dog",  "man",   "woman", "child", "house",
                                         "city", "king", "river", "peace", "war"};
const std::vector<double> kNounWeights = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0.15};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed), nouns_(kNounWeights.begin(), kNounWeights.end()) {}

  std::string sentence() {
    std::string s = clause();
    if (chance(0.25)) s += " and " + clause();
    return s;
  }

 private:
  std::string clause() { return noun_phrase() + " " + pick(kVerbs) + " " + noun_phrase(); }

  std::string noun_phrase() {
    std::string np = pick(kDeterminers);
    if (chance(0.4)) np += " " + pick(kAdjectives);
    return np + " " + kNouns[nouns_(rng_)];
  }

  const std::string& pick(const std::vector<std::string>& words) {
    std::uniform_int_distribution<std::size_t> d(0, words.size() - 1);
    return words[d(rng_)];
  }

  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::mt19937_64 rng_;
  std::discrete_distribution<std::size_t> nouns_;
};

}  // namespace

std::vector<std::string> make_toy_corpus(std::uint64_t seed, std::size_t count) {
  Generator gen(seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen.sentence());
  return out;
}

std::string lexical_translation(const std::string& english) {
  std::istringstream in(english);
  std::string word, out;
  while (in >> word) {
    const std::string* fr = nullptr;
    for (const auto& [en, f] : toy_lexicon()) {
      if (en == word) fr = &f;
    }
    if (!fr) throw InvalidInputError("no toy translation for '" + word + "'");
    if (!out.empty()) out += ' ';
    out += *fr;
  }
  return out;
}

std::vector<ParallelPair> make_toy_parallel(std::uint64_t seed, std::size_t count) {
  std::vector<ParallelPair> out;
  for (std::string& s : make_toy_corpus(seed, count)) {
    std::string ref = lexical_translation(s);
    out.push_back(ParallelPair{std::move(s), std::move(ref)});
  }
  return out;
}

}  // namespace kwforge
