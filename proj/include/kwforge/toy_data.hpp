#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kwforge/io.hpp"

namespace kwforge {

/// Seeded English sentences over the bundled toy vocabulary.
/// "war" is drawn rarely so that most sentences need a perturbation to
/// produce "guerre".
std::vector<std::string> make_toy_corpus(std::uint64_t seed, std::size_t count);

/// Word-by-word French rendering using the bundled lexicon.
/// Throws InvalidInputError on a word outside the lexicon.
std::string lexical_translation(const std::string& english);

/// make_toy_corpus paired with lexical_translation references.
std::vector<ParallelPair> make_toy_parallel(std::uint64_t seed, std::size_t count);

}  // namespace kwforge
