#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kwforge/adam.hpp"
#include "kwforge/model.hpp"
#include "kwforge/objective.hpp"
#include "kwforge/projection.hpp"

namespace kwforge {

struct AttackConfig {
  double learning_rate = 0.02;
  std::size_t max_iterations = 500;  // per alpha
  std::vector<double> alpha_schedule = {10.0, 4.0, 1.0};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  /// Throws InvalidInputError on a non-positive learning rate, zero
  /// iterations, or an empty / non-decreasing / negative alpha schedule.
  void validate() const;
};

struct AttackResult {
  bool success = false;
  /// The keyword was already in the clean translation; nothing was perturbed.
  bool trivial = false;
  TokenId target_token = -1;
  TokenSequence source_tokens;
  TokenSequence adversarial_tokens;
  std::string adversarial_text;
  TokenSequence clean_translation;
  TokenSequence translation;  // f(adversarial_tokens)
  std::size_t iterations_used = 0;  // summed over every alpha tried
  double alpha_used = 0.0;
  std::size_t perturbed_token_count = 0;
  std::vector<std::size_t> position_history;  // chosen position per iteration
  std::optional<std::string> error;            // set only by attack_batch

  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

/// Greedy translations memoized by token sequence.
class TranslationCache {
 public:
  explicit TranslationCache(const NmtModel& model) : model_(model) {}
  const TokenSequence& translate(const TokenSequence& source);
  std::size_t size() const { return cache_.size(); }

 private:
  const NmtModel& model_;
  std::unordered_map<TokenSequence, TokenSequence, TokenSequenceHash> cache_;
};

/// Mutable state of one gradient-projection run at a fixed alpha.
struct AttackState {
  EmbeddingMatrix e_g;  // current continuous candidate (NMT space)
  std::unordered_set<TokenSequence, TokenSequenceHash> visited;
  std::size_t iteration = 0;
  double current_alpha = 0.0;
  Adam optimizer;
};

/// What happened during one iteration.
struct AttackStep {
  std::size_t iteration = 0;
  std::size_t position = 0;  // attacked translation position
  double loss = 0.0;         // total loss before the update
  TokenSequence projected;
  bool new_candidate = false;  // projected sequence was not visited before
  TokenSequence translation;   // greedy translation of `projected`
  bool success = false;
};

/// One run of the loop at a fixed alpha, advanced an iteration at a time.
///
/// Each step re-selects the attacked position from the current candidate's
/// logits, takes one Adam step on the combined loss, projects to tokens, and
/// adopts the projection only when it has not been visited before.
class AttackSession {
 public:
  AttackSession(const NmtModel& model, const EmbeddingMap& map, const ProjectionIndex& index,
                const TokenSequence& source, TokenId target, double alpha, const AttackConfig& cfg,
                TranslationCache& cache);

  AttackStep step();
  bool exhausted() const { return state_.iteration >= max_iterations_; }
  const AttackState& state() const { return state_; }

 private:
  const NmtModel& model_;
  const EmbeddingMap& map_;
  const ProjectionIndex& index_;
  TranslationCache& cache_;
  TokenId target_;
  std::size_t max_iterations_;
  Matrix lm_source_;  // L(e_x), fixed
  AttackState state_;
};

/// Runs the full alpha schedule for one sentence. Each alpha restarts from
/// the original sentence with fresh optimizer moments and an empty visited
/// set. Throws TargetError for an invalid target and propagates model errors.
AttackResult run_attack(const NmtModel& model, const EmbeddingMap& map, const ProjectionIndex& index,
                        const TokenSequence& source, const TargetSpec& target, const AttackConfig& cfg);

/// Independent attacks, order preserved. Per-sentence exceptions are stored
/// in AttackResult::error instead of propagating.
std::vector<AttackResult> attack_batch(const NmtModel& model, const EmbeddingMap& map,
                                       const ProjectionIndex& index,
                                       const std::vector<TokenSequence>& sources,
                                       const TargetSpec& target, const AttackConfig& cfg,
                                       std::size_t workers = 1);

}  // namespace kwforge
