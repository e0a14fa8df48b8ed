#include "kwforge/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "kwforge/errors.hpp"

namespace kwforge {

void AttackConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidInputError("attack: learning rate must be positive");
  }
  if (max_iterations < 1) throw InvalidInputError("attack: max_iterations must be >= 1");
  if (alpha_schedule.empty()) throw InvalidInputError("attack: alpha schedule is empty");
  for (std::size_t i = 0; i < alpha_schedule.size(); ++i) {
    const double a = alpha_schedule[i];
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInputError("attack: alpha must be finite and >= 0");
    if (i > 0 && !(a < alpha_schedule[i - 1])) {
      throw InvalidInputError("attack: alpha schedule must be strictly decreasing");
    }
  }
}

const TokenSequence& TranslationCache::translate(const TokenSequence& source) {
  auto it = cache_.find(source);
  if (it != cache_.end()) return it->second;
  Translation tr = model_.translate(embed(model_, source).rows);
  return cache_.emplace(source, std::move(tr.tokens)).first->second;
}

AttackSession::AttackSession(const NmtModel& model, const EmbeddingMap& map, const ProjectionIndex& index,
                             const TokenSequence& source, TokenId target, double alpha,
                             const AttackConfig& cfg, TranslationCache& cache)
    : model_(model),
      map_(map),
      index_(index),
      cache_(cache),
      target_(target),
      max_iterations_(cfg.max_iterations),
      state_{embed(model, source), {}, 0, alpha,
             Adam(AdamOptions{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon})} {
  lm_source_ = map_to_lm_space(state_.e_g, map).rows;
}

AttackStep AttackSession::step() {
  if (exhausted()) throw InvalidInputError("attack session: iteration budget exhausted");
  AttackStep out;
  out.iteration = ++state_.iteration;

  // Logits of the current candidate, teacher-forced on its own greedy output.
  const Translation current = model_.translate(state_.e_g.rows);
  ad::Tape tape;
  ad::Var src = tape.variable(state_.e_g.rows);
  ad::Var logits = model_.forced_logits(tape, src, current.tokens);
  out.position = select_attack_position(LogitsTensor{logits.value()}, target_);
  ad::Var v = tape.constant(lm_source_);
  ad::Var v_prime = map_.apply(tape, src);
  ad::Var loss = total_loss(logits, out.position, target_, v, v_prime, ObjectiveConfig{state_.current_alpha});
  out.loss = loss.scalar();
  if (!std::isfinite(out.loss)) throw NumericError("attack: non-finite loss");
  tape.backward(loss);
  const Matrix grad = src.grad();
  state_.optimizer.step(state_.e_g.rows, grad);

  Projection proj = project_embeddings(state_.e_g, index_, map_);
  out.new_candidate = state_.visited.insert(proj.tokens).second;
  if (out.new_candidate) state_.e_g = std::move(proj.embeddings);
  out.projected = std::move(proj.tokens);

  out.translation = cache_.translate(out.projected);
  out.success = out.translation.contains(target_);
  return out;
}

AttackResult run_attack(const NmtModel& model, const EmbeddingMap& map, const ProjectionIndex& index,
                        const TokenSequence& source, const TargetSpec& target, const AttackConfig& cfg) {
  cfg.validate();
  const Vocabulary& vocab = model.vocabulary();
  if (source.empty()) throw InvalidInputError("attack: empty source sentence");
  vocab.validate(source);
  target.validate(vocab.size());

  TranslationCache cache(model);
  const Translation clean = translate_with_logits(model, embed(model, source));

  AttackResult res;
  res.source_tokens = source;
  res.clean_translation = clean.tokens;
  if (target.mode == TargetMode::Predefined) {
    res.target_token = target.keyword_token;
  } else {
    // Special tokens never appear in a decoded translation, so they are not ranked.
    LogitsTensor ranked = clean.logits;
    const SpecialIds& sp = vocab.specials();
    for (TokenId s : {sp.pad, sp.bos, sp.eos, sp.unk}) {
      ranked.values.col(s).setConstant(-std::numeric_limits<double>::infinity());
    }
    res.target_token = select_nth_likely_target(ranked, target.rank).token;
  }

  auto finish = [&](TokenSequence adversarial, TokenSequence translation) {
    res.perturbed_token_count = hamming_distance(source, adversarial);
    res.adversarial_text = vocab.detokenize(adversarial);
    res.adversarial_tokens = std::move(adversarial);
    res.translation = std::move(translation);
    return res;
  };

  if (clean.tokens.contains(res.target_token)) {
    res.success = true;
    res.trivial = true;
    res.alpha_used = cfg.alpha_schedule.front();
    return finish(source, clean.tokens);
  }

  TokenSequence last = source;
  TokenSequence last_translation = clean.tokens;
  for (double alpha : cfg.alpha_schedule) {
    AttackSession session(model, map, index, source, res.target_token, alpha, cfg, cache);
    res.alpha_used = alpha;
    while (!session.exhausted()) {
      AttackStep st = session.step();
      ++res.iterations_used;
      res.position_history.push_back(st.position);
      last = std::move(st.projected);
      last_translation = std::move(st.translation);
      if (st.success) {
        res.success = true;
        return finish(std::move(last), std::move(last_translation));
      }
    }
  }
  return finish(std::move(last), std::move(last_translation));
}

std::vector<AttackResult> attack_batch(const NmtModel& model, const EmbeddingMap& map,
                                       const ProjectionIndex& index,
                                       const std::vector<TokenSequence>& sources,
                                       const TargetSpec& target, const AttackConfig& cfg,
                                       std::size_t workers) {
  if (sources.empty()) throw InvalidInputError("attack_batch: no sentences");
  std::vector<AttackResult> results(sources.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      try {
        results[i] = run_attack(model, map, index, sources[i], target, cfg);
      } catch (const std::exception& e) {
        AttackResult failed;
        failed.source_tokens = sources[i];
        failed.error = e.what();
        results[i] = std::move(failed);
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, sources.size());
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  return results;
}

}  // namespace kwforge
