#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kwforge/model.hpp"

namespace kwforge {

/// Shape of the small causal language model trained next to the map.
struct LmSpec {
  std::size_t layers = 2;
  Eigen::Index width = 32;   // recurrent state size
  Eigen::Index lm_dim = 16;  // d_lm, output width of the map
};

struct MapperTrainConfig {
  std::string corpus_path;
  std::size_t epochs = 3;
  std::size_t batch_size = 16;
  double learning_rate = 0.01;
  double clip_norm = 5.0;
  LmSpec lm;
  bool freeze_nmt_embeddings = true;  // must stay true
  std::uint64_t seed = 0;
};

struct TrainingReport {
  double initial_loss = 0.0;             // mean token loss before any update
  std::vector<double> epoch_train_loss;  // running mean over each epoch's batches
  std::vector<double> epoch_eval_loss;   // full-corpus mean after each epoch
  std::size_t sentences = 0;
  std::size_t tokens = 0;
};

struct TrainedMapper {
  EmbeddingMap map;
  TrainingReport report;
};

/// Trains the affine map L jointly with a recurrent causal LM whose input
/// embedding of token w is L(embed_table[w]). The translation model's table
/// is read but never written.
///
/// Throws DataError on an empty corpus, TrainingError when the loss diverges
/// and InvalidInputError on an invalid config. Zero epochs return the
/// identity-padded initial map.
TrainedMapper train_mapper(const NmtModel& model, const std::vector<std::string>& corpus,
                           const MapperTrainConfig& cfg);
/// Reads the corpus (one sentence per line) from cfg.corpus_path.
TrainedMapper train_mapper(const NmtModel& model, const MapperTrainConfig& cfg);

}  // namespace kwforge
