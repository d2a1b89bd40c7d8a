#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normkit/csv.hpp"
#include "normkit/dataset.hpp"
#include "normkit/mlp.hpp"

namespace normkit {

struct DatasetSpec {
  std::string kind = "synthetic";  // synthetic | idx
  std::size_t n_train = 10000;
  std::size_t n_val = 2000;
  std::uint64_t data_seed = 11;
  std::string images_path, labels_path;          // idx train pair
  std::string val_images_path, val_labels_path;  // idx validation pair
  bool random_labels = false;
  std::uint64_t label_seed = 99;
};

struct ExperimentSpec {
  std::vector<std::size_t> hidden = {256, 256, 256, 256};
  int classes = 10;
  NormSetting norm;
  std::size_t batch = 16;
  std::vector<double> lrs = {0.1};
  int epochs = 50;
  std::vector<std::uint64_t> seeds = {1};
  double sgd_momentum = 0.0;
  DatasetSpec dataset;

  void validate() const;
};

struct TrainCurve {
  std::string norm_label;
  std::size_t batch = 0;
  std::size_t groups = 1;
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> train_acc;   // per epoch
  std::vector<double> train_loss;  // per epoch
  double val_acc = 0.0;
  bool diverged = false;
};

/// Train/validation pair per the dataset spec (synthetic split or IDX
/// files; the validation half of a synthetic set comes from the same
/// generator under a shifted seed).
std::pair<Dataset, Dataset> load_datasets(const DatasetSpec& spec);

/// One SGD run: shuffled minibatches (incomplete tail batch dropped),
/// train metrics accumulated in train mode during the epoch, validation
/// in eval mode at the end. NaN loss truncates the curve and flags it.
TrainCurve train_one(const ExperimentSpec& spec, const Dataset& train, const Dataset& val,
                     double lr, std::uint64_t seed);

/// All (lr, seed) runs of the spec.
std::vector<TrainCurve> train(const ExperimentSpec& spec);

struct SweepCell {
  NormSetting norm;
  std::size_t batch = 16;
};

/// Grid of cells x lrs x seeds, one train() per combination, emitted as a
/// long-format table (method, m, g, lr, seed, epoch, split, accuracy,
/// status). Cell failures become rows with a status, the sweep continues.
Table sweep(const ExperimentSpec& base, const std::vector<SweepCell>& cells, int jobs = 0);

/// "Best over the learning-rate grid" reduction (final-epoch train
/// accuracy, maximized over lr), one row per (method, m, g, seed).
Table best_over_lr(const Table& long_format);

// --- declarative config ----------------------------------------------------

/// INI-style file: [section] headers, key = value lines, '#' comments.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

ConfigMap parse_config_file(const std::string& path);
ConfigMap parse_config_text(const std::string& text);

struct SweepConfig {
  ExperimentSpec base;
  std::vector<SweepCell> cells;
};

/// Builds the sweep grid from a config map (see configs/ for the schema).
SweepConfig sweep_from_config(const ConfigMap& cfg);

}  // namespace normkit
