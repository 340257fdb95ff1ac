#pragma once

// LSTM sequence classifier mapping feature sequences to style labels.
//
// Inputs are standardized with per-dimension statistics fixed at training
// time, run through one LSTM layer (gate order i, f, g, o), and the final
// hidden state goes through an affine layer and softmax. CSP features enter
// as one-frame sequences; frame-feature sequences enter frame by frame.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cbm/classify/labels.hpp"
#include "cbm/core/matrix.hpp"
#include "cbm/core/tape.hpp"
#include "cbm/pipeline/catalog.hpp"

namespace cbm::classify {

using Frame = std::vector<double>;

struct SequenceSample {
  std::vector<Frame> frames;
  int label = 0;
};

// Weights of one LSTM layer: z = wx·x + wh·h + b, rows stacked as [i; f; g; o].
struct LstmCell {
  Matrix wx;  // 4H × D
  Matrix wh;  // 4H × H
  std::vector<double> b;  // 4H

  std::size_t input_dim() const { return wx.cols(); }
  std::size_t hidden() const { return wh.cols(); }
  static LstmCell xavier(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);
};

// Per-dimension affine map applied to every frame before the recurrence.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // reciprocal standard deviation, 1 for constant dimensions
};

Standardization identity_standardization(std::size_t dim);
Standardization fit_standardization(std::span<const SequenceSample> data);

// Sample indices grouped by sequence length, shortest first. Validates frame
// dimension and label range.
std::map<std::size_t, std::vector<std::size_t>> group_by_length(std::span<const SequenceSample> data,
                                                                 std::size_t dim, std::size_t classes);
// Throws ContractError on an empty sequence or a frame of the wrong dimension.
void require_frames(std::size_t dim, std::span<const Frame> frames);
// Throws ContractError naming every class id in [0, classes) with no sample.
void require_all_classes(std::span<const SequenceSample> data, std::size_t classes);

// Tape handles for an LstmCell's parameters.
struct LstmCellVars {
  Var wx, wh, b;
};

LstmCellVars record_cell(Tape& tape, const LstmCell& cell, bool trainable);
// Runs the recurrence over per-step inputs (each D × batch) and returns the
// hidden state (H × batch) after every step.
std::vector<Var> unroll(Tape& tape, const LstmCellVars& cell, std::size_t hidden, std::span<const Var> inputs);
// Standardized inputs for equal-length sequences: one D × batch constant per step.
std::vector<Var> record_inputs(Tape& tape, const Standardization& norm,
                               std::span<const std::vector<Frame>* const> batch);

struct LstmClassifier {
  std::size_t classes = 0;
  std::uint64_t seed = 0;
  std::vector<double> input_mean;   // D
  std::vector<double> input_scale;  // D
  LstmCell cell;
  Matrix wout;  // K × H
  std::vector<double> bout;  // K
  std::vector<double> loss_curve;  // training loss before each update

  std::size_t input_dim() const { return cell.input_dim(); }
  std::size_t hidden() const { return cell.hidden(); }

  static LstmClassifier initialize(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed);
  std::size_t parameter_count() const;
  // Trainable parameters in file order: wx, wh, b, wout, bout.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

std::vector<double> forward(const LstmClassifier& model, std::span<const Frame> frames);
StyleLabel classify(const LstmClassifier& model, std::span<const Frame> frames);

// Mean cross-entropy over the dataset; fills `grad` (flatten() order) when non-empty.
double dataset_loss(const LstmClassifier& model, std::span<const SequenceSample> data, std::span<double> grad = {});

struct TrainOptions {
  std::size_t epochs = 300;
  double lr = 0.05;
  std::uint64_t seed = 0;
  std::size_t hidden = 32;
  std::size_t classes = kStyleCount;
  bool standardize = true;
};

// Full-batch gradient descent on mean cross-entropy.
LstmClassifier train(std::span<const SequenceSample> data, const TrainOptions& options);

double accuracy(const LstmClassifier& model, std::span<const SequenceSample> data);

// Text layout: header `D=<..> H=<..> K=<..> seed=<..>` then blocks
// input_mean, input_scale, wx, wh, b, wout, bout, each introduced by a
// `<name> <rows> <cols>` line and followed by one line per row.
std::string format_model(const LstmClassifier& model);
LstmClassifier parse_model(const std::string& text);
void save_model(const std::string& path, const LstmClassifier& model);
LstmClassifier load_model(const std::string& path);

struct StyleMatch {
  pipeline::ArtworkRecord record;
  bool fallback = false;
};

// Most recent catalog entry with the requested style (ties: file name
// ascending); the globally most recent entry with fallback set otherwise.
StyleMatch match_style(StyleLabel label, std::span<const pipeline::ArtworkRecord> catalog);

}  // namespace cbm::classify
