#pragma once

// Attention-pooled recurrent emotion recognizer.
//
// An LSTM runs over the frames, a softmax over the scores mu·y_t weights the
// hidden states y_t, and the pooled vector goes through an affine layer and
// softmax. The class probabilities are folded into a valence scalar through a
// per-class valence map.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbm/classify/style_classifier.hpp"

namespace cbm::emotion {

using classify::Frame;
using classify::SequenceSample;

inline constexpr std::size_t kDefaultEmotionCount = 4;
std::vector<double> default_valence_map();
// "positive", "negative", "neutral", "excited" for the default four classes,
// "emotion <id>" otherwise.
std::string emotion_name(int id, std::size_t classes);

struct AcousticSequence {
  std::vector<Frame> frames;
  std::optional<int> label;

  std::size_t dim() const { return frames.empty() ? 0 : frames.front().size(); }
};

// Header `dim=<D> frames=<T> label=<id|none>`, then one comma-separated line per frame.
std::string format_sequence(const AcousticSequence& seq);
AcousticSequence parse_sequence(const std::string& text);
void save_sequence(const std::string& path, const AcousticSequence& seq);
AcousticSequence load_sequence(const std::string& path);

struct Attention {
  std::vector<double> alpha;  // one weight per step, sums to 1
  std::vector<double> z;      // alpha-weighted sum of the states
};

Attention attention_pool(std::span<const std::vector<double>> ys, std::span<const double> mu);

struct AttentionRnn {
  std::size_t classes = 0;
  std::uint64_t seed = 0;
  std::vector<double> input_mean;
  std::vector<double> input_scale;
  classify::LstmCell cell;
  std::vector<double> mu;  // H
  Matrix wout;             // K × H
  std::vector<double> bout;
  std::vector<double> valence_map;  // K entries in [-1, 1]
  std::vector<double> loss_curve;

  std::size_t input_dim() const { return cell.input_dim(); }
  std::size_t hidden() const { return cell.hidden(); }

  static AttentionRnn initialize(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed);
  std::size_t parameter_count() const;
  // Order: wx, wh, b, mu, wout, bout.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

struct EmotionResult {
  int label = 0;
  std::vector<double> probabilities;
  double valence = 0.0;
  std::vector<double> attention;
};

EmotionResult recognize(const AttentionRnn& model, std::span<const Frame> frames);

double emotion_loss(const AttentionRnn& model, std::span<const SequenceSample> data, std::span<double> grad = {});

struct EmotionTrainOptions {
  std::size_t epochs = 300;
  double lr = 0.05;
  std::uint64_t seed = 0;
  std::size_t hidden = 16;
  std::size_t classes = kDefaultEmotionCount;
  std::vector<double> valence_map = default_valence_map();
  bool standardize = true;
};

AttentionRnn train_emotion(std::span<const SequenceSample> data, const EmotionTrainOptions& options);
double emotion_accuracy(const AttentionRnn& model, std::span<const SequenceSample> data);

// Model file: the style classifier layout with `mu` after `b` and a trailing
// `valence` block.
std::string format_emotion_model(const AttentionRnn& model);
AttentionRnn parse_emotion_model(const std::string& text);
void save_emotion_model(const std::string& path, const AttentionRnn& model);
AttentionRnn load_emotion_model(const std::string& path);

struct SynthEmotionOptions {
  std::uint64_t seed = 0;
  std::size_t classes = kDefaultEmotionCount;
  std::size_t per_class = 30;
  std::size_t dim = 8;
  std::size_t frames = 16;
  std::size_t burst = 3;
  double noise = 0.5;
  double burst_gain = 2.5;
};

struct SynthEmotionSequence {
  SequenceSample sample;
  std::size_t burst_begin = 0;
  std::vector<Frame> neutral;  // the same sequence without the burst
};

// Neutral noise frames with a short burst of the class prototype (dimensions
// i with i mod classes == k) at a seeded position. Class-major order.
std::vector<SynthEmotionSequence> synth_emotion_frames(const SynthEmotionOptions& options);

}  // namespace cbm::emotion
