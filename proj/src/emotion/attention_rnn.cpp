#include "cbm/emotion/attention_rnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::emotion {

namespace {

Var matrix_var(Tape& t, const Matrix& m, bool trainable) {
  const Shape s = Shape::matrix(m.rows(), m.cols());
  return trainable ? t.parameter(s, m.data()) : t.constant(s, m.data());
}

Var vector_var(Tape& t, const std::vector<double>& v, std::size_t rows, std::size_t cols, bool trainable) {
  const Shape s = Shape::matrix(rows, cols);
  return trainable ? t.parameter(s, v) : t.constant(s, v);
}

struct ModelVars {
  classify::LstmCellVars cell;
  Var mu, wout, bout;
};

ModelVars record_model(Tape& t, const AttentionRnn& m, bool trainable) {
  return {classify::record_cell(t, m.cell, trainable), vector_var(t, m.mu, 1, m.hidden(), trainable),
          matrix_var(t, m.wout, trainable), vector_var(t, m.bout, m.classes, 1, trainable)};
}

struct Pooled {
  Var alpha;   // T × batch
  Var logits;  // K × batch
};

Pooled pooled_logits(Tape& t, const AttentionRnn& model, const ModelVars& vars,
                     std::span<const std::vector<Frame>* const> batch) {
  const auto inputs = classify::record_inputs(t, {model.input_mean, model.input_scale}, batch);
  const auto ys = classify::unroll(t, vars.cell, model.hidden(), inputs);
  std::vector<Var> scores;
  scores.reserve(ys.size());
  for (Var y : ys) scores.push_back(t.matmul(vars.mu, y));
  const Var alpha = t.softmax_columns(t.concat_rows(scores));
  Var z = t.scale_columns(ys[0], t.slice_rows(alpha, 0, 1));
  for (std::size_t s = 1; s < ys.size(); ++s) z = t.add(z, t.scale_columns(ys[s], t.slice_rows(alpha, s, s + 1)));
  return {alpha, t.add_column(t.matmul(vars.wout, z), vars.bout)};
}

void append(std::vector<double>& out, std::span<const double> v) { out.insert(out.end(), v.begin(), v.end()); }

void check_valence_map(const std::vector<double>& map, std::size_t classes) {
  require(map.size() == classes, "valence map needs one entry per emotion class");
  for (double v : map) require(v >= -1.0 && v <= 1.0, "valence map entries must lie in [-1, 1]");
}

}  // namespace

std::vector<double> default_valence_map() { return {1.0, -1.0, 0.0, 0.5}; }

std::string emotion_name(int id, std::size_t classes) {
  static constexpr const char* kNames[] = {"positive", "negative", "neutral", "excited"};
  if (classes == kDefaultEmotionCount && id >= 0 && id < 4) return kNames[id];
  return "emotion " + std::to_string(id);
}

std::string format_sequence(const AcousticSequence& seq) {
  require(!seq.frames.empty(), "sequence: no frames");
  std::string out = "dim=" + std::to_string(seq.dim()) + " frames=" + std::to_string(seq.frames.size()) +
                    " label=" + (seq.label ? std::to_string(*seq.label) : std::string("none")) + "\n";
  for (const auto& f : seq.frames) {
    require(f.size() == seq.dim(), "sequence: frames differ in dimension");
    out += text::join_reals(f, 17) + "\n";
  }
  return out;
}

AcousticSequence parse_sequence(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ContractError("sequence: empty file");
  const auto header = text::parse_header(line);
  const auto dim = text::parse_int(text::header_value(header, "dim"));
  const auto frames = text::parse_int(text::header_value(header, "frames"));
  require(dim >= 1 && frames >= 1, "sequence: header dimensions out of range");
  AcousticSequence seq;
  const auto& label = text::header_value(header, "label");
  if (label != "none") {
    seq.label = static_cast<int>(text::parse_int(label));
    require(*seq.label >= 0, "sequence: negative label");
  }
  for (long long t = 0; t < frames; ++t) {
    if (!std::getline(in, line)) throw ContractError("sequence: missing frame line " + std::to_string(t));
    auto values = text::parse_reals(line);
    require(values.size() == static_cast<std::size_t>(dim), "sequence: frame " + std::to_string(t) + " has wrong dim");
    for (double v : values) require(std::isfinite(v), "sequence: non-finite value");
    seq.frames.push_back(std::move(values));
  }
  return seq;
}

void save_sequence(const std::string& path, const AcousticSequence& seq) { text::write_file(path, format_sequence(seq)); }

AcousticSequence load_sequence(const std::string& path) { return parse_sequence(text::read_file(path)); }

Attention attention_pool(std::span<const std::vector<double>> ys, std::span<const double> mu) {
  require(!ys.empty(), "attention_pool: no states");
  const std::size_t h = mu.size();
  std::vector<double> scores(ys.size());
  for (std::size_t t = 0; t < ys.size(); ++t) {
    require(ys[t].size() == h, "attention_pool: state dim does not match mu");
    scores[t] = std::inner_product(mu.begin(), mu.end(), ys[t].begin(), 0.0);
  }
  const double peak = *std::max_element(scores.begin(), scores.end());
  Attention out{std::vector<double>(ys.size()), std::vector<double>(h, 0.0)};
  double total = 0.0;
  for (std::size_t t = 0; t < ys.size(); ++t) total += out.alpha[t] = std::exp(scores[t] - peak);
  for (std::size_t t = 0; t < ys.size(); ++t) {
    out.alpha[t] /= total;
    for (std::size_t i = 0; i < h; ++i) out.z[i] += out.alpha[t] * ys[t][i];
  }
  return out;
}

AttentionRnn AttentionRnn::initialize(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                                      std::uint64_t seed) {
  require(input_dim >= 1 && hidden >= 1 && classes >= 2, "emotion model: need D >= 1, H >= 1, K >= 2");
  AttentionRnn m;
  m.classes = classes;
  m.seed = seed;
  m.input_mean.assign(input_dim, 0.0);
  m.input_scale.assign(input_dim, 1.0);
  m.cell = classify::LstmCell::xavier(input_dim, hidden, seed);
  Rng rng(derive_seed(seed, 2));
  const double mu_limit = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  m.mu.resize(hidden);
  for (double& v : m.mu) v = rng.uniform(-mu_limit, mu_limit);
  const double out_limit = std::sqrt(6.0 / static_cast<double>(hidden + classes));
  m.wout = Matrix(classes, hidden);
  for (double& v : m.wout.data()) v = rng.uniform(-out_limit, out_limit);
  m.bout.assign(classes, 0.0);
  m.valence_map = classes == kDefaultEmotionCount ? default_valence_map() : std::vector<double>(classes, 0.0);
  return m;
}

std::size_t AttentionRnn::parameter_count() const {
  return cell.wx.size() + cell.wh.size() + cell.b.size() + mu.size() + wout.size() + bout.size();
}

std::vector<double> AttentionRnn::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  append(out, cell.wx.data());
  append(out, cell.wh.data());
  append(out, cell.b);
  append(out, mu);
  append(out, wout.data());
  append(out, bout);
  return out;
}

void AttentionRnn::assign(std::span<const double> flat) {
  require(flat.size() == parameter_count(), "emotion model: parameter vector has the wrong length");
  auto take = [&](std::span<double> dst) {
    std::copy(flat.begin(), flat.begin() + static_cast<long>(dst.size()), dst.begin());
    flat = flat.subspan(dst.size());
  };
  take(cell.wx.data());
  take(cell.wh.data());
  take(cell.b);
  take(mu);
  take(wout.data());
  take(bout);
}

EmotionResult recognize(const AttentionRnn& model, std::span<const Frame> frames) {
  classify::require_frames(model.input_dim(), frames);
  check_valence_map(model.valence_map, model.classes);
  const std::vector<Frame> seq(frames.begin(), frames.end());
  const std::vector<Frame>* batch[] = {&seq};
  Tape t;
  const auto vars = record_model(t, model, false);
  const auto pooled = pooled_logits(t, model, vars, batch);
  EmotionResult r;
  r.probabilities = t.value(t.softmax_columns(pooled.logits));
  r.attention = t.value(pooled.alpha);
  r.label = static_cast<int>(std::max_element(r.probabilities.begin(), r.probabilities.end()) - r.probabilities.begin());
  for (std::size_t k = 0; k < model.classes; ++k) r.valence += r.probabilities[k] * model.valence_map[k];
  r.valence = std::clamp(r.valence, -1.0, 1.0);
  return r;
}

double emotion_loss(const AttentionRnn& model, std::span<const SequenceSample> data, std::span<double> grad) {
  require(!data.empty(), "emotion model: empty dataset");
  const auto groups = classify::group_by_length(data, model.input_dim(), model.classes);

  Tape t;
  const bool want_grad = !grad.empty();
  const auto vars = record_model(t, model, want_grad);
  const double total = static_cast<double>(data.size());
  std::optional<Var> loss;
  for (const auto& [len, members] : groups) {
    std::vector<const std::vector<Frame>*> batch;
    std::vector<std::size_t> labels;
    for (std::size_t i : members) {
      batch.push_back(&data[i].frames);
      labels.push_back(static_cast<std::size_t>(data[i].label));
    }
    const Var ce = t.scale(t.softmax_cross_entropy(pooled_logits(t, model, vars, batch).logits, labels),
                           static_cast<double>(members.size()) / total);
    loss = loss ? t.add(*loss, ce) : ce;
  }
  if (want_grad) {
    require(grad.size() == model.parameter_count(), "emotion model: gradient buffer has the wrong length");
    t.backward(*loss);
    std::vector<double> g;
    g.reserve(grad.size());
    append(g, t.grad(vars.cell.wx));
    append(g, t.grad(vars.cell.wh));
    append(g, t.grad(vars.cell.b));
    append(g, t.grad(vars.mu));
    append(g, t.grad(vars.wout));
    append(g, t.grad(vars.bout));
    std::copy(g.begin(), g.end(), grad.begin());
  }
  return t.scalar(*loss);
}

AttentionRnn train_emotion(std::span<const SequenceSample> data, const EmotionTrainOptions& options) {
  require(!data.empty(), "train_emotion: empty dataset");
  require(options.lr > 0.0, "train_emotion: learning rate must be positive");
  check_valence_map(options.valence_map, options.classes);
  classify::require_all_classes(data, options.classes);
  const auto norm = options.standardize ? classify::fit_standardization(data)
                                        : classify::identity_standardization(data.front().frames.at(0).size());

  AttentionRnn model = AttentionRnn::initialize(norm.mean.size(), options.hidden, options.classes, options.seed);
  model.input_mean = norm.mean;
  model.input_scale = norm.scale;
  model.valence_map = options.valence_map;
  std::vector<double> params = model.flatten();
  std::vector<double> grad(params.size());
  for (std::size_t e = 0; e < options.epochs; ++e) {
    const double loss = emotion_loss(model, data, grad);
    if (!std::isfinite(loss)) throw RuntimeError("train_emotion: loss became non-finite at epoch " + std::to_string(e));
    model.loss_curve.push_back(loss);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= options.lr * grad[i];
    model.assign(params);
  }
  return model;
}

double emotion_accuracy(const AttentionRnn& model, std::span<const SequenceSample> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : data)
    if (recognize(model, s.frames).label == s.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::string format_emotion_model(const AttentionRnn& m) {
  std::string out = "D=" + std::to_string(m.input_dim()) + " H=" + std::to_string(m.hidden()) +
                    " K=" + std::to_string(m.classes) + " seed=" + std::to_string(m.seed) + "\n";
  out += text::format_block("input_mean", m.input_mean);
  out += text::format_block("input_scale", m.input_scale);
  out += text::format_block("wx", m.cell.wx);
  out += text::format_block("wh", m.cell.wh);
  out += text::format_block("b", m.cell.b);
  out += text::format_block("mu", m.mu);
  out += text::format_block("wout", m.wout);
  out += text::format_block("bout", m.bout);
  out += text::format_block("valence", m.valence_map);
  return out;
}

AttentionRnn parse_emotion_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ContractError("emotion model file: empty");
  const auto h = text::parse_header(line);
  const auto d = static_cast<std::size_t>(text::parse_int(text::header_value(h, "D")));
  const auto hidden = static_cast<std::size_t>(text::parse_int(text::header_value(h, "H")));
  const auto k = static_cast<std::size_t>(text::parse_int(text::header_value(h, "K")));
  AttentionRnn m;
  m.classes = k;
  m.seed = static_cast<std::uint64_t>(text::parse_int(text::header_value(h, "seed")));
  m.input_mean = text::parse_vector_block(in, "input_mean", d);
  m.input_scale = text::parse_vector_block(in, "input_scale", d);
  m.cell.wx = text::parse_block(in, "wx");
  m.cell.wh = text::parse_block(in, "wh");
  m.cell.b = text::parse_vector_block(in, "b", 4 * hidden);
  m.mu = text::parse_vector_block(in, "mu", hidden);
  m.wout = text::parse_block(in, "wout");
  m.bout = text::parse_vector_block(in, "bout", k);
  m.valence_map = text::parse_vector_block(in, "valence", k);
  require(m.cell.wx.rows() == 4 * hidden && m.cell.wx.cols() == d, "emotion model file: wx shape disagrees with header");
  require(m.cell.wh.rows() == 4 * hidden && m.cell.wh.cols() == hidden,
          "emotion model file: wh shape disagrees with header");
  require(m.wout.rows() == k && m.wout.cols() == hidden, "emotion model file: wout shape disagrees with header");
  check_valence_map(m.valence_map, k);
  return m;
}

void save_emotion_model(const std::string& path, const AttentionRnn& model) {
  text::write_file(path, format_emotion_model(model));
}

AttentionRnn load_emotion_model(const std::string& path) { return parse_emotion_model(text::read_file(path)); }

std::vector<SynthEmotionSequence> synth_emotion_frames(const SynthEmotionOptions& o) {
  require(o.classes >= 2 && o.classes <= o.dim, "synth_emotion: need 2 <= classes <= dim");
  require(o.burst >= 1 && o.burst < o.frames, "synth_emotion: burst must be shorter than the sequence");
  require(o.per_class >= 1, "synth_emotion: need at least one sequence per class");
  std::vector<SynthEmotionSequence> out;
  out.reserve(o.classes * o.per_class);
  for (std::size_t k = 0; k < o.classes; ++k) {
    for (std::size_t s = 0; s < o.per_class; ++s) {
      Rng rng(derive_seed(o.seed, k * 1'000'003 + s));
      SynthEmotionSequence seq;
      seq.sample.label = static_cast<int>(k);
      for (std::size_t t = 0; t < o.frames; ++t) {
        Frame f(o.dim);
        for (double& v : f) v = o.noise * rng.normal();
        seq.neutral.push_back(std::move(f));
      }
      seq.burst_begin = rng.below(o.frames - o.burst + 1);
      seq.sample.frames = seq.neutral;
      for (std::size_t t = seq.burst_begin; t < seq.burst_begin + o.burst; ++t)
        for (std::size_t i = k; i < o.dim; i += o.classes) seq.sample.frames[t][i] += o.burst_gain;
      out.push_back(std::move(seq));
    }
  }
  return out;
}

}  // namespace cbm::emotion
