#include "cbm/classify/style_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::classify {

namespace {

void xavier_fill(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
}

Var matrix_var(Tape& t, const Matrix& m, bool trainable) {
  const Shape s = Shape::matrix(m.rows(), m.cols());
  return trainable ? t.parameter(s, m.data()) : t.constant(s, m.data());
}

Var column_var(Tape& t, const std::vector<double>& v, bool trainable) {
  const Shape s = Shape::matrix(v.size(), 1);
  return trainable ? t.parameter(s, v) : t.constant(s, v);
}


struct ModelVars {
  LstmCellVars cell;
  Var wout, bout;
};

ModelVars record_model(Tape& t, const LstmClassifier& m, bool trainable) {
  return {record_cell(t, m.cell, trainable), matrix_var(t, m.wout, trainable), column_var(t, m.bout, trainable)};
}

Var logits_for(Tape& t, const LstmClassifier& model, const ModelVars& vars,
               std::span<const std::vector<Frame>* const> batch) {
  const auto inputs = record_inputs(t, {model.input_mean, model.input_scale}, batch);
  const auto hs = unroll(t, vars.cell, model.hidden(), inputs);
  return t.add_column(t.matmul(vars.wout, hs.back()), vars.bout);
}

void append(std::vector<double>& out, std::span<const double> v) { out.insert(out.end(), v.begin(), v.end()); }

}  // namespace

void require_frames(std::size_t dim, std::span<const Frame> frames) {
  require(!frames.empty(), "sequence has no frames");
  for (const auto& f : frames)
    require(f.size() == dim, "frame dim " + std::to_string(f.size()) + " does not match model input dim " +
                                 std::to_string(dim));
}

Standardization identity_standardization(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Standardization fit_standardization(std::span<const SequenceSample> data) {
  require(!data.empty() && !data.front().frames.empty(), "standardization: no frames");
  const std::size_t d = data.front().frames.front().size();
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  double n = 0.0;
  for (const auto& s : data)
    for (const auto& f : s.frames) {
      require(f.size() == d, "standardization: inconsistent frame dimensions");
      for (std::size_t i = 0; i < d; ++i) {
        sum[i] += f[i];
        sq[i] += f[i] * f[i];
      }
      n += 1.0;
    }
  Standardization out = identity_standardization(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double mean = sum[i] / n;
    const double var = std::max(0.0, sq[i] / n - mean * mean);
    out.mean[i] = mean;
    if (var > 1e-24) out.scale[i] = 1.0 / std::sqrt(var);
  }
  return out;
}

std::map<std::size_t, std::vector<std::size_t>> group_by_length(std::span<const SequenceSample> data,
                                                                 std::size_t dim, std::size_t classes) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    require(!s.frames.empty(), "sequence " + std::to_string(i) + " has no frames");
    for (const auto& f : s.frames)
      require(f.size() == dim, "sequence " + std::to_string(i) + ": frame dim " + std::to_string(f.size()) +
                                   " does not match model input dim " + std::to_string(dim));
    require(s.label >= 0 && static_cast<std::size_t>(s.label) < classes,
            "sequence " + std::to_string(i) + ": label out of range");
    groups[s.frames.size()].push_back(i);
  }
  return groups;
}

void require_all_classes(std::span<const SequenceSample> data, std::size_t classes) {
  std::set<int> present;
  for (const auto& s : data) present.insert(s.label);
  std::string missing;
  for (std::size_t k = 0; k < classes; ++k)
    if (!present.count(static_cast<int>(k))) missing += (missing.empty() ? "" : ",") + std::to_string(k);
  if (!missing.empty()) throw ContractError("classes absent from dataset: " + missing);
}

std::vector<Var> record_inputs(Tape& t, const Standardization& norm, std::span<const std::vector<Frame>* const> batch) {
  const std::size_t d = norm.mean.size();
  const std::size_t b = batch.size();
  const std::size_t steps = batch.front()->size();
  std::vector<Var> inputs;
  inputs.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> x(d * b);
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t i = 0; i < d; ++i) x[i * b + j] = ((*batch[j])[s][i] - norm.mean[i]) * norm.scale[i];
    inputs.push_back(t.constant(Shape::matrix(d, b), std::move(x)));
  }
  return inputs;
}

LstmCell LstmCell::xavier(std::size_t input_dim, std::size_t hidden, std::uint64_t seed) {
  Rng rng(seed);
  LstmCell c{Matrix(4 * hidden, input_dim), Matrix(4 * hidden, hidden), std::vector<double>(4 * hidden, 0.0)};
  xavier_fill(c.wx, input_dim, hidden, rng);
  xavier_fill(c.wh, hidden, hidden, rng);
  return c;
}

LstmCellVars record_cell(Tape& t, const LstmCell& cell, bool trainable) {
  return {matrix_var(t, cell.wx, trainable), matrix_var(t, cell.wh, trainable), column_var(t, cell.b, trainable)};
}

std::vector<Var> unroll(Tape& t, const LstmCellVars& cell, std::size_t hidden, std::span<const Var> inputs) {
  require(!inputs.empty(), "lstm: no input steps");
  const std::size_t batch = t.shape(inputs.front()).cols();
  Var h = t.constant(Shape::matrix(hidden, batch), std::vector<double>(hidden * batch, 0.0));
  Var c = h;
  std::vector<Var> states;
  states.reserve(inputs.size());
  for (Var x : inputs) {
    const Var z = t.add_column(t.add(t.matmul(cell.wx, x), t.matmul(cell.wh, h)), cell.b);
    const Var in_gate = t.sigmoid(t.slice_rows(z, 0, hidden));
    const Var forget = t.sigmoid(t.slice_rows(z, hidden, 2 * hidden));
    const Var cand = t.tanh(t.slice_rows(z, 2 * hidden, 3 * hidden));
    const Var out_gate = t.sigmoid(t.slice_rows(z, 3 * hidden, 4 * hidden));
    c = t.add(t.mul(forget, c), t.mul(in_gate, cand));
    h = t.mul(out_gate, t.tanh(c));
    states.push_back(h);
  }
  return states;
}

LstmClassifier LstmClassifier::initialize(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                                          std::uint64_t seed) {
  require(input_dim >= 1 && hidden >= 1 && classes >= 2, "style classifier: need D >= 1, H >= 1, K >= 2");
  LstmClassifier m;
  m.classes = classes;
  m.seed = seed;
  m.input_mean.assign(input_dim, 0.0);
  m.input_scale.assign(input_dim, 1.0);
  m.cell = LstmCell::xavier(input_dim, hidden, seed);
  Rng rng(derive_seed(seed, 1));
  m.wout = Matrix(classes, hidden);
  xavier_fill(m.wout, hidden, classes, rng);
  m.bout.assign(classes, 0.0);
  return m;
}

std::size_t LstmClassifier::parameter_count() const {
  return cell.wx.size() + cell.wh.size() + cell.b.size() + wout.size() + bout.size();
}

std::vector<double> LstmClassifier::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  append(out, cell.wx.data());
  append(out, cell.wh.data());
  append(out, cell.b);
  append(out, wout.data());
  append(out, bout);
  return out;
}

void LstmClassifier::assign(std::span<const double> flat) {
  require(flat.size() == parameter_count(), "style classifier: parameter vector has the wrong length");
  auto take = [&](std::span<double> dst) {
    std::copy(flat.begin(), flat.begin() + static_cast<long>(dst.size()), dst.begin());
    flat = flat.subspan(dst.size());
  };
  take(cell.wx.data());
  take(cell.wh.data());
  take(cell.b);
  take(wout.data());
  take(bout);
}

std::vector<double> forward(const LstmClassifier& model, std::span<const Frame> frames) {
  require_frames(model.input_dim(), frames);
  const std::vector<Frame> seq(frames.begin(), frames.end());
  const std::vector<Frame>* batch[] = {&seq};
  Tape t;
  const auto vars = record_model(t, model, false);
  const Var probs = t.softmax_columns(logits_for(t, model, vars, batch));
  return t.value(probs);
}

StyleLabel classify(const LstmClassifier& model, std::span<const Frame> frames) {
  const auto p = forward(model, frames);
  return style_from_id(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
}

double dataset_loss(const LstmClassifier& model, std::span<const SequenceSample> data, std::span<double> grad) {
  require(!data.empty(), "style classifier: empty dataset");
  const auto groups = group_by_length(data, model.input_dim(), model.classes);

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
    const Var ce = t.scale(t.softmax_cross_entropy(logits_for(t, model, vars, batch), labels),
                           static_cast<double>(members.size()) / total);
    loss = loss ? t.add(*loss, ce) : ce;
  }
  if (want_grad) {
    require(grad.size() == model.parameter_count(), "style classifier: gradient buffer has the wrong length");
    t.backward(*loss);
    std::vector<double> g;
    g.reserve(grad.size());
    append(g, t.grad(vars.cell.wx));
    append(g, t.grad(vars.cell.wh));
    append(g, t.grad(vars.cell.b));
    append(g, t.grad(vars.wout));
    append(g, t.grad(vars.bout));
    std::copy(g.begin(), g.end(), grad.begin());
  }
  return t.scalar(*loss);
}

LstmClassifier train(std::span<const SequenceSample> data, const TrainOptions& options) {
  require(!data.empty(), "train: empty dataset");
  require(options.lr > 0.0, "train: learning rate must be positive");
  require_all_classes(data, options.classes);
  const auto norm = options.standardize ? fit_standardization(data)
                                        : identity_standardization(data.front().frames.at(0).size());

  LstmClassifier model = LstmClassifier::initialize(norm.mean.size(), options.hidden, options.classes, options.seed);
  model.input_mean = norm.mean;
  model.input_scale = norm.scale;
  std::vector<double> params = model.flatten();
  std::vector<double> grad(params.size());
  for (std::size_t e = 0; e < options.epochs; ++e) {
    const double loss = dataset_loss(model, data, grad);
    if (!std::isfinite(loss)) throw RuntimeError("train: loss became non-finite at epoch " + std::to_string(e));
    model.loss_curve.push_back(loss);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= options.lr * grad[i];
    model.assign(params);
  }
  return model;
}

double accuracy(const LstmClassifier& model, std::span<const SequenceSample> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : data)
    if (classify(model, s.frames).id == s.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::string format_model(const LstmClassifier& m) {
  std::string out = "D=" + std::to_string(m.input_dim()) + " H=" + std::to_string(m.hidden()) +
                    " K=" + std::to_string(m.classes) + " seed=" + std::to_string(m.seed) + "\n";
  out += text::format_block("input_mean", m.input_mean);
  out += text::format_block("input_scale", m.input_scale);
  out += text::format_block("wx", m.cell.wx);
  out += text::format_block("wh", m.cell.wh);
  out += text::format_block("b", m.cell.b);
  out += text::format_block("wout", m.wout);
  out += text::format_block("bout", m.bout);
  return out;
}

LstmClassifier parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ContractError("model file: empty");
  const auto h = text::parse_header(line);
  const auto d = static_cast<std::size_t>(text::parse_int(text::header_value(h, "D")));
  const auto hidden = static_cast<std::size_t>(text::parse_int(text::header_value(h, "H")));
  const auto k = static_cast<std::size_t>(text::parse_int(text::header_value(h, "K")));
  LstmClassifier m;
  m.classes = k;
  m.seed = static_cast<std::uint64_t>(text::parse_int(text::header_value(h, "seed")));
  m.input_mean = text::parse_vector_block(in, "input_mean", d);
  m.input_scale = text::parse_vector_block(in, "input_scale", d);
  m.cell.wx = text::parse_block(in, "wx");
  m.cell.wh = text::parse_block(in, "wh");
  m.cell.b = text::parse_vector_block(in, "b", 4 * hidden);
  m.wout = text::parse_block(in, "wout");
  m.bout = text::parse_vector_block(in, "bout", k);
  require(m.cell.wx.rows() == 4 * hidden && m.cell.wx.cols() == d, "model file: wx shape disagrees with header");
  require(m.cell.wh.rows() == 4 * hidden && m.cell.wh.cols() == hidden, "model file: wh shape disagrees with header");
  require(m.wout.rows() == k && m.wout.cols() == hidden, "model file: wout shape disagrees with header");
  return m;
}

void save_model(const std::string& path, const LstmClassifier& model) { text::write_file(path, format_model(model)); }

LstmClassifier load_model(const std::string& path) { return parse_model(text::read_file(path)); }

StyleMatch match_style(StyleLabel label, std::span<const pipeline::ArtworkRecord> catalog) {
  require(!catalog.empty(), "match_style: catalog is empty");
  auto more_recent = [](const pipeline::ArtworkRecord* a, const pipeline::ArtworkRecord* b) {
    if (a->timestamp != b->timestamp) return a->timestamp > b->timestamp;
    return a->file < b->file;
  };
  const pipeline::ArtworkRecord* best = nullptr;
  const pipeline::ArtworkRecord* newest = nullptr;
  for (const auto& r : catalog) {
    if (!newest || more_recent(&r, newest)) newest = &r;
    if (r.style_id == label.id && (!best || more_recent(&r, best))) best = &r;
  }
  if (best) return {*best, false};
  return {*newest, true};
}

}  // namespace cbm::classify
