#include "cbm/pipeline/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <sstream>

#include "cbm/classify/style_classifier.hpp"
#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/core/text_io.hpp"
#include "cbm/csp/csp.hpp"
#include "cbm/eeg/features.hpp"
#include "cbm/emotion/attention_rnn.hpp"
#include "cbm/pipeline/digest.hpp"
#include "cbm/style/transfer.hpp"

namespace cbm::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long n = text::parse_int(v);
  require(n >= 0, "config: " + key + " must be non-negative");
  return static_cast<std::size_t>(n);
}

// One entry per config key: how to read it and how to print it canonically.
struct Field {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

Field string_field(std::string PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& v) { c.*member = v; },
          [member](const PipelineConfig& c) { return c.*member; }};
}

Field count_field(const std::string& key, std::size_t PipelineConfig::*member) {
  return {[key, member](PipelineConfig& c, const std::string& v) { c.*member = parse_count(key, v); },
          [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(double PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& v) { c.*member = text::parse_double(v); },
          [member](const PipelineConfig& c) { return text::format_real(c.*member, 17); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"seed",
       {[](PipelineConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_count("seed", v)); },
        [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
      {"eeg_trial", string_field(&PipelineConfig::eeg_trial)},
      {"style_model", string_field(&PipelineConfig::style_model)},
      {"csp_bank", string_field(&PipelineConfig::csp_bank)},
      {"features", string_field(&PipelineConfig::features)},
      {"window", count_field("window", &PipelineConfig::window)},
      {"hop", count_field("hop", &PipelineConfig::hop)},
      {"catalog", string_field(&PipelineConfig::catalog)},
      {"draft", string_field(&PipelineConfig::draft)},
      {"emotion_sequence", string_field(&PipelineConfig::emotion_sequence)},
      {"emotion_model", string_field(&PipelineConfig::emotion_model)},
      {"valence_map",
       {[](PipelineConfig& c, const std::string& v) { c.valence_map = text::parse_reals(v); },
        [](const PipelineConfig& c) { return c.valence_map ? text::join_reals(*c.valence_map, 17) : std::string(); }}},
      {"net", string_field(&PipelineConfig::net)},
      {"net_weights", string_field(&PipelineConfig::net_weights)},
      {"content_layers",
       {[](PipelineConfig& c, const std::string& v) { c.content_layers = split_list(v); },
        [](const PipelineConfig& c) { return join_list(c.content_layers); }}},
      {"style_layers",
       {[](PipelineConfig& c, const std::string& v) { c.style_layers = split_list(v); },
        [](const PipelineConfig& c) { return join_list(c.style_layers); }}},
      {"alpha", real_field(&PipelineConfig::alpha)},
      {"beta", real_field(&PipelineConfig::beta)},
      {"iters", count_field("iters", &PipelineConfig::iters)},
      {"step", real_field(&PipelineConfig::step)},
      {"hue_strength", real_field(&PipelineConfig::hue_strength)},
      {"judges", count_field("judges", &PipelineConfig::judges)},
      {"test_sets", count_field("test_sets", &PipelineConfig::test_sets)},
      {"set_size", count_field("set_size", &PipelineConfig::set_size)},
  };
  return table;
}

// Input files by config key, in record order.
std::vector<std::pair<std::string, std::string>> input_files(const PipelineConfig& c) {
  std::vector<std::pair<std::string, std::string>> files = {
      {"eeg_trial", c.eeg_trial}, {"style_model", c.style_model}, {"catalog", c.catalog},
      {"draft", c.draft},         {"emotion_sequence", c.emotion_sequence}, {"emotion_model", c.emotion_model}};
  if (c.features == "csp") files.emplace_back("csp_bank", c.csp_bank);
  if (!c.net_weights.empty()) files.emplace_back("net_weights", c.net_weights);
  return files;
}

style::ConvNet make_net(const PipelineConfig& c, std::uint64_t seed) {
  auto net = c.net_weights.empty() ? style::net_from_spec(c.net, seed) : style::load_weights(c.resolve(c.net_weights));
  if (!c.content_layers.empty()) net.content_layers = c.content_layers;
  if (!c.style_layers.empty()) net.style_layers = c.style_layers;
  for (const auto& n : net.content_layers) net.index_of(n);
  for (const auto& n : net.style_layers) net.index_of(n);
  return net;
}

class StageRunner {
 public:
  template <class F>
  auto operator()(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings.push_back({name, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()});
    };
    try {
      auto result = body();
      finish();
      return result;
    } catch (const ContractError& e) {
      throw ContractError("stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
      throw RuntimeError("stage " + name + ": " + e.what());
    }
  }

  std::vector<StageTiming> timings;
};

}  // namespace

std::string PipelineConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

void validate(const PipelineConfig& c) {
  require(c.features == "csp" || c.features == "frames", "config: features must be csp or frames");
  for (const auto& [key, path] : input_files(c)) {
    require(!path.empty(), "config: " + key + " is required");
    require(fs::is_regular_file(c.resolve(path)), "config: " + key + " file not found: " + path);
  }
  require(c.iters >= 1, "config: iters must be at least 1");
  require(c.step > 0.0, "config: step must be positive");
  require(c.alpha >= 0.0 && c.beta >= 0.0, "config: alpha and beta must be non-negative");
  require(c.hue_strength >= 0.0 && c.hue_strength <= 0.5, "config: hue_strength must lie in [0, 0.5]");
  require(c.judges >= 1 && c.test_sets >= 1 && c.set_size >= 2, "config: judges, test_sets >= 1 and set_size >= 2");
}

PipelineConfig config_from_entries(const std::map<std::string, std::string>& entries, const std::string& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  for (const auto& [key, value] : entries) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ContractError("config: unknown key '" + key + "'");
    if (key == "valence_map" && value.empty()) continue;
    it->second.set(c, value);
  }
  validate(c);
  return c;
}

PipelineConfig parse_config(const std::string& text, const std::string& base_dir) {
  std::map<std::string, std::string> entries;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ContractError("config line " + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (!fields().contains(key)) throw ContractError("config line " + std::to_string(n) + ": unknown key '" + key + "'");
    if (!entries.emplace(key, trim(line.substr(eq + 1))).second)
      throw ContractError("config line " + std::to_string(n) + ": repeated key '" + key + "'");
  }
  return config_from_entries(entries, base_dir);
}

PipelineConfig load_config(const std::string& path) {
  return parse_config(text::read_file(path), fs::path(path).parent_path().string());
}

std::map<std::string, std::string> config_entries(const PipelineConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : fields()) out[key] = field.get(c);
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& c) {
  validate(c);
  const auto t_start = std::chrono::steady_clock::now();
  StageRunner stage;
  const std::uint64_t net_seed = derive_seed(c.seed, 1);
  const std::uint64_t noise_seed = derive_seed(c.seed, 2);
  const std::uint64_t judge_seed = derive_seed(c.seed, 3);

  json inputs = json::object();
  stage("digest-inputs", [&] {
    for (const auto& [key, path] : input_files(c))
      inputs[key] = {{"path", path}, {"sha256", file_sha256(c.resolve(path))}};
    return 0;
  });

  const auto style_probs = stage("classify-style", [&] {
    const auto trial = eeg::load_trial(c.resolve(c.eeg_trial));
    const auto model = classify::load_model(c.resolve(c.style_model));
    std::vector<classify::Frame> frames;
    if (c.features == "csp") {
      frames.push_back(csp::apply_and_featurize(csp::load_bank(c.resolve(c.csp_bank)), trial));
    } else {
      frames = eeg::trial_frame_features(trial, {.window = c.window, .hop = c.hop});
    }
    return classify::forward(model, frames);
  });
  const auto label = classify::style_from_id(
      static_cast<int>(std::max_element(style_probs.begin(), style_probs.end()) - style_probs.begin()));

  const auto catalog = stage("load-catalog", [&] { return load_catalog(c.resolve(c.catalog)); });
  const auto match = stage("match-style", [&] { return classify::match_style(label, catalog); });

  const auto synthesis = stage("transfer-style", [&] {
    const auto draft = style::load_ppm(c.resolve(c.draft));
    const auto style_img = style::resize_bilinear(match.record.image, draft.height(), draft.width());
    const auto net = make_net(c, net_seed);
    return style::synthesize(net, draft, style_img,
                             {.alpha = c.alpha, .beta = c.beta, .iters = c.iters, .step = c.step, .seed = noise_seed});
  });

  const auto emotion = stage("recognize-emotion", [&] {
    auto model = emotion::load_emotion_model(c.resolve(c.emotion_model));
    if (c.valence_map) model.valence_map = *c.valence_map;
    const auto seq = emotion::load_sequence(c.resolve(c.emotion_sequence));
    return emotion::recognize(model, seq.frames);
  });

  PipelineResult r;
  r.before_hue = synthesis.image;
  r.artwork = stage("adjust-hue", [&] { return adjust_hue(synthesis.image, emotion.valence, c.hue_strength); });
  r.evaluation = stage("evaluate-fidelity", [&] {
    const Work work{"artwork.ppm", r.artwork};
    return evaluate_catalog(catalog, std::span(&work, 1),
                            {.seed = judge_seed, .judges = c.judges, .test_sets = c.test_sets, .set_size = c.set_size});
  });

  r.provenance = stage("record-provenance", [&] {
  json config = json::object();
  for (const auto& [k, v] : config_entries(c)) config[k] = v;
  return json{
      {"format", "cbm-provenance-1"},
      {"config", config},
      {"seeds", {{"master", c.seed}, {"net", net_seed}, {"noise", noise_seed}, {"judge", judge_seed}}},
      {"inputs", inputs},
      {"style", {{"id", label.id}, {"name", label.name()}, {"probabilities", style_probs}}},
      {"match",
       {{"file", match.record.file},
        {"style_id", match.record.style_id},
        {"artist_id", match.record.artist_id},
        {"timestamp", match.record.timestamp},
        {"fallback", match.fallback},
        {"sha256", file_sha256(resolve_catalog_path(c.resolve(c.catalog), match.record.file))}}},
      {"transfer",
       {{"iters", c.iters},
        {"loss_first", synthesis.loss_curve.front()},
        {"loss_last", synthesis.loss_curve.back()},
        {"sha256", sha256_hex(style::encode_ppm(r.before_hue))}}},
      {"emotion",
       {{"label", emotion.label},
        {"name", emotion::emotion_name(emotion.label, emotion.probabilities.size())},
        {"probabilities", emotion.probabilities},
        {"valence", emotion.valence}}},
      {"hue", {{"strength", c.hue_strength}, {"valence", emotion.valence}}},
      {"outputs",
       {{"artwork.ppm", sha256_hex(style::encode_ppm(r.artwork))},
        {"report.json", sha256_hex(to_json(r.evaluation.report).dump(2) + "\n")}}},
  };
  });
  r.timings = std::move(stage.timings);
  r.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return r;
}

json timings_json(const PipelineResult& r) {
  json stages = json::array();
  for (const auto& t : r.timings) stages.push_back({{"stage", t.stage}, {"ms", t.ms}});
  return {{"stages", stages}, {"total_ms", r.total_ms}};
}

std::map<std::string, std::string> write_outputs(const std::string& out_dir, const PipelineResult& r) {
  fs::create_directories(out_dir);
  const auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
  std::map<std::string, std::string> files;
  auto put = [&](const char* name, const std::string& contents) {
    text::write_file(at(name), contents);
    files[name] = at(name);
  };
  put("artwork.ppm", style::encode_ppm(r.artwork));
  put("provenance.json", r.provenance.dump(2) + "\n");
  put("report.json", to_json(r.evaluation.report).dump(2) + "\n");
  put("judging_manifest.json", r.evaluation.manifest.dump(2) + "\n");
  return files;
}

PipelineConfig config_from_provenance(const json& provenance, const std::string& base_dir) {
  std::map<std::string, std::string> entries;
  try {
    for (const auto& [k, v] : provenance.at("config").items()) entries[k] = v.get<std::string>();
  } catch (const json::exception& e) {
    throw ContractError(std::string("provenance: ") + e.what());
  }
  const PipelineConfig c = config_from_entries(entries, base_dir);
  for (const auto& [key, path] : input_files(c)) {
    std::string recorded;
    try {
      recorded = provenance.at("inputs").at(key).at("sha256").get<std::string>();
    } catch (const json::exception& e) {
      throw ContractError("provenance: no digest for " + key + ": " + e.what());
    }
    if (file_sha256(c.resolve(path)) != recorded)
      throw ContractError("provenance: " + key + " (" + path + ") no longer matches its recorded digest");
  }
  return c;
}

}  // namespace cbm::pipeline
