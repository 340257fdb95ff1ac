#pragma once

// Builds a complete pipeline input directory from the library's own
// generators and trainers.

#include <filesystem>
#include <string>

#include "cbm/classify/style_classifier.hpp"
#include "cbm/core/text_io.hpp"
#include "cbm/csp/csp.hpp"
#include "cbm/emotion/attention_rnn.hpp"
#include "cbm/pipeline/catalog.hpp"

namespace fixture {

struct PipelineFixture {
  std::string dir;
  std::string config;  // path of pipeline.cfg
  int eeg_class = 0;
  int emotion_class = 0;
};

inline std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cbm-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// `extra` is appended verbatim to the generated config.
inline PipelineFixture make_pipeline_fixture(const std::string& name, int eeg_class = 2, int emotion_class = 0,
                                             const std::string& extra = "") {
  using namespace cbm;
  PipelineFixture f{fresh_dir(name), "", eeg_class, emotion_class};
  const auto at = [&](const std::string& file) { return (std::filesystem::path(f.dir) / file).string(); };

  eeg::SynthEegOptions eo;
  eo.seed = 11;
  const auto trials = eeg::synth_eeg(eo);
  const auto bank = csp::train_filter_bank(trials);
  std::vector<classify::SequenceSample> samples;
  for (const auto& t : trials) samples.push_back({{csp::apply_and_featurize(bank, t)}, *t.label});
  csp::save_bank(at("bank.txt"), bank);
  classify::save_model(at("style_model.txt"), classify::train(samples, classify::TrainOptions{}));
  eo.seed = 12;
  eo.trials_per_class = 1;
  eeg::save_trial(at("trial.txt"), eeg::synth_eeg(eo)[static_cast<std::size_t>(eeg_class)]);

  pipeline::write_catalog(at("catalog/manifest.json"), pipeline::synth_catalog({.seed = 5, .per_style = 2, .size = 32}));
  style::save_ppm(at("draft.ppm"), pipeline::synth_artwork(0, 32, 999));

  emotion::SynthEmotionOptions so;
  so.seed = 3;
  so.per_class = 10;
  std::vector<classify::SequenceSample> emo;
  for (const auto& s : emotion::synth_emotion_frames(so)) emo.push_back(s.sample);
  emotion::save_emotion_model(at("emotion_model.txt"),
                              emotion::train_emotion(emo, {.epochs = 200, .hidden = 8}));
  so.seed = 4;
  so.per_class = 1;
  const auto held = emotion::synth_emotion_frames(so)[static_cast<std::size_t>(emotion_class)];
  emotion::save_sequence(at("emotion.txt"), {held.sample.frames, held.sample.label});

  f.config = at("pipeline.cfg");
  text::write_file(f.config,
                   "# fixture pipeline\n"
                   "seed=21\n"
                   "eeg_trial=trial.txt\n"
                   "style_model=style_model.txt\n"
                   "csp_bank=bank.txt\n"
                   "catalog=catalog/manifest.json\n"
                   "draft=draft.ppm\n"
                   "emotion_sequence=emotion.txt\n"
                   "emotion_model=emotion_model.txt\n"
                   "iters=30\n"
                   "test_sets=40\n" +
                       extra);
  return f;
}

}  // namespace fixture
