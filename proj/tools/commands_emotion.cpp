#include <cstdio>

#include "cbm/core/error.hpp"
#include "cbm/core/text_io.hpp"
#include "cbm/emotion/attention_rnn.hpp"
#include "datasets.hpp"

namespace cbm::cli {

namespace {

Action synth_emotion(CLI::App& app) {
  auto o = std::make_shared<emotion::SynthEmotionOptions>();
  app.add_option("--classes", o->classes)->capture_default_str();
  app.add_option("--per-class", o->per_class, "Sequences per class")->capture_default_str();
  app.add_option("--dim", o->dim, "Frame dimension")->capture_default_str();
  app.add_option("--frames", o->frames, "Frames per sequence")->capture_default_str();
  app.add_option("--burst", o->burst, "Burst length in frames")->capture_default_str();
  app.add_option("--noise", o->noise, "Noise standard deviation")->capture_default_str();
  app.add_option("--burst-gain", o->burst_gain)->capture_default_str();
  return [o](Context& ctx) {
    o->seed = ctx.seed;
    const auto seqs = ctx.timed("synthesize", [&] { return emotion::synth_emotion_frames(*o); });
    json items = json::array();
    ctx.timed("write", [&] {
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sequence_%04zu.txt", i);
        const auto& s = seqs[i].sample;
        text::write_file(ctx.path(name), emotion::format_sequence({s.frames, s.label}));
        items.push_back({{"file", name}, {"label", s.label}, {"burst_begin", seqs[i].burst_begin}});
      }
      ctx.write("index", "sequences.json", json{{"kind", "emotion-sequences"}, {"items", items}}.dump(1) + "\n");
    });
    return json{{"sequences", seqs.size()}, {"classes", o->classes}};
  };
}

struct TrainEmotionFlags {
  std::string index;
  double holdout = 0.25;
  std::string valence_map;
  emotion::EmotionTrainOptions train;
};

Action train_emotion(CLI::App& app) {
  auto o = std::make_shared<TrainEmotionFlags>();
  app.add_option("--sequences", o->index, "Sequence index (sequences.json)")->required()->check(CLI::ExistingFile);
  app.add_option("--holdout", o->holdout, "Fraction of each class held out for evaluation")->capture_default_str();
  app.add_option("--classes", o->train.classes)->capture_default_str();
  app.add_option("--epochs", o->train.epochs)->capture_default_str();
  app.add_option("--lr", o->train.lr, "Learning rate")->capture_default_str();
  app.add_option("--hidden", o->train.hidden, "LSTM hidden size")->capture_default_str();
  app.add_option("--valence-map", o->valence_map, "Comma-separated valence per class");
  return [o](Context& ctx) {
    const auto samples = ctx.timed("load", [&] { return load_sequence_index(o->index); });
    std::vector<int> labels;
    for (const auto& s : samples) labels.push_back(s.label);
    const auto split = stratified_split(labels, o->holdout);
    const auto train_set = pick<classify::SequenceSample>(samples, split.train);
    const auto held_set = pick<classify::SequenceSample>(samples, split.holdout);

    auto opts = o->train;
    opts.seed = ctx.seed;
    if (!o->valence_map.empty()) {
      opts.valence_map = parse_valence_map(o->valence_map);
    } else if (opts.classes != emotion::kDefaultEmotionCount) {
      opts.valence_map.assign(opts.classes, 0.0);
    }
    const auto model = ctx.timed("train", [&] { return emotion::train_emotion(train_set, opts); });
    ctx.write("model", "emotion_model.txt", emotion::format_emotion_model(model));
    json result{{"train_size", train_set.size()},
                {"holdout_size", held_set.size()},
                {"train_accuracy", emotion::emotion_accuracy(model, train_set)},
                {"holdout_accuracy", nullptr},
                {"loss_first", model.loss_curve.empty() ? 0.0 : model.loss_curve.front()},
                {"loss_last", model.loss_curve.empty() ? 0.0 : model.loss_curve.back()}};
    if (!held_set.empty()) result["holdout_accuracy"] = emotion::emotion_accuracy(model, held_set);
    return result;
  };
}

Action recognize_emotion(CLI::App& app) {
  auto sequence = std::make_shared<std::string>();
  auto model = std::make_shared<std::string>();
  auto valence_map = std::make_shared<std::string>();
  app.add_option("--sequence", *sequence, "Acoustic frame sequence")->required()->check(CLI::ExistingFile);
  app.add_option("--model", *model, "Emotion model file")->required()->check(CLI::ExistingFile);
  app.add_option("--valence-map", *valence_map, "Override the model's valence map");
  return [sequence, model, valence_map](Context& ctx) {
    auto m = emotion::load_emotion_model(*model);
    if (!valence_map->empty()) {
      m.valence_map = parse_valence_map(*valence_map);
      require(m.valence_map.size() == m.classes, "valence map needs one entry per emotion class");
    }
    const auto seq = emotion::load_sequence(*sequence);
    const auto r = ctx.timed("recognize", [&] { return emotion::recognize(m, seq.frames); });
    json result{{"label", {{"id", r.label}, {"name", emotion::emotion_name(r.label, m.classes)}}},
                {"probabilities", r.probabilities},
                {"valence", r.valence},
                {"attention", r.attention}};
    ctx.write("emotion", "emotion.json", result.dump(2) + "\n");
    return result;
  };
}

}  // namespace

void register_emotion_commands(Registry& registry) {
  registry.add("synth-emotion", "Generate labelled synthetic acoustic sequences and an index", synth_emotion);
  registry.add("train-emotion", "Train the attention-pooled emotion recognizer", train_emotion);
  registry.add("recognize-emotion", "Recognize the emotion and valence of one sequence", recognize_emotion);
}

}  // namespace cbm::cli
