#include <algorithm>
#include <cstdio>
#include <optional>

#include "cbm/classify/style_classifier.hpp"
#include "cbm/core/error.hpp"
#include "cbm/core/text_io.hpp"
#include "cbm/csp/csp.hpp"
#include "cbm/eeg/trial.hpp"
#include "cbm/emotion/attention_rnn.hpp"
#include "datasets.hpp"

namespace cbm::cli {

namespace {

struct FeatureFlags {
  std::string features = "csp";
  std::string bank;
  std::size_t window = 256;
  std::size_t hop = 128;

  void add_to(CLI::App& app) {
    app.add_option("--features", features, "csp or frames")->check(CLI::IsMember({"csp", "frames"}))->capture_default_str();
    app.add_option("--bank", bank, "CSP filter bank (csp features)")->check(CLI::ExistingFile);
    app.add_option("--window", window, "Frame length in samples (frames features)")->capture_default_str();
    app.add_option("--hop", hop, "Frame hop in samples (frames features)")->capture_default_str();
  }

  std::optional<csp::FilterBank> load_bank() const {
    if (features != "csp") return std::nullopt;
    require(!bank.empty(), "--bank is required for csp features");
    return csp::load_bank(bank);
  }
};

Action synth_eeg(CLI::App& app) {
  auto o = std::make_shared<eeg::SynthEegOptions>();
  app.add_option("--classes", o->classes)->capture_default_str();
  app.add_option("--per-class", o->trials_per_class, "Trials per class")->capture_default_str();
  app.add_option("--channels", o->channels)->capture_default_str();
  app.add_option("--samples", o->samples)->capture_default_str();
  app.add_option("--fs", o->fs, "Sampling rate in Hz")->capture_default_str();
  return [o](Context& ctx) {
    o->seed = ctx.seed;
    const auto trials = ctx.timed("synthesize", [&] { return eeg::synth_eeg(*o); });
    json items = json::array();
    ctx.timed("write", [&] {
      for (std::size_t i = 0; i < trials.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "trial_%04zu.txt", i);
        text::write_file(ctx.path(name), eeg::format_trial(trials[i]));
        items.push_back({{"file", name}, {"label", *trials[i].label}});
      }
      ctx.write("index", "trials.json", json{{"kind", "eeg-trials"}, {"items", items}}.dump(1) + "\n");
    });
    return json{{"trials", trials.size()}, {"classes", o->classes}};
  };
}

Action extract_features(CLI::App& app) {
  auto trial = std::make_shared<std::string>();
  auto f = std::make_shared<FeatureFlags>();
  app.add_option("--trial", *trial, "EEG trial file")->required()->check(CLI::ExistingFile);
  f->add_to(app);
  return [trial, f](Context& ctx) {
    const auto t = eeg::load_trial(*trial);
    const auto bank = f->load_bank();
    const auto frames = ctx.timed("extract", [&] {
      return style_frames(t, f->features, bank ? &*bank : nullptr, f->window, f->hop);
    });
    ctx.write("features", "features.txt", emotion::format_sequence({frames, t.label}));
    return json{{"dim", frames.front().size()}, {"frames", frames.size()}, {"features", f->features}};
  };
}

Action train_csp(CLI::App& app) {
  auto index = std::make_shared<std::string>();
  app.add_option("--trials", *index, "Trial index (trials.json)")->required()->check(CLI::ExistingFile);
  return [index](Context& ctx) {
    const auto trials = ctx.timed("load", [&] { return load_trial_index(*index); });
    const auto covs = ctx.timed("covariances", [&] { return csp::class_covariances(trials); });
    const auto bank = ctx.timed("diagonalize", [&] { return csp::build_mixed_filter(covs); });
    csp::PairResiduals worst;
    for (const auto& p : bank.pairs) {
      const auto r = csp::pair_residuals(p, covs[static_cast<std::size_t>(p.class_i)],
                                         covs[static_cast<std::size_t>(p.class_j)]);
      worst.off_diagonal = std::max(worst.off_diagonal, r.off_diagonal);
      worst.whitening = std::max(worst.whitening, r.whitening);
      worst.lambda_sum = std::max(worst.lambda_sum, r.lambda_sum);
    }
    ctx.write("bank", "bank.txt", csp::format_bank(bank));
    return json{{"classes", bank.classes},
                {"channels", bank.channels},
                {"filters", bank.mixed.rows()},
                {"residuals",
                 {{"off_diagonal", worst.off_diagonal},
                  {"whitening", worst.whitening},
                  {"lambda_sum", worst.lambda_sum}}}};
  };
}

struct TrainStyleFlags {
  std::string index;
  FeatureFlags feat;
  double holdout = 0.25;
  classify::TrainOptions train;
};

Action train_style(CLI::App& app) {
  auto o = std::make_shared<TrainStyleFlags>();
  app.add_option("--trials", o->index, "Trial index (trials.json)")->required()->check(CLI::ExistingFile);
  o->feat.add_to(app);
  app.add_option("--holdout", o->holdout, "Fraction of each class held out for evaluation")->capture_default_str();
  app.add_option("--epochs", o->train.epochs)->capture_default_str();
  app.add_option("--lr", o->train.lr, "Learning rate")->capture_default_str();
  app.add_option("--hidden", o->train.hidden, "LSTM hidden size")->capture_default_str();
  return [o](Context& ctx) {
    const auto trials = ctx.timed("load", [&] { return load_trial_index(o->index); });
    std::vector<int> labels;
    for (const auto& t : trials) labels.push_back(*t.label);
    const auto split = stratified_split(labels, o->holdout);
    const auto train_trials = pick<eeg::EegTrial>(trials, split.train);

    std::optional<csp::FilterBank> bank;
    if (o->feat.features == "csp") {
      if (o->feat.bank.empty()) {
        bank = ctx.timed("train-csp", [&] { return csp::train_filter_bank(train_trials); });
        ctx.write("bank", "bank.txt", csp::format_bank(*bank));
      } else {
        bank = csp::load_bank(o->feat.bank);
      }
    }
    const auto samples = ctx.timed("features", [&] {
      std::vector<classify::SequenceSample> out;
      for (const auto& t : trials) {
        out.push_back({style_frames(t, o->feat.features, bank ? &*bank : nullptr, o->feat.window, o->feat.hop),
                       *t.label});
      }
      return out;
    });
    const auto train_set = pick<classify::SequenceSample>(samples, split.train);
    const auto held_set = pick<classify::SequenceSample>(samples, split.holdout);

    auto opts = o->train;
    opts.seed = ctx.seed;
    const auto model = ctx.timed("train", [&] { return classify::train(train_set, opts); });
    ctx.write("model", "style_model.txt", classify::format_model(model));
    json result{{"features", o->feat.features},
                {"train_size", train_set.size()},
                {"holdout_size", held_set.size()},
                {"train_accuracy", classify::accuracy(model, train_set)},
                {"holdout_accuracy", nullptr},
                {"loss_first", model.loss_curve.empty() ? 0.0 : model.loss_curve.front()},
                {"loss_last", model.loss_curve.empty() ? 0.0 : model.loss_curve.back()}};
    if (!held_set.empty()) result["holdout_accuracy"] = classify::accuracy(model, held_set);
    return result;
  };
}

Action classify_style(CLI::App& app) {
  auto trial = std::make_shared<std::string>();
  auto model = std::make_shared<std::string>();
  auto f = std::make_shared<FeatureFlags>();
  app.add_option("--trial", *trial, "EEG trial file")->required()->check(CLI::ExistingFile);
  app.add_option("--model", *model, "Style model file")->required()->check(CLI::ExistingFile);
  f->add_to(app);
  return [trial, model, f](Context& ctx) {
    const auto t = eeg::load_trial(*trial);
    const auto bank = f->load_bank();
    const auto m = classify::load_model(*model);
    const auto frames = ctx.timed("features", [&] {
      return style_frames(t, f->features, bank ? &*bank : nullptr, f->window, f->hop);
    });
    const auto probs = ctx.timed("classify", [&] { return classify::forward(m, frames); });
    const auto label = classify::style_from_id(
        static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
    json result{{"label", {{"id", label.id}, {"name", label.name()}}}, {"probabilities", probs}};
    ctx.write("style", "style.json", result.dump(2) + "\n");
    return result;
  };
}

}  // namespace

void register_eeg_commands(Registry& registry) {
  registry.add("synth-eeg", "Generate labelled synthetic EEG trials and an index", synth_eeg);
  registry.add("extract-features", "Write the classifier input features of one trial", extract_features);
  registry.add("train-csp", "Train the multiclass CSP filter bank", train_csp);
  registry.add("train-style", "Train the LSTM style classifier", train_style);
  registry.add("classify-style", "Classify the art style of one EEG trial", classify_style);
}

}  // namespace cbm::cli
