#include <filesystem>

#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/core/text_io.hpp"
#include "cbm/pipeline/catalog.hpp"
#include "cbm/pipeline/digest.hpp"
#include "cbm/pipeline/fidelity.hpp"
#include "cbm/pipeline/pipeline.hpp"
#include "cbm/style/convnet.hpp"
#include "cbm/style/image.hpp"
#include "cbm/style/transfer.hpp"
#include "datasets.hpp"

namespace cbm::cli {

namespace {

namespace fs = std::filesystem;

std::string write_image(Context& ctx, const std::string& key, const std::string& name, const style::ImageTensor& img) {
  const auto bytes = style::encode_ppm(img);
  ctx.write(key, name, bytes);
  return pipeline::sha256_hex(bytes);
}

struct TransferFlags {
  std::string content;
  std::string style;
  std::string net = "vgg19:16";
  std::string weights;
  std::vector<std::string> content_layers;
  std::vector<std::string> style_layers;
  style::SynthesisOptions synth{.alpha = 1.0, .beta = 300.0, .iters = 200, .step = 0.3};
};

Action transfer_style(CLI::App& app) {
  auto o = std::make_shared<TransferFlags>();
  app.add_option("--content", o->content, "Content image (PPM)")->required()->check(CLI::ExistingFile);
  app.add_option("--style", o->style, "Style image (PPM), resized to the content size")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--net", o->net, "vgg19[:divisor] or a topology such as 16,pool,16")->capture_default_str();
  app.add_option("--weights", o->weights, "CBMW1 weight file, replaces --net")->check(CLI::ExistingFile);
  app.add_option("--content-layers", o->content_layers, "Comma-separated layer names")->delimiter(',');
  app.add_option("--style-layers", o->style_layers, "Comma-separated layer names")->delimiter(',');
  app.add_option("--alpha", o->synth.alpha, "Content weight")->capture_default_str();
  app.add_option("--beta", o->synth.beta, "Style weight")->capture_default_str();
  app.add_option("--iters", o->synth.iters)->capture_default_str();
  app.add_option("--step", o->synth.step, "Gradient step size")->capture_default_str();
  return [o](Context& ctx) {
    const auto content = style::load_ppm(o->content);
    const auto style_img = style::resize_bilinear(style::load_ppm(o->style), content.height(), content.width());
    auto net = o->weights.empty() ? style::net_from_spec(o->net, derive_seed(ctx.seed, 1))
                                  : style::load_weights(o->weights);
    if (!o->content_layers.empty()) net.content_layers = o->content_layers;
    if (!o->style_layers.empty()) net.style_layers = o->style_layers;
    for (const auto& n : net.content_layers) net.index_of(n);
    for (const auto& n : net.style_layers) net.index_of(n);
    auto opts = o->synth;
    opts.seed = derive_seed(ctx.seed, 2);
    const auto r = ctx.timed("synthesize", [&] { return style::synthesize(net, content, style_img, opts); });
    const auto digest = write_image(ctx, "image", "stylized.ppm", r.image);
    std::string curve;
    for (double v : r.loss_curve) curve += text::format_real(v, 17) + "\n";
    ctx.write("loss_curve", "loss_curve.txt", curve);
    return json{{"iters", opts.iters},
                {"loss_first", r.loss_curve.front()},
                {"loss_last", r.loss_curve.back()},
                {"sha256", digest}};
  };
}

Action adjust_hue(CLI::App& app) {
  auto image = std::make_shared<std::string>();
  auto valence = std::make_shared<double>(0.0);
  auto k = std::make_shared<double>(0.1);
  app.add_option("--image", *image, "Input image (PPM)")->required()->check(CLI::ExistingFile);
  app.add_option("--valence", *valence, "Valence in [-1, 1]")->required();
  app.add_option("--k", *k, "Hue strength in [0, 0.5]")->capture_default_str();
  return [image, valence, k](Context& ctx) {
    const auto img = style::load_ppm(*image);
    const auto out = ctx.timed("adjust", [&] { return pipeline::adjust_hue(img, *valence, *k); });
    return json{{"valence", *valence}, {"k", *k}, {"sha256", write_image(ctx, "image", "hued.ppm", out)}};
  };
}

struct FidelityFlags {
  std::string goal;
  std::optional<double> non_machine;
  std::string catalog;
  std::vector<std::string> generated;
  pipeline::JudgeOptions judge;
};

pipeline::GoalMatrix read_goal(const std::string& path) {
  const auto j = read_json(path);
  try {
    return (j.is_object() ? j.at("goal") : j).get<pipeline::GoalMatrix>();
  } catch (const json::exception& e) {
    throw ContractError(path + ": goal must be a matrix of 0/1 entries (" + e.what() + ")");
  }
}

json report_fields(const pipeline::FidelityReport& r) {
  return {{"life_like", r.life_like}, {"judges", r.judges}, {"test_sets", r.test_sets}, {"non_machine", r.non_machine}};
}

Action evaluate_fidelity(CLI::App& app) {
  auto o = std::make_shared<FidelityFlags>();
  auto* goal = app.add_option("--goal", o->goal, "Judge × test-set goal matrix (JSON)")->check(CLI::ExistingFile);
  app.add_option("--non-machine", o->non_machine, "Non-machine proportion in [0, 1] (goal mode)")->needs(goal);
  auto* catalog = app.add_option("--catalog", o->catalog, "Catalog manifest (simulated-judge mode)")
                      ->check(CLI::ExistingFile)
                      ->excludes(goal);
  app.add_option("--generated", o->generated, "Generated images (PPM)")->check(CLI::ExistingFile)->needs(catalog);
  app.add_option("--judges", o->judge.judges)->capture_default_str();
  app.add_option("--test-sets", o->judge.test_sets)->capture_default_str();
  app.add_option("--set-size", o->judge.set_size, "Works per test set, one of them generated")->capture_default_str();
  return [o](Context& ctx) {
    require(!o->goal.empty() || !o->catalog.empty(), "evaluate-fidelity needs --goal or --catalog");
    if (!o->goal.empty()) {
      require(o->non_machine.has_value(), "--non-machine is required with --goal");
      const auto report = ctx.timed("score", [&] { return pipeline::fidelity(read_goal(o->goal), *o->non_machine); });
      ctx.write("report", "report.json", pipeline::to_json(report).dump(2) + "\n");
      return report_fields(report);
    }
    require(!o->generated.empty(), "--generated is required with --catalog");
    const auto records = pipeline::load_catalog(o->catalog);
    std::vector<pipeline::Work> works;
    for (const auto& g : o->generated) works.push_back({fs::path(g).filename().string(), style::load_ppm(g)});
    auto opts = o->judge;
    opts.seed = ctx.seed;
    const auto eval = ctx.timed("judge", [&] { return pipeline::evaluate_catalog(records, works, opts); });
    ctx.write("report", "report.json", pipeline::to_json(eval.report).dump(2) + "\n");
    ctx.write("manifest", "judging_manifest.json", eval.manifest.dump(2) + "\n");
    return report_fields(eval.report);
  };
}

struct CatalogFlags {
  pipeline::SynthCatalogOptions catalog;
  std::optional<int> draft_style;
};

Action synth_catalog(CLI::App& app) {
  auto o = std::make_shared<CatalogFlags>();
  app.add_option("--per-style", o->catalog.per_style, "Works per style")->capture_default_str();
  app.add_option("--size", o->catalog.size, "Image side in pixels")->capture_default_str();
  app.add_option("--artist", o->catalog.artist_id)->capture_default_str();
  app.add_option("--draft-style", o->draft_style, "Also write draft.ppm in this style (0-3)")
      ->check(CLI::Range(0, 3));
  return [o](Context& ctx) {
    auto opts = o->catalog;
    opts.seed = ctx.seed;
    const auto records = ctx.timed("synthesize", [&] { return pipeline::synth_catalog(opts); });
    const auto manifest = (fs::path(ctx.out) / "catalog" / "manifest.json").string();
    fs::create_directories(fs::path(manifest).parent_path());
    pipeline::write_catalog(manifest, records);
    ctx.record("manifest", manifest);
    if (o->draft_style) {
      write_image(ctx, "draft", "draft.ppm", pipeline::synth_artwork(*o->draft_style, opts.size, derive_seed(ctx.seed, 1)));
    }
    return json{{"records", records.size()}};
  };
}

Action run_pipeline(CLI::App& app) {
  auto config = std::make_shared<std::string>();
  auto replay = std::make_shared<std::string>();
  auto base = std::make_shared<std::string>();
  auto* cfg = app.add_option("--config", *config, "Run configuration (key=value)")->check(CLI::ExistingFile);
  auto* rep = app.add_option("--replay", *replay, "Re-run from a provenance record")
                  ->check(CLI::ExistingFile)
                  ->excludes(cfg);
  app.add_option("--base", *base, "Directory the recorded input paths are relative to (replay)")
      ->check(CLI::ExistingDirectory)
      ->needs(rep);
  return [config, replay, base](Context& ctx) {
    require(!config->empty() || !replay->empty(), "pipeline needs --config or --replay");
    pipeline::PipelineConfig c;
    if (!config->empty()) {
      c = pipeline::load_config(*config);
      if (ctx.seed_given()) c.seed = ctx.seed;
    } else {
      require(!ctx.seed_given(), "--seed cannot override a replayed run");
      c = pipeline::config_from_provenance(read_json(*replay), base->empty() ? "." : *base);
    }
    ctx.log("running pipeline with seed " + std::to_string(c.seed));
    const auto r = pipeline::run_pipeline(c);
    ctx.set_stages(pipeline::timings_json(r).at("stages"));
    for (const auto& [name, file] : pipeline::write_outputs(ctx.out, r)) ctx.record(name, file);
    const auto& p = r.provenance;
    return json{{"style", p.at("style").at("name")},
                {"match", p.at("match").at("file")},
                {"emotion", p.at("emotion").at("name")},
                {"valence", p.at("emotion").at("valence")},
                {"life_like", r.evaluation.report.life_like},
                {"artwork_sha256", p.at("outputs").at("artwork.ppm")}};
  };
}

}  // namespace

void register_art_commands(Registry& registry) {
  registry.add("transfer-style", "Render a content image in the style of another", transfer_style);
  registry.add("adjust-hue", "Warm or cool an image by emotional valence", adjust_hue);
  registry.add("evaluate-fidelity", "Score the life-like fidelity rate", evaluate_fidelity);
  registry.add("synth-catalog", "Generate a synthetic artist catalog (and optionally a draft)", synth_catalog);
  registry.add("pipeline", "Run the full pipeline from a config or a provenance record", run_pipeline);
}

}  // namespace cbm::cli
