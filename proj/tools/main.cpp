#include "context.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cbm: EEG-driven style classification, emotion recognition and style transfer"};
  app.require_subcommand(1);
  cbm::cli::Registry registry(app);
  cbm::cli::register_eeg_commands(registry);
  cbm::cli::register_emotion_commands(registry);
  cbm::cli::register_art_commands(registry);
  registry.add("version", "Print the tool version", [](CLI::App&) -> cbm::cli::Action {
    return [](cbm::cli::Context&) { return cbm::cli::json{{"version", CBM_VERSION}}; };
  });
  return registry.run(argc, argv);
}
