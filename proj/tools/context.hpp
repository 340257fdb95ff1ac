#pragma once
// Shared plumbing for the `cbm` subcommands: common flags, output files,
// timings and the one-line JSON result.
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "CLI11.hpp"

namespace cbm::cli {

using nlohmann::json;

class Context {
 public:
  std::uint64_t seed = 0;
  std::string out = ".";
  bool verbose = false;

  bool seed_given() const { return seed_option_ != nullptr && seed_option_->count() > 0; }

  // Path of `name` inside --out, creating the directory on first use.
  std::string path(const std::string& name) const;

  // Writes `contents` to --out/name and lists it under `key` in "outputs".
  std::string write(const std::string& key, const std::string& name, const std::string& contents);
  // Lists a file written by other means.
  void record(const std::string& key, const std::string& file) { outputs_[key] = file; }

  void log(const std::string& message) const;

  template <class F>
  auto timed(const std::string& stage, F&& f) {
    log(stage);
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      stop(stage, start);
    } else {
      auto value = f();
      stop(stage, start);
      return value;
    }
  }

  // Replaces the stage list, for commands that time themselves.
  void set_stages(json stages) { stages_ = std::move(stages); }

  const json& outputs() const { return outputs_; }
  const json& stages() const { return stages_; }

 private:
  friend class Registry;
  void stop(const std::string& stage, std::chrono::steady_clock::time_point start);

  CLI::Option* seed_option_ = nullptr;
  json outputs_ = json::object();
  json stages_ = json::array();
};

// Runs after parsing; returns the command-specific fields of the result line.
using Action = std::function<json(Context&)>;

class Registry {
 public:
  explicit Registry(CLI::App& app) : app_(app) {}

  // Adds a subcommand with the common --seed/--out/--verbose flags. `setup`
  // declares the remaining options and returns the action.
  void add(const std::string& name, const std::string& description, const std::function<Action(CLI::App&)>& setup);

  // Parses argv and runs the selected subcommand. Returns the exit code.
  int run(int argc, char** argv);

 private:
  struct Entry {
    CLI::App* app = nullptr;
    Context context;
    Action action;
  };
  CLI::App& app_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

void register_eeg_commands(Registry& registry);
void register_emotion_commands(Registry& registry);
void register_art_commands(Registry& registry);

}  // namespace cbm::cli
