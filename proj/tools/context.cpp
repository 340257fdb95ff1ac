#include "context.hpp"

#include <filesystem>
#include <iostream>

#include "cbm/core/error.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::cli {

namespace fs = std::filesystem;

std::string Context::path(const std::string& name) const {
  fs::create_directories(out);
  return (fs::path(out) / name).string();
}

std::string Context::write(const std::string& key, const std::string& name, const std::string& contents) {
  const auto file = path(name);
  text::write_file(file, contents);
  record(key, file);
  return file;
}

void Context::log(const std::string& message) const {
  if (verbose) std::cerr << "[cbm] " << message << '\n';
}

void Context::stop(const std::string& stage, std::chrono::steady_clock::time_point start) {
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  stages_.push_back({{"stage", stage}, {"ms", ms}});
}

void Registry::add(const std::string& name, const std::string& description,
                   const std::function<Action(CLI::App&)>& setup) {
  auto entry = std::make_unique<Entry>();
  entry->app = app_.add_subcommand(name, description);
  auto& ctx = entry->context;
  ctx.seed_option_ = entry->app->add_option("--seed", ctx.seed, "Master seed")->capture_default_str();
  entry->app->add_option("--out", ctx.out, "Output directory")->capture_default_str();
  entry->app->add_flag("-v,--verbose", ctx.verbose, "Log progress to standard error");
  entry->action = setup(*entry->app);
  entries_.push_back(std::move(entry));
}

int Registry::run(int argc, char** argv) {
  try {
    app_.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app_.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app_.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app_.exit(e);
  } catch (const CLI::ParseError& e) {
    const CLI::App* failing = &app_;
    for (const auto& entry : entries_) {
      if (entry->app->parsed()) failing = entry->app;
    }
    std::cerr << "error: " << e.what() << "\n\n" << failing->help();
    return 2;
  }

  Entry* selected = nullptr;
  for (const auto& entry : entries_) {
    if (entry->app->parsed()) selected = entry.get();
  }
  if (selected == nullptr) {
    std::cerr << app_.help();
    return 2;
  }

  const auto& name = selected->app->get_name();
  auto& ctx = selected->context;
  const auto start = std::chrono::steady_clock::now();
  json line;
  int code = 0;
  try {
    line = selected->action(ctx);
    line["status"] = "ok";
  } catch (const ContractError& e) {
    line = {{"status", "error"}, {"error", e.what()}};
    code = 2;
  } catch (const std::exception& e) {
    line = {{"status", "error"}, {"error", e.what()}};
    code = 1;
  }
  const double total = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  json stages = ctx.stages();
  if (stages.empty()) stages.push_back({{"stage", name}, {"ms", total}});
  line["command"] = name;
  line["outputs"] = ctx.outputs();
  line["timings"] = {{"stages", stages}, {"total_ms", total}};
  if (code != 0) std::cerr << "cbm " << name << ": " << line["error"].get<std::string>() << '\n';
  std::cout << line.dump() << std::endl;
  return code;
}

}  // namespace cbm::cli
