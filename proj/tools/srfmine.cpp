#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "srf/pipeline.hpp"
#include "srf/synthetic.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-factor mining over social posts and clinical notes"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(srf::kToolVersion));

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file");
  std::map<std::string, std::string> overrides;
  for (const auto& k : srf::config_keys()) {
    const std::string name(k.name);
    std::string dashed = name;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    auto names = "--" + name + (dashed != name ? ",--" + dashed : std::string());
    app.add_option_function<std::string>(
        names, [&overrides, name](const std::string& v) { overrides[name] = v; },
        std::string(k.help) + " (default: " + (k.default_value.empty() ? "none" : std::string(k.default_value)) + ")");
  }

  std::vector<std::pair<std::string, CLI::App*>> stages;
  for (const auto s : srf::kStages) {
    stages.emplace_back(std::string(s), app.add_subcommand(std::string(s), "run the " + std::string(s) + " stage"));
  }
  auto* all = app.add_subcommand("run-all", "run every stage in order");
  std::string fixture_dir;
  std::uint64_t fixture_seed = 2020;
  auto* fixture = app.add_subcommand("make-fixture", "write the synthetic demo inputs");
  fixture->add_option("dir", fixture_dir, "target directory")->required();
  fixture->add_option("--fixture-seed", fixture_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (fixture->parsed()) {
      const auto f = srf::synthetic::write_fixture(fixture_dir, fixture_seed);
      std::cout << "fixture written; config: " << f.config.string() << '\n';
      return kOk;
    }
    auto cfg = config_path.empty() ? srf::PipelineConfig{} : srf::PipelineConfig::load(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v, std::filesystem::current_path());
    srf::Pipeline pipeline(std::move(cfg), &std::cerr);
    if (all->parsed()) {
      pipeline.run_all();
    } else {
      for (const auto& [name, sub] : stages)
        if (sub->parsed()) pipeline.run(name);
    }
    return kOk;
  } catch (const srf::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const srf::MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const srf::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
}
