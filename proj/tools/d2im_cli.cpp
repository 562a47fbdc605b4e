#include "d2im/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace d2im;

  CLI::App cli{"Disentangled implicit fields: fit, extract, evaluate and transfer shapes"};
  cli.require_subcommand(1);

  std::string config_path;
  app::Overrides overrides;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;

  for (const auto& verb : app::verbs()) {
    CLI::App* sub = cli.add_subcommand(verb);
    sub->add_option("--config", config_path, "RunConfig JSON file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Seed for sampling and batching");
    sub->add_option("--threads", threads, "Cap on worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("--out", out, "Output directory");
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return app::kUsageError;
  }

  const CLI::App* sub = cli.get_subcommands().front();
  const std::string verb = sub->get_name();
  if (sub->count("--seed") > 0) overrides.seed = seed;
  if (sub->count("--threads") > 0) overrides.threads = threads;
  if (sub->count("--out") > 0) overrides.out = out;

  app::RunConfig config;
  try {
    if (!config_path.empty()) {
      config = app::RunConfig::load(config_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "d2im " << verb << ": config: " << e.what() << "\n";
    return app::kUsageError;
  }
  app::apply(config, overrides);
  return app::run(verb, config, std::cout, std::cerr);
}
