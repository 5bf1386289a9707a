#include <cgh/cgh.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Coarse-grained quantum hydrodynamics runner"};
  app.require_subcommand(1);
  std::string config, out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  const std::pair<const char*, const char*> commands[] = {
      {"evolve", "coarse-grain, evolve, extract hydrodynamic fields and residuals"},
      {"sweep", "scan the averaging length and report the classicality verdict"},
      {"diagnose", "residuals, thermal pressure and force bound at the final time"},
      {"kernels", "dump projector and kernel multiplier tables"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (default: output.directory)");
    sub->add_option("--seed", seed, "overrides fluctuation.seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const cgh::RunConfig cfg = cgh::load_config(config, seed);
    cgh::RunOptions opt;
    opt.command = command;
    opt.threads = threads;
    opt.out_dir = !out.empty() ? out : !cfg.output.directory.empty() ? cfg.output.directory : "cgh-out";
    const cgh::Json manifest = cgh::run_command(command, cfg, opt);
    std::cout << manifest["results"].dump(2) << '\n';
    return 0;
  } catch (const cgh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const cgh::NumericError& e) {
    std::cerr << "numeric error in " << command << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error in " << command << ": " << e.what() << '\n';
    return 2;
  }
}
