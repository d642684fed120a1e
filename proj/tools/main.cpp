#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

int main(int argc, char** argv) {
  using namespace helmopt::cli;
  CLI::App app{"helmopt: P1 finite elements for Helmholtz and eigenvalue shape and topology sensitivities"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_option("-s,--set", overrides, "override a config entry, e.g. --set problem.k2=2")->take_all();
    sub->add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (!out_dir.empty()) overrides.push_back("output.dir=\"" + out_dir + "\"");
    const Json config = load_config(config_path, overrides);
    const std::string from_file = config.at("command").get<std::string>();
    if (!from_file.empty() && from_file != command) {
      std::cerr << "note: config names command '" << from_file << "', running '" << command << "'\n";
    }
    Json summary;
    const int code = run_command(command, config, summary);
    std::cout << std::setw(2) << summary << std::endl;
    return code;
  } catch (const helmopt::Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
}
