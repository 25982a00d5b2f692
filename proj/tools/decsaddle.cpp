#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "decsaddle/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decentralized saddle-point solvers with compressed communication"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run the configured algorithm and write its trace");
  run->add_option("config", config, "JSON run configuration")->required();
  auto* validate = app.add_subcommand("validate", "Check assumptions and parameter windows without iterating");
  validate->add_option("config", config, "JSON run configuration")->required();
  auto* reference = app.add_subcommand("reference", "Compute and store the saddle point");
  reference->add_option("config", config, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : decsaddle::kConfigError;
  }

  if (run->parsed()) return decsaddle::command_run(config, std::cout, std::cerr);
  if (validate->parsed()) return decsaddle::command_validate(config, std::cout, std::cerr);
  return decsaddle::command_reference(config, std::cout, std::cerr);
}
