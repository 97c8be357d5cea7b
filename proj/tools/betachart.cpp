#include <iostream>

#include "cli_args.hpp"

int main(int argc, char** argv) {
  auto parser = betachart::tools::make_parser();
  try {
    parser.app->parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return parser.app->exit(e);
  }
  try {
    betachart::io::apply_environment(parser.config);
  } catch (const betachart::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return betachart::io::kExitData;
  }
  return betachart::io::run(parser.config, std::cout, std::cerr);
}
