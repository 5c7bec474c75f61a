#include <iostream>

#include "ctxcite/service/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ctxcite::service::RunCli(args, std::cout, std::cerr);
}
