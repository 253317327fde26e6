#include "cli.hpp"

int main(int argc, char** argv) {
  return barrierflow::cli::cli_main({argv + 1, argv + argc});
}
