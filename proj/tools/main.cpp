#include "screplay/cli.hpp"

int main(int argc, char** argv) {
  return screplay::cli_run(argc, argv);
}
