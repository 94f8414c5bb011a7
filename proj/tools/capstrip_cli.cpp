// capstrip command-line tool (placeholder while the library grows; the real
// subcommand dispatch lands with the experiments module).
#include <cstdio>

int main() {
    std::puts("capstrip: no subcommands wired yet");
    return 1;
}
