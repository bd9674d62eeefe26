#include <cstdio>

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    std::puts("waternav: cli not wired yet");
    return 1;
}
