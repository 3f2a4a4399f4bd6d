#include <cstdio>

int main() {
    std::puts("spikeloom cli placeholder");
    return 0;
}
