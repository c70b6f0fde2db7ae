// placeholder main, replaced by the CLI implementation
#include "gwi/train.hpp"
int main() { return 0; }
