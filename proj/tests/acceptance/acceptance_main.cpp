#include "cpda/pipeline.hpp"
int main() { return 0; }
