#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "adafgl/log.hpp"

int main(int argc, char** argv) {
    adafgl::log::set_quiet(true);
    doctest::Context context(argc, argv);
    return context.run();
}
