// Writes the retail data set and prints one "source<TAB>path<TAB>mtime" line per delivery.
#include <CLI11.hpp>

#include <iostream>

#include "retail_fixture.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hubstar-fixture"};
    std::string dir;
    std::uint32_t seed = hubstar::fixture::default_seed;
    app.add_option("dir", dir, "output directory")->required();
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);
    try {
        auto ds = hubstar::fixture::generate(dir, seed);
        for (const auto& d : ds.deliveries) {
            std::cout << d.source << '\t' << d.path.string() << '\t' << d.mtime.iso8601() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
