// Converts the LINQS citation dump (cora.content, cora.cites) into a graph
// directory readable by load_graph.

#include <iostream>

#include <CLI11.hpp>

#include "adafgl/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Convert a LINQS citation dataset into a graph directory"};
    std::string content;
    std::string cites;
    std::string out;
    app.add_option("content", content, "<name>.content file")->required()->check(CLI::ExistingFile);
    app.add_option("cites", cites, "<name>.cites file")->required()->check(CLI::ExistingFile);
    app.add_option("out", out, "output graph directory")->required();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        const auto g = adafgl::io::convert_linqs(content, cites);
        adafgl::io::save_graph(g, out);
        std::cout << "nodes " << g.num_nodes() << "  features " << g.feature_dim() << "  classes " << g.num_classes()
                  << "  edges " << g.num_edges() << "  dropped " << g.dropped_edges() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
