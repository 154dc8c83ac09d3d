// Regenerates the frozen regression fixtures under tests/fixtures.
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "csla/bits.hpp"
#include "csla/centers.hpp"
#include "csla/encoder.hpp"
#include "csla/generator.hpp"

using namespace csla;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <fixture-dir>\n";
        return 2;
    }
    const std::string dir = argv[1];
    ToyGenerator gen;
    ToyEncoder enc;

    nlohmann::json zero{{"config", "toy encoder, all-zero 32x32 image"},
                        {"embedding", floats_to_bits(enc.encode_image(Image(32, 32)).values)}};
    std::ofstream(dir + "/zero_image_embedding.json") << zero.dump(1) << "\n";

    const CenterSet c = compute_average_center(gen, enc, 100000);
    nlohmann::json s_base = nlohmann::json::array();
    for (const auto& l : c.s_base.layers) s_base.push_back(floats_to_bits(l));
    nlohmann::json centers{{"config", "toy generator and encoder, 100000 samples"},
                           {"f_base", floats_to_bits(c.f_base.values)},
                           {"w_base", floats_to_bits(c.w_base.values)},
                           {"s_base", s_base}};
    std::ofstream(dir + "/average_center_100k.json") << centers.dump(1) << "\n";
    std::cout << "wrote fixtures to " << dir << "\n";
    return 0;
}
