#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csla/bits.hpp"
#include "csla/centers.hpp"

namespace csla::fixtures {

inline nlohmann::json load(const std::string& name) {
    std::ifstream in(std::string(CSLA_FIXTURE_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    return nlohmann::json::parse(in);
}

inline std::vector<float> zero_image_embedding() {
    return floats_from_bits(load("zero_image_embedding.json").at("embedding").get<std::vector<std::string>>());
}

inline CenterSet average_center_100k() {
    const auto j = load("average_center_100k.json");
    CenterSet c;
    c.f_base = Embedding(floats_from_bits(j.at("f_base").get<std::vector<std::string>>()));
    c.w_base = WLatent(floats_from_bits(j.at("w_base").get<std::vector<std::string>>()));
    for (const auto& l : j.at("s_base")) c.s_base.layers.push_back(floats_from_bits(l.get<std::vector<std::string>>()));
    return c;
}

} // namespace csla::fixtures
