#pragma once

#include <string>

#include "ssmt/io.hpp"

namespace test {

inline ssmt::Json config_json(const std::string& name) {
    return ssmt::read_json_file(std::string(SSMT_SOURCE_DIR) + "/configs/" + name);
}

inline ssmt::CharacteristicQuadruplet canonical() { return ssmt::quadruplet_from_json(config_json("canonical.json").at("quadruplet")); }
inline ssmt::CharacteristicQuadruplet bv() { return ssmt::quadruplet_from_json(config_json("bv.json").at("quadruplet")); }

inline ssmt::TreeOptions options(ssmt::Mode m) {
    ssmt::TreeOptions o;
    o.mode = m;
    return o;
}

}  // namespace test
