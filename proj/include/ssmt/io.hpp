#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "ssmt/tree.hpp"

namespace ssmt {

using Json = nlohmann::json;

Json to_json(const LevyCharacteristics& c);
LevyCharacteristics characteristics_from_json(const Json& j);

Json to_json(const CharacteristicQuadruplet& q);
CharacteristicQuadruplet quadruplet_from_json(const Json& j);

// Flat node list; decorations as (age, value) polylines.
Json tree_to_json(const DecoratedTree& tree, double resolution);
// Decorations come back as polylines without a Levy source.
DecoratedTree tree_from_json(const Json& j);

void write_potential_csv(std::ostream& os, const PotentialTable& t);

Json read_json_file(const std::filesystem::path& p);
void write_json_file(const std::filesystem::path& p, const Json& j);
void write_text_file(const std::filesystem::path& p, const std::string& text);

}  // namespace ssmt
