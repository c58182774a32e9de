#pragma once

#include <string>
#include <string_view>

#include "stage/core/kvdoc.hpp"
#include "stage/retarget/retarget.hpp"

namespace stage::retarget {

// Human-editable retarget profile:
//
//   [profile]
//   version = 1
//   source = builtin:neutral          # rig reference: builtin:neutral or a BVH path
//   destination = rigs/avatar40.bvh
//
//   [aliases]
//   LeftArm = LeftUpperArm            # source name = destination name
struct ProfileDocument {
    std::string source;
    std::string destination;
    AliasTable aliases;
};

// Throws KvError on malformed documents.
ProfileDocument parse_profile_document(std::string_view text);

// Alias pairs from an [aliases] section.
AliasTable aliases_from_section(const KvSection* section);

}  // namespace stage::retarget
