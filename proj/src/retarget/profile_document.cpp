#include "stage/retarget/profile_document.hpp"

#include "stage/core/kvdoc.hpp"

namespace stage::retarget {

AliasTable aliases_from_section(const KvSection* section) {
    AliasTable out;
    if (!section) return out;
    for (const KvEntry& e : section->entries) {
        if (e.value.empty()) throw KvError(0, "alias '" + e.key + "' has no target");
        out.emplace_back(e.key, e.value);
    }
    return out;
}

ProfileDocument parse_profile_document(std::string_view text) {
    const KvDocument doc = parse_kv(text);
    const KvSection* profile = doc.section("profile");
    if (!profile) throw KvError(0, "missing [profile] section");
    if (auto v = profile->get("version"); v && *v != "1") {
        throw KvError(0, "unsupported profile version '" + std::string(*v) + "'");
    }
    ProfileDocument out;
    const auto source = profile->get("source");
    const auto dest = profile->get("destination");
    if (!source || source->empty()) throw KvError(0, "[profile] needs a source rig");
    if (!dest || dest->empty()) throw KvError(0, "[profile] needs a destination rig");
    out.source = std::string(*source);
    out.destination = std::string(*dest);
    out.aliases = aliases_from_section(doc.section("aliases"));
    return out;
}

}  // namespace stage::retarget
