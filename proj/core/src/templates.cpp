#include "tipgrade/templates.hpp"

#include "tipgrade/digest.hpp"
#include "tipgrade/errors.hpp"
#include "template_assets.hpp"

#include <fstream>
#include <sstream>

namespace tipgrade {

const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet instance = [] {
        TemplateSet set;
        for (std::size_t i = 0; i < detail::kEmbeddedTemplateCount; ++i) {
            const auto& t = detail::kEmbeddedTemplates[i];
            set.texts_.emplace(t.name,
                               std::string(reinterpret_cast<const char*>(t.data), t.size));
        }
        return set;
    }();
    return instance;
}

TemplateSet TemplateSet::load_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw StoreError("template directory not found: " + dir.string());
    }
    TemplateSet set;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") {
            continue;
        }
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) {
            throw StoreError("cannot read template file: " + entry.path().string());
        }
        std::ostringstream body;
        body << in.rdbuf();
        set.texts_.emplace(entry.path().stem().string(), body.str());
    }
    if (set.texts_.empty()) {
        throw StoreError("no .txt templates in directory: " + dir.string());
    }
    return set;
}

const std::string& TemplateSet::text(const std::string& name) const {
    auto it = texts_.find(name);
    if (it == texts_.end()) {
        throw ConfigError("unknown template: " + name);
    }
    return it->second;
}

bool TemplateSet::contains(const std::string& name) const {
    return texts_.find(name) != texts_.end();
}

std::map<std::string, std::string> TemplateSet::digests() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, text] : texts_) {
        out.emplace(name, sha256_hex(text));
    }
    return out;
}

} // namespace tipgrade
