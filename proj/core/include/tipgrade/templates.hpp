#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace tipgrade {

/// Named prompt template texts with {slot} markers. The built-in set is
/// embedded at build time from core/assets/templates; a directory of
/// like-named .txt files can override it for experiments.
class TemplateSet {
public:
    /// Templates compiled into the library.
    static const TemplateSet& builtin();

    /// Loads every *.txt file in a directory; the filename stem is the
    /// template name. Throws StoreError on unreadable paths.
    static TemplateSet load_directory(const std::filesystem::path& dir);

    /// Throws ConfigError for unknown names.
    const std::string& text(const std::string& name) const;

    bool contains(const std::string& name) const;

    /// name -> sha256 hex of the template bytes, for run manifests.
    std::map<std::string, std::string> digests() const;

private:
    std::map<std::string, std::string> texts_;
};

} // namespace tipgrade
