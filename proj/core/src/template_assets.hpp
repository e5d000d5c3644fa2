#pragma once

#include <cstddef>

namespace tipgrade::detail {

// Filled in by the build-time embedding step (see cmake/embed_assets.cmake).
struct EmbeddedTemplate {
    const char* name;
    const unsigned char* data;
    std::size_t size;
};

extern const EmbeddedTemplate kEmbeddedTemplates[];
extern const std::size_t kEmbeddedTemplateCount;

} // namespace tipgrade::detail
