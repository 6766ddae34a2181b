#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace yamabe {

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kModuleVersions{{
    {"manifold", "1.0.0"},
    {"radial_calculus", "1.0.0"},
    {"functional", "1.0.0"},
    {"subcritical", "1.0.0"},
    {"exhaustion", "1.0.0"},
    {"blowup", "1.0.0"},
    {"cli", "1.0.0"},
}};

}  // namespace yamabe
