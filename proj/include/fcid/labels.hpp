#pragma once

#include <string_view>

namespace fcid {

/// Fake colorized images are the positive class.
enum class Label { natural, fake };

inline constexpr int sign_of(Label l) noexcept { return l == Label::fake ? +1 : -1; }

std::string_view label_name(Label l) noexcept;
Label parse_label(std::string_view text);

}  // namespace fcid
