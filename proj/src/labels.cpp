#include "fcid/labels.hpp"

#include <string>

#include "fcid/error.hpp"

namespace fcid {

std::string_view label_name(Label l) noexcept { return l == Label::fake ? "fake" : "natural"; }

Label parse_label(std::string_view text) {
    if (text == "natural") return Label::natural;
    if (text == "fake") return Label::fake;
    throw Error("invalid label '" + std::string(text) + "' (expected natural or fake)");
}

}  // namespace fcid
