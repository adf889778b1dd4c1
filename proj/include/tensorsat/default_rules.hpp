#pragma once

#include <string_view>

namespace tensorsat {

/// Text of the shipped rule file (rules/default.rules).
std::string_view default_rules_text();

}  // namespace tensorsat
