#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tidybot/core/types.hpp"

// The Pythonic statement subset spoken between prompts and completions:
//
//   line      := ws call ws | ws list ws | ws "# Summary:" text
//   call      := ident ws "(" ws string (ws "," ws string)* ws ")"
//   list      := ident ws "=" ws "[" ws (string (ws "," ws string)* ws ","?)? ws "]"
//   string    := '"' [^"\n]* '"'        (no escapes; names never hold quotes)
//
// Only lines starting with `pick_and_` are held to the call grammar; any
// other line is simply "not a statement".
namespace tidybot::dsl {

struct PickAndPlace2 {
    std::string object;
    std::string receptacle;
};
struct PickAndPlace1 {
    std::string object;
};
struct PickAndToss1 {
    std::string object;
};
struct ObjectsList {
    std::vector<std::string> names;
};
struct ReceptaclesList {
    std::vector<std::string> names;
};
struct SummaryComment {
    std::string text;
};
/// A grammatical `pick_and_*` call that is not one of the known forms
/// (e.g. `pick_and_drop("x")`, or `pick_and_place` with three arguments).
struct UnknownCall {
    std::string ident;
    std::vector<std::string> args;
};
/// Blank line, prose, or any other non-statement.
struct Other {};

using Statement = std::variant<PickAndPlace2, PickAndPlace1, PickAndToss1, ObjectsList, ReceptaclesList,
                               SummaryComment, UnknownCall, Other>;

/// Classifies one line. Throws DslSyntaxError (tagged with `line_no`) when a
/// `pick_and_` line or an `objects`/`receptacles` assignment is malformed.
Statement parse_line(std::string_view line, std::size_t line_no);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view text);

// Rendering. Inputs are validated names, so output always re-parses.
std::string render_list(std::string_view ident, const std::vector<std::string>& names);
std::string render_pick_and_place(const ObjectName& object, const ReceptacleName& receptacle);
std::string render_choice(const PrimitiveChoice& choice);
std::string render_summary(std::string_view text);

template <typename T>
std::vector<std::string> names_of(const std::vector<T>& names) {
    std::vector<std::string> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(n.str());
    return out;
}

} // namespace tidybot::dsl
