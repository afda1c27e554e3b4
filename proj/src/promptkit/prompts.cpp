#include "tidybot/promptkit/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tidybot/promptkit/dsl.hpp"
#include "tidybot_incontext.hpp"

namespace tidybot {

std::string_view to_string(PromptKind k) noexcept {
    switch (k) {
    case PromptKind::ReceptacleSummarization: return "receptacle_summarization";
    case PromptKind::ReceptacleSelection: return "receptacle_selection";
    case PromptKind::PrimitiveSummarization: return "primitive_summarization";
    case PromptKind::PrimitiveSelection: return "primitive_selection";
    case PromptKind::CategoryExtraction: return "category_extraction";
    case PromptKind::ReceptacleSelectionReal: return "receptacle_selection_real";
    case PromptKind::PrimitiveSelectionReal: return "primitive_selection_real";
    case PromptKind::ExamplesOnly: return "examples_only";
    case PromptKind::Commonsense: return "commonsense";
    }
    return "unknown";
}

Summary::Summary(std::string text, std::optional<std::vector<ObjectName>> categories)
    : text_(trim(text)), categories_(std::move(categories)) {
    if (text_.empty()) throw EmptySummary("summary text is empty");
    if (text_.find_first_of("\r\n") != std::string::npos)
        throw InvalidArgument("summary text must be a single line");
    if (categories_) {
        if (categories_->empty()) throw InvalidArgument("summary category list is empty");
        std::set<ObjectName> uniq(categories_->begin(), categories_->end());
        if (uniq.size() != categories_->size()) throw DuplicateName("summary category list has duplicates");
    }
}

Summary Summary::with_categories(std::vector<ObjectName> categories) const {
    return Summary(text_, std::move(categories));
}

namespace prompts {

namespace {

constexpr std::string_view kBlockSeparator = "\n\n";
constexpr std::string_view kCommonsenseHeader = "# Put objects into their appropriate receptacles.";

void require_nonempty(bool nonempty, const char* what) {
    if (!nonempty) throw InvalidArgument(std::string(what) + " must not be empty");
}

template <typename NameT>
void require_member(const std::vector<NameT>& pool, const NameT& name, const char* what) {
    if (std::find(pool.begin(), pool.end(), name) == pool.end())
        throw InvalidArgument(std::string(what) + " '" + name.str() + "' is not in the listed " + what + "s");
}

std::string with_context(PromptKind kind, std::string test_block) {
    const auto ctx = in_context_block(kind);
    if (ctx.empty()) return test_block;
    std::string out(ctx);
    out += kBlockSeparator;
    out += test_block;
    return out;
}

std::string selection_block(const Summary& summary, const std::vector<std::string>& objects,
                            const std::vector<ReceptacleName>& receptacles, const ObjectName& first) {
    std::string block = dsl::render_summary(summary.text()) + "\n";
    block += dsl::render_list("objects", objects) + "\n";
    block += dsl::render_list("receptacles", dsl::names_of(receptacles)) + "\n";
    block += partial_call(first);
    return block;
}

std::string primitive_selection_block(const Summary& summary, const std::vector<ObjectName>& objects) {
    return dsl::render_summary(summary.text()) + "\n" + dsl::render_list("objects", dsl::names_of(objects)) + "\n";
}

} // namespace

std::string_view in_context_block(PromptKind kind) noexcept {
    switch (kind) {
    case PromptKind::ReceptacleSummarization: return incontext::receptacle_summarization;
    case PromptKind::ReceptacleSelection:
    case PromptKind::ReceptacleSelectionReal: return incontext::receptacle_selection;
    case PromptKind::PrimitiveSummarization: return incontext::primitive_summarization;
    case PromptKind::PrimitiveSelection:
    case PromptKind::PrimitiveSelectionReal: return incontext::primitive_selection;
    case PromptKind::CategoryExtraction: return incontext::category_extraction;
    case PromptKind::ExamplesOnly:
    case PromptKind::Commonsense: return {};
    }
    return {};
}

std::string partial_call(const ObjectName& first_object) { return "pick_and_place(\"" + first_object.str() + "\","; }

PromptText build_receptacle_summarization_prompt(const std::vector<ObjectName>& objects,
                                                 const std::vector<ReceptacleName>& receptacles,
                                                 const std::vector<Placement>& seen) {
    require_nonempty(!seen.empty(), "seen placements");
    for (const auto& p : seen) {
        require_member(objects, p.object, "object");
        require_member(receptacles, p.receptacle, "receptacle");
    }
    std::string block = dsl::render_list("objects", dsl::names_of(objects)) + "\n";
    block += dsl::render_list("receptacles", dsl::names_of(receptacles)) + "\n";
    for (const auto& p : seen) block += dsl::render_pick_and_place(p.object, p.receptacle) + "\n";
    block += "# Summary:";
    return {with_context(PromptKind::ReceptacleSummarization, std::move(block)), PromptKind::ReceptacleSummarization};
}

PromptText build_receptacle_selection_prompt(const Summary& summary, const std::vector<ObjectName>& objects,
                                             const std::vector<ReceptacleName>& receptacles) {
    require_nonempty(!objects.empty(), "objects");
    require_nonempty(!receptacles.empty(), "receptacles");
    return {with_context(PromptKind::ReceptacleSelection,
                         selection_block(summary, dsl::names_of(objects), receptacles, objects.front())),
            PromptKind::ReceptacleSelection};
}

PromptText build_primitive_summarization_prompt(const std::vector<ObjectName>& objects,
                                                const std::vector<PrimitiveChoice>& choices) {
    require_nonempty(!choices.empty(), "primitive choices");
    for (const auto& c : choices) require_member(objects, c.object, "object");
    std::string block = dsl::render_list("objects", dsl::names_of(objects)) + "\n";
    for (const auto& c : choices) block += dsl::render_choice(c) + "\n";
    block += "# Summary:";
    return {with_context(PromptKind::PrimitiveSummarization, std::move(block)), PromptKind::PrimitiveSummarization};
}

PromptText build_primitive_selection_prompt(const Summary& summary, const std::vector<ObjectName>& objects) {
    require_nonempty(!objects.empty(), "objects");
    return {with_context(PromptKind::PrimitiveSelection, primitive_selection_block(summary, objects)),
            PromptKind::PrimitiveSelection};
}

PromptText build_category_extraction_prompt(const Summary& summary) {
    std::string block = dsl::render_summary(summary.text()) + "\n";
    block += kObjectListPrefix;
    return {with_context(PromptKind::CategoryExtraction, std::move(block)), PromptKind::CategoryExtraction};
}

std::pair<PromptText, PromptText> build_realworld_selection_prompts(const Summary& receptacle_summary,
                                                                    const Summary& primitive_summary,
                                                                    const std::vector<ObjectName>& categories,
                                                                    const std::vector<ReceptacleName>& receptacles) {
    require_nonempty(!categories.empty(), "categories");
    require_nonempty(!receptacles.empty(), "receptacles");
    PromptText rec{with_context(PromptKind::ReceptacleSelectionReal,
                                selection_block(receptacle_summary, dsl::names_of(categories), receptacles,
                                                categories.front())),
                   PromptKind::ReceptacleSelectionReal};
    PromptText prim{with_context(PromptKind::PrimitiveSelectionReal,
                                 primitive_selection_block(primitive_summary, categories)),
                    PromptKind::PrimitiveSelectionReal};
    return {std::move(rec), std::move(prim)};
}

PromptText build_examples_only_prompt(const std::vector<Placement>& seen, const std::vector<ObjectName>& targets,
                                      const std::vector<ReceptacleName>& receptacles) {
    require_nonempty(!seen.empty(), "seen placements");
    require_nonempty(!targets.empty(), "target objects");
    require_nonempty(!receptacles.empty(), "receptacles");
    std::vector<std::string> seen_objects;
    for (const auto& p : seen) {
        require_member(receptacles, p.receptacle, "receptacle");
        seen_objects.push_back(p.object.str());
    }
    const auto rec_line = dsl::render_list("receptacles", dsl::names_of(receptacles)) + "\n";
    std::string text = dsl::render_list("objects", seen_objects) + "\n" + rec_line;
    for (const auto& p : seen) text += dsl::render_pick_and_place(p.object, p.receptacle) + "\n";
    text += "\n";
    text += dsl::render_list("objects", dsl::names_of(targets)) + "\n" + rec_line;
    text += partial_call(targets.front());
    return {std::move(text), PromptKind::ExamplesOnly};
}

PromptText build_commonsense_prompt(const std::vector<ObjectName>& objects,
                                    const std::vector<ReceptacleName>& receptacles) {
    require_nonempty(!objects.empty(), "objects");
    require_nonempty(!receptacles.empty(), "receptacles");
    std::string text(kCommonsenseHeader);
    text += "\n";
    text += dsl::render_list("objects", dsl::names_of(objects)) + "\n";
    text += dsl::render_list("receptacles", dsl::names_of(receptacles)) + "\n";
    text += partial_call(objects.front());
    return {std::move(text), PromptKind::Commonsense};
}

} // namespace prompts

namespace parse {

Summary parse_summary(std::string_view completion) {
    const auto nl = completion.find('\n');
    const auto first = trim(completion.substr(0, nl));
    if (first.empty()) throw EmptySummary("completion has no summary text on its first line");
    return Summary(std::string(first));
}

Parsed<Placement> parse_placements(const ObjectName& first_object, std::string_view completion) {
    const auto stitched = prompts::partial_call(first_object) + std::string(completion);
    const auto lines = dsl::split_lines(stitched);
    Parsed<Placement> out;

    dsl::Statement head;
    try {
        head = dsl::parse_line(lines.front(), 1);
    } catch (const DslSyntaxError& e) {
        throw StitchError(std::string("completion does not finish the partial call: ") + e.what());
    }
    const auto* first = std::get_if<dsl::PickAndPlace2>(&head);
    if (!first) throw StitchError("completion does not finish the partial call as a two-argument pick_and_place");

    auto take = [&](const dsl::PickAndPlace2& c, std::size_t line_no) {
        try {
            out.items.push_back({ObjectName(c.object), ReceptacleName(c.receptacle)});
        } catch (const InvalidName& e) {
            throw DslSyntaxError(e.what(), line_no);
        }
    };
    take(*first, 1);

    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line_no = i + 1;
        auto st = dsl::parse_line(lines[i], line_no);
        if (const auto* c = std::get_if<dsl::PickAndPlace2>(&st)) {
            take(*c, line_no);
            continue;
        }
        if (!trim(lines[i]).empty() || i + 1 < lines.size())
            out.warnings.push_back("stopped at line " + std::to_string(line_no) + ": '" + std::string(trim(lines[i])) +
                                   "'");
        break;
    }
    return out;
}

Parsed<PrimitiveChoice> parse_primitive_choices(std::string_view completion) {
    const auto lines = dsl::split_lines(completion);
    Parsed<PrimitiveChoice> out;
    std::size_t i = 0;
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    for (; i < lines.size(); ++i) {
        const auto line_no = i + 1;
        auto st = dsl::parse_line(lines[i], line_no);
        std::optional<PrimitiveChoice> choice;
        try {
            if (const auto* p = std::get_if<dsl::PickAndPlace1>(&st))
                choice = PrimitiveChoice{ObjectName(p->object), Primitive::Place};
            else if (const auto* t = std::get_if<dsl::PickAndToss1>(&st))
                choice = PrimitiveChoice{ObjectName(t->object), Primitive::Toss};
        } catch (const InvalidName& e) {
            throw DslSyntaxError(e.what(), line_no);
        }
        if (!choice) {
            if (!trim(lines[i]).empty())
                out.warnings.push_back("stopped at line " + std::to_string(line_no) + ": '" +
                                       std::string(trim(lines[i])) + "'");
            break;
        }
        out.items.push_back(std::move(*choice));
    }
    return out;
}

std::vector<ObjectName> parse_object_list(std::string_view prefix, std::string_view completion) {
    const std::string text = std::string(prefix) + std::string(completion);
    std::size_t pos = 0;
    auto line_at = [&](std::size_t p) {
        return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(
                                                                                       std::min(p, text.size())),
                                                       '\n'));
    };
    auto fail = [&](const std::string& what) -> void { throw DslSyntaxError(what, line_at(pos)); };
    auto skip_ws = [&] {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' || text[pos] == '\r'))
            ++pos;
    };

    skip_ws();
    const auto ident_start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
    if (pos == ident_start) fail("expected an identifier");
    skip_ws();
    if (pos >= text.size() || text[pos] != '=') fail("expected '='");
    ++pos;
    skip_ws();
    if (pos >= text.size() || text[pos] != '[') fail("expected '['");
    ++pos;

    std::vector<ObjectName> names;
    std::set<ObjectName> seen;
    for (;;) {
        skip_ws();
        if (pos >= text.size()) fail("list is missing its closing ']'");
        if (text[pos] == ']') break;
        if (text[pos] != '"') fail("expected a string literal");
        const auto start = ++pos;
        while (pos < text.size() && text[pos] != '"' && text[pos] != '\n') ++pos;
        if (pos >= text.size() || text[pos] != '"') fail("unterminated string literal");
        std::string value(trim(std::string_view(text).substr(start, pos - start)));
        ++pos;
        if (value.empty()) fail("empty string literal");
        ObjectName name = [&] {
            try {
                return ObjectName(value);
            } catch (const InvalidName& e) {
                throw DslSyntaxError(e.what(), line_at(pos));
            }
        }();
        if (!seen.insert(name).second) throw DuplicateName("category '" + value + "' is listed twice");
        names.push_back(std::move(name));
        skip_ws();
        if (pos >= text.size()) fail("list is missing its closing ']'");
        if (text[pos] == ']') break;
        if (text[pos] != ',') fail("expected ',' or ']'");
        ++pos;
    }
    if (names.empty()) fail("empty list");
    return names;
}

} // namespace parse

} // namespace tidybot
