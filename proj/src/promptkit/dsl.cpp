#include "tidybot/promptkit/dsl.hpp"

#include <cctype>

namespace tidybot::dsl {

namespace {

class Scanner {
public:
    Scanner(std::string_view text, std::size_t line_no) : text_(text), line_no_(line_no) {}

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }
    [[nodiscard]] bool at_end() const noexcept { return pos_ >= text_.size(); }
    [[nodiscard]] char peek() const noexcept { return at_end() ? '\0' : text_[pos_]; }

    bool accept(char c) {
        if (peek() != c) return false;
        ++pos_;
        return true;
    }
    void expect(char c, std::string_view what) {
        if (!accept(c)) fail("expected " + std::string(what));
    }

    std::string ident() {
        const auto start = pos_;
        if (at_end() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) return {};
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string string_literal() {
        expect('"', "'\"' opening a string");
        const auto start = pos_;
        while (!at_end() && peek() != '"') ++pos_;
        if (at_end()) fail("unterminated string literal");
        std::string value(trim(text_.substr(start, pos_ - start)));
        ++pos_;
        if (value.empty()) fail("empty string literal");
        return value;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw DslSyntaxError(what + " at column " + std::to_string(pos_ + 1), line_no_);
    }

private:
    std::string_view text_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

std::vector<std::string> call_args(Scanner& sc) {
    std::vector<std::string> args;
    sc.skip_ws();
    sc.expect('(', "'('");
    sc.skip_ws();
    args.push_back(sc.string_literal());
    for (;;) {
        sc.skip_ws();
        if (sc.accept(')')) break;
        sc.expect(',', "',' or ')'");
        sc.skip_ws();
        args.push_back(sc.string_literal());
    }
    sc.skip_ws();
    if (!sc.at_end()) sc.fail("trailing characters after call");
    return args;
}

std::vector<std::string> list_items(Scanner& sc) {
    std::vector<std::string> items;
    sc.skip_ws();
    sc.expect('[', "'['");
    sc.skip_ws();
    if (!sc.accept(']')) {
        for (;;) {
            sc.skip_ws();
            if (sc.accept(']')) break;  // trailing comma
            items.push_back(sc.string_literal());
            sc.skip_ws();
            if (sc.accept(']')) break;
            sc.expect(',', "',' or ']'");
        }
    }
    sc.skip_ws();
    if (!sc.at_end()) sc.fail("trailing characters after list");
    return items;
}

} // namespace

Statement parse_line(std::string_view raw, std::size_t line_no) {
    const auto line = trim(raw);
    if (line.empty()) return Other{};

    constexpr std::string_view summary_marker = "# Summary:";
    if (line.starts_with(summary_marker)) return SummaryComment{std::string(trim(line.substr(summary_marker.size())))};

    Scanner sc(line, line_no);
    if (line.starts_with("pick_and_")) {
        auto id = sc.ident();
        auto args = call_args(sc);
        if (id == "pick_and_place" && args.size() == 2) return PickAndPlace2{args[0], args[1]};
        if (id == "pick_and_place" && args.size() == 1) return PickAndPlace1{args[0]};
        if (id == "pick_and_toss" && args.size() == 1) return PickAndToss1{args[0]};
        return UnknownCall{std::move(id), std::move(args)};
    }

    auto id = sc.ident();
    if (id == "objects" || id == "receptacles") {
        sc.skip_ws();
        if (!sc.accept('=')) return Other{};
        auto items = list_items(sc);
        if (id == "objects") return ObjectsList{std::move(items)};
        return ReceptaclesList{std::move(items)};
    }
    return Other{};
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto nl = text.find('\n', start);
        auto piece = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!piece.empty() && piece.back() == '\r') piece.remove_suffix(1);
        out.push_back(piece);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

std::string render_list(std::string_view ident, const std::vector<std::string>& names) {
    std::string out(ident);
    out += " = [";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += '"';
        out += names[i];
        out += '"';
    }
    out += ']';
    return out;
}

std::string render_pick_and_place(const ObjectName& object, const ReceptacleName& receptacle) {
    return "pick_and_place(\"" + object.str() + "\", \"" + receptacle.str() + "\")";
}

std::string render_choice(const PrimitiveChoice& choice) {
    return std::string(choice.primitive == Primitive::Place ? "pick_and_place" : "pick_and_toss") + "(\"" +
           choice.object.str() + "\")";
}

std::string render_summary(std::string_view text) { return "# Summary: " + std::string(text); }

} // namespace tidybot::dsl
