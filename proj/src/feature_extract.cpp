#include <featforge/feature_extract.hpp>

#include <featforge/errors.hpp>

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

namespace featforge::feature {

namespace {

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            if (start < text.size())
                lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

enum class DirectiveWord { ifdef, ifndef, if_, elif, else_, endif, other, none };

struct LineInfo {
    DirectiveWord word = DirectiveWord::none;
    std::string operand; // raw text after the keyword, comments stripped
};

// Scans one line: updates the cross-line block-comment state and reports a
// directive when '#' is the first content outside comments.
LineInfo scan_line(const std::string& line, bool& in_block_comment) {
    LineInfo info;
    size_t i = 0;
    const size_t n = line.size();

    auto skip_comments_and_space = [&]() {
        while (i < n) {
            if (in_block_comment) {
                size_t close = line.find("*/", i);
                if (close == std::string::npos) {
                    i = n;
                    return;
                }
                in_block_comment = false;
                i = close + 2;
            } else if (std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
            } else if (line.compare(i, 2, "/*") == 0) {
                in_block_comment = true;
                i += 2;
            } else if (line.compare(i, 2, "//") == 0) {
                i = n;
                return;
            } else {
                return;
            }
        }
    };

    // Consumes the remainder to keep the comment state correct; strings are
    // respected so "/*" inside a literal does not open a comment.
    auto consume_rest = [&]() {
        bool in_string = false;
        bool in_char = false;
        while (i < n) {
            if (in_block_comment) {
                size_t close = line.find("*/", i);
                if (close == std::string::npos) {
                    i = n;
                    break;
                }
                in_block_comment = false;
                i = close + 2;
            } else if (in_string || in_char) {
                if (line[i] == '\\')
                    i += 2;
                else if (in_string && line[i] == '"') {
                    in_string = false;
                    ++i;
                } else if (in_char && line[i] == '\'') {
                    in_char = false;
                    ++i;
                } else {
                    ++i;
                }
            } else if (line.compare(i, 2, "//") == 0) {
                i = n;
            } else if (line.compare(i, 2, "/*") == 0) {
                in_block_comment = true;
                i += 2;
            } else if (line[i] == '"') {
                in_string = true;
                ++i;
            } else if (line[i] == '\'') {
                in_char = true;
                ++i;
            } else {
                ++i;
            }
        }
    };

    skip_comments_and_space();
    if (i >= n || line[i] != '#') {
        consume_rest();
        return info;
    }
    ++i;
    skip_comments_and_space();
    size_t kw_start = i;
    while (i < n && std::isalpha(static_cast<unsigned char>(line[i])))
        ++i;
    std::string kw = line.substr(kw_start, i - kw_start);
    if (kw == "ifdef")
        info.word = DirectiveWord::ifdef;
    else if (kw == "ifndef")
        info.word = DirectiveWord::ifndef;
    else if (kw == "if")
        info.word = DirectiveWord::if_;
    else if (kw == "elif")
        info.word = DirectiveWord::elif;
    else if (kw == "else")
        info.word = DirectiveWord::else_;
    else if (kw == "endif")
        info.word = DirectiveWord::endif;
    else
        info.word = DirectiveWord::other;

    // Operand ends where a comment starts.
    size_t op_start = i;
    size_t op_end = op_start;
    {
        bool stop = false;
        while (i < n && !stop) {
            if (line.compare(i, 2, "//") == 0 || line.compare(i, 2, "/*") == 0) {
                stop = true;
            } else {
                ++i;
                op_end = i;
            }
        }
    }
    info.operand = trim(line.substr(op_start, op_end - op_start));
    consume_rest();
    return info;
}

std::vector<std::string> identifiers_of(const std::string& text) {
    std::vector<std::string> ids;
    size_t i = 0;
    while (i < text.size()) {
        if (ident_start(text[i])) {
            size_t start = i;
            while (i < text.size() && ident_char(text[i]))
                ++i;
            std::string id = text.substr(start, i - start);
            if (std::find(ids.begin(), ids.end(), id) == ids.end())
                ids.push_back(std::move(id));
        } else {
            ++i;
        }
    }
    return ids;
}

std::string stored_name(const std::vector<std::string>& ids) {
    std::string name;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i)
            name += " & ";
        name += ids[i];
    }
    return name;
}

} // namespace

void Diagnostics::merge(const Diagnostics& other) {
    files_scanned += other.files_scanned;
    refs_found += other.refs_found;
    header_macros_filtered += other.header_macros_filtered;
    unbalanced_files += other.unbalanced_files;
    unparseable_lines += other.unparseable_lines;
}

std::string Diagnostics::to_json() const {
    nlohmann::json j{{"files_scanned", files_scanned},
                     {"refs_found", refs_found},
                     {"header_macros_filtered", header_macros_filtered},
                     {"unbalanced_files", unbalanced_files},
                     {"unparseable_lines", unparseable_lines}};
    return j.dump();
}

std::vector<std::string> constituent_identifiers(const std::string& name) {
    return identifiers_of(name);
}

std::vector<FeatureRef> extract_refs(const std::string& text, ScanMode mode,
                                     Diagnostics* diag) {
    std::vector<FeatureRef> refs;
    Diagnostics local;

    auto handle = [&](const std::string& line, int line_number,
                      bool& block_comment_state) {
        LineInfo info = scan_line(line, block_comment_state);
        if (info.word != DirectiveWord::ifdef && info.word != DirectiveWord::ifndef)
            return;
        auto ids = identifiers_of(info.operand);
        if (ids.empty()) {
            ++local.unparseable_lines;
            return;
        }
        FeatureRef ref;
        ref.name = stored_name(ids);
        ref.line = line_number;
        ref.directive = info.word == DirectiveWord::ifdef ? Directive::ifdef
                                                          : Directive::ifndef;
        ref.expression = info.operand;
        refs.push_back(std::move(ref));
        ++local.refs_found;
    };

    if (mode == ScanMode::snapshot) {
        bool in_comment = false;
        int line_no = 0;
        for (const auto& line : split_lines(text)) {
            ++line_no;
            handle(line, line_no, in_comment);
        }
    } else {
        bool in_hunk = false;
        int old_line = 0;
        int new_line = 0;
        for (const auto& line : split_lines(text)) {
            if (line.rfind("@@", 0) == 0) {
                size_t minus = line.find('-');
                size_t plus = line.find('+', minus);
                if (minus != std::string::npos && plus != std::string::npos) {
                    old_line = static_cast<int>(
                        std::strtol(line.c_str() + minus + 1, nullptr, 10));
                    new_line = static_cast<int>(
                        std::strtol(line.c_str() + plus + 1, nullptr, 10));
                    in_hunk = true;
                }
                continue;
            }
            if (!in_hunk)
                continue;
            if (line.empty()) {
                ++old_line;
                ++new_line;
                continue;
            }
            bool fresh_state = false; // per-line comment detection only
            switch (line[0]) {
            case '+':
                handle(line.substr(1), new_line, fresh_state);
                ++new_line;
                break;
            case '-':
                handle(line.substr(1), old_line, fresh_state);
                ++old_line;
                break;
            case ' ':
                handle(line.substr(1), new_line, fresh_state);
                ++old_line;
                ++new_line;
                break;
            case '\\':
                break;
            default:
                in_hunk = false;
                break;
            }
        }
    }

    if (diag)
        diag->merge(local);
    return refs;
}

bool is_header_macro(const std::string& name) {
    // Case-insensitive suffix _h or _h_
    auto ends_with_ci = [&](const std::string& suffix) {
        if (name.size() < suffix.size())
            return false;
        size_t off = name.size() - suffix.size();
        for (size_t i = 0; i < suffix.size(); ++i) {
            char a = static_cast<char>(
                std::tolower(static_cast<unsigned char>(name[off + i])));
            if (a != suffix[i])
                return false;
        }
        return true;
    };
    if (ends_with_ci("_h") || ends_with_ci("_h_"))
        return true;

    // Include-guard shape: ^_{0,2}[A-Z0-9_]+_H_{0,2}$
    size_t i = 0;
    size_t lead = 0;
    while (i < name.size() && name[i] == '_' && lead < 2) {
        ++i;
        ++lead;
    }
    size_t trail = 0;
    size_t end = name.size();
    while (end > i && name[end - 1] == '_' && trail < 2) {
        --end;
        ++trail;
    }
    if (end < i + 3 || name.compare(end - 2, 2, "_H") != 0)
        return false;
    for (size_t k = i; k + 2 < end + 1; ++k) {
        char c = name[k];
        if (!(std::isupper(static_cast<unsigned char>(c)) ||
              std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    }
    return true;
}

BlockTree build_block_tree(const std::string& file_text) {
    BlockTree tree;
    std::vector<int> stack;
    long openers = 0;
    long closers = 0;
    bool broken = false;

    bool in_comment = false;
    int line_no = 0;
    for (const auto& line : split_lines(file_text)) {
        ++line_no;
        LineInfo info = scan_line(line, in_comment);
        switch (info.word) {
        case DirectiveWord::ifdef:
        case DirectiveWord::ifndef:
        case DirectiveWord::if_: {
            ++openers;
            Block block;
            if (info.word == DirectiveWord::if_) {
                block.kind = Block::Kind::if_other;
            } else {
                auto ids = identifiers_of(info.operand);
                if (ids.empty()) {
                    block.kind = Block::Kind::if_other;
                } else {
                    block.kind = info.word == DirectiveWord::ifdef
                                     ? Block::Kind::ifdef
                                     : Block::Kind::ifndef;
                    block.feature = stored_name(ids);
                }
            }
            block.expression = info.operand;
            block.start_line = line_no;
            block.depth = static_cast<int>(stack.size()) + 1;
            block.parent = stack.empty() ? -1 : stack.back();
            stack.push_back(static_cast<int>(tree.blocks.size()));
            tree.blocks.push_back(std::move(block));
            break;
        }
        case DirectiveWord::elif:
        case DirectiveWord::else_:
            if (stack.empty()) {
                broken = true;
            } else {
                Block& top = tree.blocks[static_cast<size_t>(stack.back())];
                if (top.then_end_line == 0)
                    top.then_end_line = line_no;
            }
            break;
        case DirectiveWord::endif:
            ++closers;
            if (stack.empty()) {
                broken = true;
            } else {
                Block& top = tree.blocks[static_cast<size_t>(stack.back())];
                top.end_line = line_no;
                if (top.then_end_line == 0)
                    top.then_end_line = line_no;
                stack.pop_back();
            }
            break;
        default:
            break;
        }
    }
    if (openers != closers || broken || !stack.empty())
        throw UnbalancedConditionals("conditional directives do not balance (" +
                                     std::to_string(openers) + " openers, " +
                                     std::to_string(closers) + " #endif)");
    return tree;
}

StructureProfile structure_profile(const std::map<std::string, std::string>& snapshots,
                                   const std::set<std::string>& features,
                                   Diagnostics* diag) {
    StructureProfile profile;
    for (const auto& f : features)
        profile[f] = FeatureStructure{};

    // identifier -> co-occurring identifiers over all directive expressions
    std::map<std::string, std::set<std::string>> co_ids;

    for (const auto& [path, text] : snapshots) {
        if (diag)
            ++diag->files_scanned;
        BlockTree tree;
        try {
            tree = build_block_tree(text);
        } catch (const UnbalancedConditionals&) {
            if (diag)
                ++diag->unbalanced_files;
            continue;
        }

        auto lines = split_lines(text);
        std::vector<bool> is_directive(lines.size() + 1, false);
        std::vector<bool> is_blank(lines.size() + 1, false);
        {
            bool in_comment = false;
            for (size_t i = 0; i < lines.size(); ++i) {
                bool before = in_comment;
                LineInfo info = scan_line(lines[i], in_comment);
                (void)before;
                is_directive[i + 1] = info.word != DirectiveWord::none;
                is_blank[i + 1] = trim(lines[i]).empty();
            }
        }

        auto refs = extract_refs(text, ScanMode::snapshot, diag);
        for (const auto& ref : refs) {
            auto ids = identifiers_of(ref.expression);
            for (const auto& a : ids)
                for (const auto& b : ids)
                    if (a != b)
                        co_ids[a].insert(b);
            auto it = profile.find(ref.name);
            if (it != profile.end())
                ++it->second.scat;
        }

        for (const auto& block : tree.blocks) {
            if (block.kind == Block::Kind::if_other || block.feature.empty())
                continue;
            auto it = profile.find(block.feature);
            if (it == profile.end())
                continue;
            it->second.ndep = std::max(it->second.ndep, block.depth);
            for (int l = block.start_line + 1; l < block.then_end_line; ++l) {
                if (l >= 1 && l <= static_cast<int>(lines.size()) &&
                    !is_directive[static_cast<size_t>(l)] &&
                    !is_blank[static_cast<size_t>(l)])
                    ++it->second.lofc;
            }
        }
    }

    for (auto& [name, fs] : profile) {
        std::set<std::string> own;
        for (const auto& id : constituent_identifiers(name))
            own.insert(id);
        std::set<std::string> co;
        for (const auto& id : own) {
            auto it = co_ids.find(id);
            if (it == co_ids.end())
                continue;
            for (const auto& other : it->second)
                if (!own.count(other) && !is_header_macro(other))
                    co.insert(other);
        }
        fs.tanga = static_cast<long>(co.size());
    }
    return profile;
}

} // namespace featforge::feature
