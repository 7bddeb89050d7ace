#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace featforge::feature {

enum class Directive { ifdef, ifndef };

struct FeatureRef {
    std::string name; // identifier, or compound form "A & B"
    std::string file;
    int line = 0;
    Directive directive = Directive::ifdef;
    std::string expression; // raw operand text, trimmed
};

enum class ScanMode { snapshot, diff };

struct Diagnostics {
    long files_scanned = 0;
    long refs_found = 0;
    long header_macros_filtered = 0;
    long unbalanced_files = 0;
    long unparseable_lines = 0;

    void merge(const Diagnostics& other);
    std::string to_json() const;
};

// Pattern-matches #ifdef/#ifndef lines. In diff mode the text is a unified
// diff; changed lines and their context are scanned and diff metadata is
// skipped. Directives inside comments are ignored.
std::vector<FeatureRef> extract_refs(const std::string& text, ScanMode mode,
                                     Diagnostics* diag = nullptr);

// Include-guard style names: suffix "_h"/"_h_" (case-insensitive) or the
// all-caps guard shape __NAME_H__.
bool is_header_macro(const std::string& name);

// Splits a compound operand like "A & B" into its identifiers; a plain
// feature name yields one element.
std::vector<std::string> constituent_identifiers(const std::string& name);

struct Block {
    enum class Kind { ifdef, ifndef, if_other };
    Kind kind = Kind::if_other;
    std::string feature;    // stored name; empty for if_other blocks
    std::string expression; // raw operand text
    int start_line = 0;     // directive line
    int then_end_line = 0;  // line of #elif/#else/#endif closing the then-branch
    int end_line = 0;       // matching #endif line
    int depth = 0;          // 1 at top level, counting all conditionals
    int parent = -1;        // index into BlockTree::blocks
};

struct BlockTree {
    std::vector<Block> blocks; // in order of opening
};

// Throws UnbalancedConditionals when openers and #endif counts disagree.
BlockTree build_block_tree(const std::string& file_text);

struct FeatureStructure {
    long lofc = 0;  // non-directive, nonblank lines in then-branches
    int ndep = 0;   // max nesting depth of the feature's blocks
    long scat = 0;  // directive references across the snapshots
    long tanga = 0; // distinct co-features in shared directive expressions
};

using StructureProfile = std::map<std::string, FeatureStructure>;

// Profiles the given features over one commit's snapshots (path -> text).
// Unbalanced files are skipped and counted in the diagnostics.
StructureProfile structure_profile(const std::map<std::string, std::string>& snapshots,
                                   const std::set<std::string>& features,
                                   Diagnostics* diag = nullptr);

} // namespace featforge::feature
