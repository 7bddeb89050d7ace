#include <doctest.h>

#include <featforge/errors.hpp>
#include <featforge/feature_extract.hpp>
#include <featforge/metrics.hpp>

#include <json.hpp>

#include <random>

using namespace featforge;
using feature::Directive;
using feature::ScanMode;

TEST_CASE("extract_refs finds ifdef/ifndef in snapshots and skips comments") {
    auto refs = feature::extract_refs("#ifdef FEAT_A\nint x;\n#endif\n",
                                      ScanMode::snapshot);
    REQUIRE(refs.size() == 1);
    CHECK(refs[0].name == "FEAT_A");
    CHECK(refs[0].line == 1);
    CHECK(refs[0].directive == Directive::ifdef);

    CHECK(feature::extract_refs("/* #ifdef FEAT_A */\n", ScanMode::snapshot).empty());
    CHECK(feature::extract_refs("// #ifdef FEAT_A\n", ScanMode::snapshot).empty());
    CHECK(feature::extract_refs("/*\n#ifdef FEAT_A\n*/\n", ScanMode::snapshot).empty());

    SUBCASE("defined() expressions contribute no features") {
        CHECK(feature::extract_refs("#if defined(FEAT_A)\n#endif\n", ScanMode::snapshot)
                  .empty());
    }

    SUBCASE("indented and spaced directives still match") {
        auto spaced =
            feature::extract_refs("  #  ifndef  FEAT_B\n#endif\n", ScanMode::snapshot);
        REQUIRE(spaced.size() == 1);
        CHECK(spaced[0].name == "FEAT_B");
        CHECK(spaced[0].directive == Directive::ifndef);
    }

    SUBCASE("compound operands keep their stored form") {
        auto compound =
            feature::extract_refs("#ifdef FEAT_X & FEAT_Y\n#endif\n", ScanMode::snapshot);
        REQUIRE(compound.size() == 1);
        CHECK(compound[0].name == "FEAT_X & FEAT_Y");
        CHECK(feature::constituent_identifiers(compound[0].name) ==
              std::vector<std::string>{"FEAT_X", "FEAT_Y"});
    }

    SUBCASE("trailing comments are stripped from the expression") {
        auto refs2 = feature::extract_refs("#ifdef FEAT_A /* main gate */\n#endif\n",
                                           ScanMode::snapshot);
        REQUIRE(refs2.size() == 1);
        CHECK(refs2[0].expression == "FEAT_A");
    }
}

TEST_CASE("extract_refs in diff mode scans changed lines and context") {
    std::string hunk =
        "diff --git a/u.c b/u.c\n"
        "--- a/u.c\n"
        "+++ b/u.c\n"
        "@@ -3,5 +3,6 @@\n"
        " #ifndef FEAT_B\n"
        "+int added = 1;\n"
        " int kept = 0;\n"
        "-int gone = 2;\n"
        " #endif\n";
    auto refs = feature::extract_refs(hunk, ScanMode::diff);
    REQUIRE(refs.size() == 1);
    CHECK(refs[0].name == "FEAT_B");
    CHECK(refs[0].directive == Directive::ifndef);
    CHECK(refs[0].line == 3);

    SUBCASE("directives on deleted lines count as references") {
        std::string removal =
            "@@ -1,3 +1,1 @@\n"
            "-#ifdef FEAT_OLD\n"
            "-int dead = 1;\n"
            "-#endif\n"
            " int live = 0;\n";
        auto removed = feature::extract_refs(removal, ScanMode::diff);
        REQUIRE(removed.size() == 1);
        CHECK(removed[0].name == "FEAT_OLD");
    }

    SUBCASE("diff metadata lines never match") {
        std::string noise = "diff --git a/#ifdef FEAT_Q b/x\n+++ b/#ifdef FEAT_Q\n";
        CHECK(feature::extract_refs(noise, ScanMode::diff).empty());
    }
}

TEST_CASE("unparseable directives are tallied, not fatal") {
    feature::Diagnostics diag;
    auto refs = feature::extract_refs("#ifdef\n#ifdef 123\n#ifdef FEAT_A\n#endif\n",
                                      ScanMode::snapshot, &diag);
    CHECK(refs.size() == 1);
    CHECK(diag.refs_found == 1);
    CHECK(diag.unparseable_lines == 2);

    auto json = nlohmann::json::parse(diag.to_json());
    CHECK(json.at("refs_found") == 1);
    CHECK(json.at("unparseable_lines") == 2);
}

TEST_CASE("is_header_macro matches guard shapes") {
    CHECK(feature::is_header_macro("macroname_h_"));
    CHECK(feature::is_header_macro("macroname_h"));
    CHECK(feature::is_header_macro("CONFIG_H_"));
    CHECK(feature::is_header_macro("__PARSER_H__"));
    CHECK(feature::is_header_macro("UTIL_2_H"));
    CHECK(feature::is_header_macro("_H")); // the suffix rule alone applies
    CHECK_FALSE(feature::is_header_macro("FEAT_A"));
    CHECK_FALSE(feature::is_header_macro("HAVE_STDIO"));
    CHECK_FALSE(feature::is_header_macro("lower_case_guard"));
    // Standard predefined macros stay in: they are features when referenced.
    CHECK_FALSE(feature::is_header_macro("__FILE__"));
    CHECK_FALSE(feature::is_header_macro("__LINE__"));

    SUBCASE("filtering is idempotent") {
        std::vector<std::string> names = {"FEAT_A", "CONFIG_H_", "__X_H__", "B"};
        auto filter = [](std::vector<std::string> in) {
            std::vector<std::string> out;
            for (const auto& n : in)
                if (!feature::is_header_macro(n))
                    out.push_back(n);
            return out;
        };
        auto once = filter(names);
        CHECK(filter(once) == once);
        CHECK(once == std::vector<std::string>{"FEAT_A", "B"});
    }
}

TEST_CASE("build_block_tree nests blocks and rejects unbalanced files") {
    auto tree = feature::build_block_tree("#ifdef A\n#ifdef B\n#endif\n#endif\n");
    REQUIRE(tree.blocks.size() == 2);
    CHECK(tree.blocks[0].feature == "A");
    CHECK(tree.blocks[0].depth == 1);
    CHECK(tree.blocks[0].end_line == 4);
    CHECK(tree.blocks[1].feature == "B");
    CHECK(tree.blocks[1].depth == 2);
    CHECK(tree.blocks[1].parent == 0);

    CHECK_THROWS_AS(feature::build_block_tree("#ifdef A\n#endif\n#endif\n"),
                    UnbalancedConditionals);
    CHECK_THROWS_AS(feature::build_block_tree("#ifdef A\nint x;\n"),
                    UnbalancedConditionals);

    SUBCASE("#if participates in balance but carries no feature") {
        auto mixed = feature::build_block_tree(
            "#if defined(X)\n#ifdef A\n#endif\n#endif\n");
        REQUIRE(mixed.blocks.size() == 2);
        CHECK(mixed.blocks[0].kind == feature::Block::Kind::if_other);
        CHECK(mixed.blocks[0].feature.empty());
        CHECK(mixed.blocks[1].feature == "A");
        CHECK(mixed.blocks[1].depth == 2);
    }

    SUBCASE("#else terminates the then-branch") {
        auto tree2 = feature::build_block_tree("#ifdef A\nint x;\n#else\nint y;\n#endif\n");
        REQUIRE(tree2.blocks.size() == 1);
        CHECK(tree2.blocks[0].then_end_line == 3);
        CHECK(tree2.blocks[0].end_line == 5);
    }
}

TEST_CASE("structure_profile computes lofc, ndep, scat and tanga") {
    std::map<std::string, std::string> snapshots = {
        {"a.c", "#ifdef A\nx;\ny;\n#endif\n"}};
    auto profile = feature::structure_profile(snapshots, {"A"});
    CHECK(profile.at("A").lofc == 2);
    CHECK(profile.at("A").scat == 1);
    CHECK(profile.at("A").ndep == 1);
    CHECK(profile.at("A").tanga == 0);

    SUBCASE("scat adds up across files") {
        std::map<std::string, std::string> three = {
            {"a.c", "#ifdef A\n#endif\n"},
            {"b.c", "#ifdef A\n#endif\n"},
            {"c.c", "#ifdef A\n#endif\n"}};
        CHECK(feature::structure_profile(three, {"A"}).at("A").scat == 3);
    }

    SUBCASE("else-branch lines are not attributed to the feature") {
        std::map<std::string, std::string> with_else = {
            {"a.c", "#ifdef A\nx;\n#else\ny;\nz;\n#endif\n"}};
        CHECK(feature::structure_profile(with_else, {"A"}).at("A").lofc == 1);
    }

    SUBCASE("blank and directive lines never count toward lofc") {
        std::map<std::string, std::string> blocky = {
            {"a.c", "#ifdef A\n\nx;\n#define M 1\n#ifdef B\ny;\n#endif\n#endif\n"}};
        auto p = feature::structure_profile(blocky, {"A", "B"});
        CHECK(p.at("A").lofc == 2); // x; plus the nested y;
        CHECK(p.at("B").lofc == 1);
        CHECK(p.at("B").ndep == 2);
    }

    SUBCASE("tanga counts distinct co-features, headers excluded") {
        std::map<std::string, std::string> tangled = {
            {"a.c", "#ifdef A & B\n#endif\n#ifdef A & C\n#endif\n"
                    "#ifdef A & CONFIG_H_\n#endif\n"}};
        auto p = feature::structure_profile(tangled, {"A", "A & B"});
        CHECK(p.at("A").tanga == 2);       // B and C, the guard filtered
        CHECK(p.at("A & B").tanga == 1);   // C via the shared constituent A
    }

    SUBCASE("unbalanced snapshots are skipped and tallied") {
        feature::Diagnostics diag;
        std::map<std::string, std::string> mixed = {
            {"bad.c", "#ifdef A\nx;\n"}, {"good.c", "#ifdef A\nx;\n#endif\n"}};
        auto p = feature::structure_profile(mixed, {"A"}, &diag);
        CHECK(p.at("A").scat == 1);
        CHECK(p.at("A").lofc == 1);
        CHECK(diag.unbalanced_files == 1);
        CHECK(diag.files_scanned == 2);
    }

    SUBCASE("lofc and scat are additive over disjoint file partitions") {
        std::map<std::string, std::string> all = {
            {"a.c", "#ifdef A\nx;\n#endif\n"},
            {"b.c", "#ifdef A\ny;\nz;\n#endif\n"},
            {"c.c", "#ifdef A\n#endif\n"}};
        auto whole = feature::structure_profile(all, {"A"}).at("A");
        long lofc = 0, scat = 0;
        for (const auto& [path, text] : all) {
            std::map<std::string, std::string> one = {{path, text}};
            auto part = feature::structure_profile(one, {"A"}).at("A");
            lofc += part.lofc;
            scat += part.scat;
        }
        CHECK(whole.lofc == lofc);
        CHECK(whole.scat == scat);
    }

    SUBCASE("top-level references have depth exactly 1") {
        std::map<std::string, std::string> flat = {
            {"a.c", "#ifdef TOP\nx;\n#endif\n"}};
        CHECK(feature::structure_profile(flat, {"TOP"}).at("TOP").ndep == 1);
    }
}

TEST_CASE("the scanners survive arbitrary byte soup") {
    std::mt19937_64 rng(101);
    const std::string alphabet = "#ifdenlsewhrabc_AB&|/*\"'\\\n\t 0123?";
    std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> length(0, 400);
    for (int iter = 0; iter < 200; ++iter) {
        std::string soup;
        int n = length(rng);
        for (int i = 0; i < n; ++i)
            soup += alphabet[pick(rng)];

        feature::Diagnostics diag;
        auto refs = feature::extract_refs(soup, feature::ScanMode::snapshot, &diag);
        auto again = feature::extract_refs(soup, feature::ScanMode::snapshot);
        CHECK(refs.size() == again.size());
        (void)feature::extract_refs(soup, feature::ScanMode::diff);
        try {
            auto tree = feature::build_block_tree(soup);
            for (const auto& block : tree.blocks)
                CHECK(block.depth >= 1);
        } catch (const UnbalancedConditionals&) {
            // expected for most soup
        }
        CHECK(metrics::cyclomatic_complexity(soup) >= 1);
        CHECK(metrics::nonblank_loc(soup) >= 0);
    }
}

TEST_CASE("scat equals the extract_refs count over the same snapshots") {
    std::map<std::string, std::string> snapshots = {
        {"a.c", "#ifdef A\nx;\n#endif\n#ifndef A\ny;\n#endif\n"},
        {"b.c", "#ifdef A\n#endif\n/* #ifdef A */\n"}};
    auto profile = feature::structure_profile(snapshots, {"A"});
    long ref_count = 0;
    for (const auto& [path, text] : snapshots)
        for (const auto& ref : feature::extract_refs(text, ScanMode::snapshot))
            if (ref.name == "A")
                ++ref_count;
    CHECK(profile.at("A").scat == ref_count);
    CHECK(ref_count == 3);
}
