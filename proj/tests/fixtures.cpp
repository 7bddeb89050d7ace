#include "fixtures.hpp"

#include <featforge/errors.hpp>
#include <featforge/process.hpp>

#include <fstream>
#include <mutex>

#include <unistd.h>

namespace featforge::test {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

fs::path scratch_dir(const std::string& tag) {
    static std::mutex mu;
    static int counter = 0;
    std::lock_guard<std::mutex> lock(mu);
    fs::path dir = fs::temp_directory_path() /
                   ("featforge-" + std::to_string(getpid()) + "-" + tag + "-" +
                    std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

void git_in(const fs::path& repo, const std::vector<std::string>& args,
            const std::string& author_name, const std::string& author_email,
            const std::string& date) {
    std::vector<std::string> argv = {"env"};
    std::string name = author_name.empty() ? "Test" : author_name;
    std::string email = author_email.empty() ? "test@example.com" : author_email;
    argv.push_back("GIT_AUTHOR_NAME=" + name);
    argv.push_back("GIT_AUTHOR_EMAIL=" + email);
    argv.push_back("GIT_COMMITTER_NAME=" + name);
    argv.push_back("GIT_COMMITTER_EMAIL=" + email);
    if (!date.empty()) {
        argv.push_back("GIT_AUTHOR_DATE=" + date);
        argv.push_back("GIT_COMMITTER_DATE=" + date);
    }
    argv.push_back("git");
    argv.push_back("-C");
    argv.push_back(repo.string());
    argv.insert(argv.end(), args.begin(), args.end());
    auto result = run_process(argv);
    if (!result.ok())
        throw Error("fixture git command failed: " + result.err);
}

namespace {

std::string day(int n) {
    // 2020-01-01 00:00:00 UTC plus n days
    return std::to_string(1577836800 + n * 86400) + " +0000";
}

void init_repo(const fs::path& dir) {
    git_in(dir, {"init", "-q", "-b", "main"});
    git_in(dir, {"config", "commit.gpgsign", "false"});
}

void commit_all(const fs::path& dir, const std::string& message,
                const std::string& name, const std::string& email, int day_index) {
    git_in(dir, {"add", "-A"}, name, email, day(day_index));
    git_in(dir, {"commit", "-q", "-m", message}, name, email, day(day_index));
}

// ---------------------------------------------------------------------------
// fixture-alpha
// ---------------------------------------------------------------------------

const std::string kParserC1 = R"(#include <stdio.h>
#include "config.h"

static int token_count = 0;

static int feat_a_limit = 8;

static int shared_buffer[16];

int parse_token(const char *text) {
    if (text == 0) {
        return -1;
    }
    token_count = token_count + 1;
    return 0;
}

int parse_line(const char *line) {
    int rc = parse_token(line);
    if (rc != 0) {
        return rc;
    }
    return token_count;
}

int table_rows = 4;
)";

const std::string kParserC2 = R"(#include <stdio.h>
#include "config.h"

static int token_count = 0;

#ifdef FEAT_A
static int feat_a_limit = 8;
#endif

#if defined(FEAT_B)
#ifdef FEAT_A
static int shared_buffer[16];
static int shared_cursor = 0;
#endif
#endif

int parse_token(const char *text) {
    if (text == 0) {
        return -1;
    }
    token_count = token_count + 1;
    return 0;
}

int parse_line(const char *line) {
    int rc = parse_token(line);
    if (rc != 0) {
        return rc;
    }
    return token_count;
}

int table_rows = 4;
)";

const std::string kParserC3 = R"(#include <stdio.h>
#include "config.h"

static int token_count = 0;

#ifdef FEAT_A
static int feat_a_limit = 8;
static int feat_a_retries = 2;
#endif

#if defined(FEAT_B)
#ifdef FEAT_A
static int shared_buffer[16];
static int shared_cursor = 0;
#endif
#endif

int parse_token(const char *text) {
    if (text == 0) {
        return -1;
    }
    token_count = token_count + 1;
    return 0;
}

int parse_line(const char *line) {
    int rc = parse_token(line);
    if (rc != 0) {
        return rc;
    }
    return token_count;
}

int table_rows = 4;
int table_cols = 5;
)";

const std::string kParserC5 = R"(#include <stdio.h>
#include "config.h"

static int token_count = 0;

#ifdef FEAT_A
static int feat_a_limit = 8;
static int feat_a_retries = 2;
#endif

#if defined(FEAT_B)
#ifdef FEAT_A
static int shared_buffer[16];
static int shared_cursor = 0;
#endif
#endif

int parse_token(const char *text) {
    if (text == 0) {
        return -1;
    }
    token_count = token_count + 1;
    return 0;
}

int parse_line(const char *line) {
    int rc = parse_token(line);
    if (rc != 0) {
        return rc;
    }
    return token_count;
}

int table_rows = 4;
int table_cols = 5;
int table_pad = 1;
int table_gap = 2;
int table_max = 64;
int table_min = 1;
int table_step = 3;
int table_span = 7;
int table_last = 0;
)";

const std::string kParserC7 = R"(#include <stdio.h>
#include "config.h"

static int token_count = 0;

#ifdef FEAT_A
static int feat_a_limit = 8;
#endif

#if defined(FEAT_B)
#ifdef FEAT_A
static int shared_buffer[16];
static int shared_cursor = 0;
#endif
#endif

int parse_token(const char *text) {
    if (text == 0) {
        return -1;
    }
    token_count = token_count + 1;
    return 0;
}

int parse_line(const char *line) {
    int rc = parse_token(line);
    if (rc != 0) {
        return rc;
    }
    return token_count;
}

int table_rows = 4;
int table_cols = 5;
int table_pad = 1;
int table_gap = 2;
int table_max = 64;
int table_min = 1;
int table_step = 3;
int table_span = 7;
int table_last = 0;
)";

const std::string kParserC8 = R"(#include <stdio.h>
#include "config.h"

static int token_count = 0;

#ifdef FEAT_A
static int feat_a_limit = 8;
#endif

#if defined(FEAT_B)
#ifdef FEAT_A
static int shared_buffer[16];
static int shared_cursor = 0;
#endif
#endif

int parse_token(const char *text) {
    if (text == 0) {
        return -1;
    }
    token_count = token_count + 1;
    return 0;
}

int parse_line(const char *line) {
    int rc = parse_token(line);
    if (rc != 0) {
        return rc;
    }
    return token_count;
}

int table_rows = 4;
int table_cols = 5;
int table_pad = 1;
int table_gap = 2;
int table_max = 64;
int table_min = 1;
int table_step = 3;
int table_span = 9;
int table_last = 0;
)";

const std::string kUtilC1 = R"(#include "config.h"

int util_flag = 0;

int util_sum(int a, int b) {
    return a + b;
}
)";

const std::string kUtilC4 = R"(#include "config.h"

int util_flag = 0;

#ifdef FEAT_B
int util_mask = 3;
#endif

int util_sum(int a, int b) {
    return a + b;
}
)";

const std::string kUtilC6 = R"(#include "config.h"

int util_flag = 0;

#ifdef FEAT_B
int util_mask = 7;
#endif

int util_sum(int a, int b) {
    return a + b;
}
)";

const std::string kConfigH = R"(#ifndef CONFIG_H_
#define CONFIG_H_

#define VERSION 1

#endif
)";

fs::path build_alpha() {
    fs::path dir = scratch_dir("alpha");
    init_repo(dir);
    const std::string alice = "Alice", alice_mail = "alice@example.com";
    const std::string bob = "Bob", bob_mail = "bob@example.com";

    write_file(dir / "parser.c", kParserC1);
    write_file(dir / "util.c", kUtilC1);
    commit_all(dir, "Initial import", bob, bob_mail, 0);

    write_file(dir / "parser.c", kParserC2);
    commit_all(dir, "Introduce feature guards in parser", alice, alice_mail, 1);

    write_file(dir / "parser.c", kParserC3);
    commit_all(dir, "Extend parser retry handling", alice, alice_mail, 2);

    write_file(dir / "util.c", kUtilC4);
    write_file(dir / "config.h", kConfigH);
    commit_all(dir, "Guard utility helpers with feature B", bob, bob_mail, 3);

    write_file(dir / "parser.c", kParserC5);
    commit_all(dir, "Grow parser output table", bob, bob_mail, 4);
    git_in(dir, {"tag", "v1.0"});

    write_file(dir / "util.c", kUtilC6);
    commit_all(dir, "Tune util mask value", bob, bob_mail, 5);

    write_file(dir / "parser.c", kParserC7);
    git_in(dir, {"add", "-A"}, alice, alice_mail, day(6));
    git_in(dir,
           {"commit", "-q", "-m",
            "Fix retry handling in parser\n\nThe retry counter made the parser "
            "loop on short input."},
           alice, alice_mail, day(6));

    write_file(dir / "parser.c", kParserC8);
    commit_all(dir, "Expand default table entries", bob, bob_mail, 7);
    git_in(dir, {"tag", "v2.0"});
    return dir;
}

// ---------------------------------------------------------------------------
// fixture-beta: merge, rename, compound feature, #else branch
// ---------------------------------------------------------------------------

fs::path build_beta() {
    fs::path dir = scratch_dir("beta");
    init_repo(dir);
    const std::string alice = "Alice", am = "alice@example.com";
    const std::string bob = "Bob", bm = "bob@example.com";
    const std::string carol = "Carol", cm = "carol@example.com";

    write_file(dir / "core.c", R"(#include "core.h"

#ifdef FEAT_X
int core_mode = 1;
int core_seed = 3;
#else
int core_mode = 0;
#endif

int core_run(void) {
    return core_mode;
}
)");
    write_file(dir / "net.c", R"(int net_port = 80;

int net_open(void) {
    return net_port;
}
)");
    commit_all(dir, "Initial layout", alice, am, 0);

    write_file(dir / "net.c", R"(int net_port = 80;

#ifdef FEAT_X & FEAT_Y
int net_retry = 5;
int net_grace = 9;
#endif

#ifdef FEAT_X
int net_fast = 1;
#endif

int net_open(void) {
    return net_port;
}
)");
    commit_all(dir, "Wire combined feature into net", bob, bm, 1);

    // Branch for a merge: carol edits core.c on a side branch.
    git_in(dir, {"checkout", "-q", "-b", "side"});
    write_file(dir / "core.c", R"(#include "core.h"

#ifdef FEAT_X
int core_mode = 1;
int core_seed = 4;
#else
int core_mode = 0;
#endif

int core_run(void) {
    return core_mode;
}
)");
    commit_all(dir, "Adjust core seed on side branch", carol, cm, 2);
    git_in(dir, {"checkout", "-q", "main"});
    write_file(dir / "net.c", R"(int net_port = 80;

#ifdef FEAT_X & FEAT_Y
int net_retry = 6;
int net_grace = 9;
#endif

#ifdef FEAT_X
int net_fast = 1;
#endif

int net_open(void) {
    return net_port;
}
)");
    commit_all(dir, "Raise net retry budget", alice, am, 3);
    git_in(dir, {"merge", "-q", "--no-ff", "-m", "Merge side work", "side"}, bob, bm,
           day(4));
    git_in(dir, {"tag", "r1"});

    // Rename core.c -> engine.c, keeping content (blame must follow).
    git_in(dir, {"mv", "core.c", "engine.c"});
    commit_all(dir, "Rename core to engine", carol, cm, 5);

    write_file(dir / "engine.c", R"(#include "core.h"

#ifdef FEAT_X
int core_mode = 1;
#else
int core_mode = 0;
#endif

int core_run(void) {
    return core_mode;
}
)");
    git_in(dir, {"add", "-A"}, alice, am, day(6));
    git_in(dir,
           {"commit", "-q", "-m",
            "Fix engine seed overflow\n\nDrops the seed constant that kept "
            "overflowing."},
           alice, am, day(6));
    git_in(dir, {"tag", "r2"});
    return dir;
}

// ---------------------------------------------------------------------------
// fixture-gamma: unbalanced file, removed feature, comment directives
// ---------------------------------------------------------------------------

fs::path build_gamma() {
    fs::path dir = scratch_dir("gamma");
    init_repo(dir);
    const std::string alice = "Alice", am = "alice@example.com";
    const std::string bob = "Bob", bm = "bob@example.com";

    write_file(dir / "main.c", R"(/* #ifdef FEAT_GHOST in a comment is ignored */
#ifdef FEAT_OLD
int old_path = 1;
#endif

// #ifndef FEAT_GHOST also ignored
int main_run(void) {
    return 0;
}
)");
    git_in(dir, {"add", "-A"}, alice, am, day(0));
    git_in(dir, {"commit", "-q", "-m", "Fix starting point"}, alice, am, day(0));

    write_file(dir / "broken.c", R"(#ifdef FEAT_NEW
int broken_a = 1;
#endif
#endif
)");
    write_file(dir / "main.c", R"(/* #ifdef FEAT_GHOST in a comment is ignored */
#ifdef FEAT_OLD
int old_path = 1;
int old_extra = 2;
#endif

// #ifndef FEAT_GHOST also ignored
int main_run(void) {
    return 0;
}
)");
    commit_all(dir, "Grow old feature and add broken unit", bob, bm, 1);

    write_file(dir / "main.c", R"(/* #ifdef FEAT_GHOST in a comment is ignored */

// #ifndef FEAT_GHOST also ignored
int main_run(void) {
    return 0;
}
)");
    commit_all(dir, "Drop the old feature entirely", alice, am, 2);
    git_in(dir, {"tag", "g1"});

    git_in(dir, {"rm", "-q", "broken.c"});
    commit_all(dir, "Remove the broken unit", alice, am, 3);

    write_file(dir / "main.c", R"(/* #ifdef FEAT_GHOST in a comment is ignored */

// #ifndef FEAT_GHOST also ignored
int main_run(void) {
    return 7;
}
)");
    git_in(dir, {"add", "-A"}, bob, bm, day(4));
    git_in(dir, {"commit", "-q", "-m", "Fix return code for error paths"}, bob, bm,
           day(4));
    git_in(dir, {"tag", "g2"});
    return dir;
}

fs::path cached(const char* which) {
    static std::mutex mu;
    static fs::path alpha, beta, gamma;
    std::lock_guard<std::mutex> lock(mu);
    std::string name = which;
    if (name == "alpha") {
        if (alpha.empty())
            alpha = build_alpha();
        return alpha;
    }
    if (name == "beta") {
        if (beta.empty())
            beta = build_beta();
        return beta;
    }
    if (gamma.empty())
        gamma = build_gamma();
    return gamma;
}

} // namespace

fs::path fixture_alpha() {
    return cached("alpha");
}

fs::path fixture_beta() {
    return cached("beta");
}

fs::path fixture_gamma() {
    return cached("gamma");
}

std::vector<std::string> alpha_hashes() {
    auto result = run_process({"git", "-C", fixture_alpha().string(), "log",
                               "--reverse", "--format=%H", "main"});
    std::vector<std::string> hashes;
    size_t start = 0;
    while (start < result.out.size()) {
        size_t end = result.out.find('\n', start);
        if (end == std::string::npos)
            end = result.out.size();
        if (end > start)
            hashes.push_back(result.out.substr(start, end - start));
        start = end + 1;
    }
    return hashes;
}

} // namespace featforge::test
