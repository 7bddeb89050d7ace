#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace featforge::test {

// Scripted git repositories used as oracles. Each builder creates the repo
// once per process and returns its path on later calls.
//
// fixture-alpha: 8 linear commits, tags v1.0 (c5) and v2.0 (c8), two authors,
// features FEAT_A and FEAT_B plus the filtered header guard CONFIG_H_, and
// one planted bug: c7 fixes a line introduced by c3.
std::filesystem::path fixture_alpha();

// fixture-beta: three authors, a merge commit, a rename (blame follows it),
// a compound "FEAT_X & FEAT_Y" reference and an #else branch.
std::filesystem::path fixture_beta();

// fixture-gamma: unbalanced conditionals in one file, a feature removed
// before the release snapshot, directives inside comments, and a corrective
// root commit.
std::filesystem::path fixture_gamma();

// Hashes of fixture-alpha commits c1..c8 in order.
std::vector<std::string> alpha_hashes();

// Fresh scratch directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

// Runs git in a repo with a pinned author/committer identity and date.
void git_in(const std::filesystem::path& repo, const std::vector<std::string>& args,
            const std::string& author_name = {}, const std::string& author_email = {},
            const std::string& date = {});

void write_file(const std::filesystem::path& path, const std::string& content);

} // namespace featforge::test
