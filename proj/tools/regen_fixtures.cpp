// Regenerates every committed fixture from scratch:
//   fixtures/toy/                the bundled toy corpus (CSV/JSONL/prefixes)
//   fixtures/cassettes/toy.jsonl recorded scripted-backend responses
//   fixtures/golden/<run>/       a full replay run, committed byte-for-byte
//
// Usage: regen_fixtures [repo_root]   (default: current directory)

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mctg/cli.hpp"
#include "mctg/scripted.hpp"
#include "mctg/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_stage(const std::vector<std::string>& base, const std::vector<std::string>& stage) {
    std::vector<std::string> args = base;
    args.insert(args.end(), stage.begin(), stage.end());
    std::string label;
    for (const auto& a : stage) label += (label.empty() ? "" : " ") + a;
    std::cout << "== " << label << "\n";
    int rc = mctg::cli::run(args);
    if (rc != 0) {
        std::cerr << "stage `" << label << "` failed with exit code " << rc << "\n";
        std::exit(rc);
    }
    return rc;
}

void run_pipeline(const std::vector<std::string>& base) {
    run_stage(base, {"ingest"});
    run_stage(base, {"augment", "cross"});
    run_stage(base, {"augment", "grained"});
    run_stage(base, {"augment", "rewrite"});
    run_stage(base, {"filter"});
    run_stage(base, {"build-it"});
    run_stage(base, {"mix"});
    run_stage(base, {"eval", "generate"});
    run_stage(base, {"eval", "classify"});
    run_stage(base, {"eval", "report"});
}

fs::path sole_run_dir(const fs::path& out_dir) {
    fs::path found;
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        if (!entry.is_directory()) continue;
        if (!found.empty()) {
            std::cerr << "expected exactly one run dir under " << out_dir << "\n";
            std::exit(1);
        }
        found = entry.path();
    }
    if (found.empty()) {
        std::cerr << "no run dir under " << out_dir << "\n";
        std::exit(1);
    }
    return found;
}

}  // namespace

int main(int argc, char** argv) {
    fs::path root = argc > 1 ? fs::path(argv[1]) : fs::current_path();
    fs::path config = root / "configs" / "toy.json";
    fs::path cassette = root / "fixtures" / "cassettes" / "toy.jsonl";
    fs::path golden = root / "fixtures" / "golden";
    fs::path scratch = fs::temp_directory_path() / "mctg-regen";

    std::cout << "writing toy corpus under " << (root / "fixtures" / "toy") << "\n";
    mctg::write_toy_corpus((root / "fixtures" / "toy").string());

    fs::remove_all(scratch);
    fs::create_directories(scratch);
    fs::create_directories(cassette.parent_path());
    fs::remove(cassette);  // rebuild the cassette from zero, no stale entries

    // Record pass: scripted backends answer, responses land in the cassette.
    run_pipeline({"--config", config.string(), "--mode", "record", "--workers", "4", "--out",
                  (scratch / "record").string(), "--cassette", cassette.string()});

    // Replay pass with a different worker count: must rebuild every artifact
    // from the cassette alone. This run becomes the golden tree.
    run_pipeline({"--config", config.string(), "--mode", "replay", "--workers", "3", "--out",
                  (scratch / "replay").string(), "--cassette", cassette.string()});

    fs::path run = sole_run_dir(scratch / "replay");
    fs::remove_all(golden);
    fs::create_directories(golden);
    fs::copy(run, golden / run.filename(), fs::copy_options::recursive);

    json filter_report = json::parse(mctg::read_file((run / "filter" / "report.json").string()));
    json mix_report = json::parse(mctg::read_file((run / "mix" / "report.json").string()));
    std::cout << "rewrite pairs kept: " << filter_report.at("kept") << "\n";
    std::cout << "mix report: " << mix_report.dump() << "\n";
    std::cout << "golden run: " << (golden / run.filename()) << "\n";
    return 0;
}
