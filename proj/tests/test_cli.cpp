#include "oracles.hpp"

#include "prtspace/cli.hpp"
#include "prtspace/spatial.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace prtspace;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string model(const char* name) { return oracle::source_path(std::string("models/") + name); }

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "prtspace-cli-test";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"--manifest", "-", "validate", "/no/such/file.prt"}).code == cli::kExitUsage);
    CHECK(run({"--manifest", "-", "check", model("control_unit.prt"), "--mode", "sideways"}).code == cli::kExitUsage);
}

TEST_CASE("validate") {
    auto ok = run({"--manifest", "-", "validate", model("moving_robot.prt")});
    CHECK(ok.code == cli::kExitOk);
    auto bad = scratch("bad.prt");
    write(bad, "network { module a : Nope { action x; } target flag_zz; }");
    auto r = run({"--manifest", "-", "validate", bad.string()});
    CHECK(r.code == cli::kExitFailure);
    CHECK(r.err.find("bad.prt:1:") != std::string::npos);
    CHECK(r.err.find("Nope") != std::string::npos);
}

TEST_CASE("check reports the table value") {
    auto r = run({"--manifest", "-", "check", model("control_unit.prt"), "--query", "comm16ms"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("0.98") != std::string::npos);
    auto zero = run({"--manifest", "-", "check", model("control_unit.prt"), "--bound", "0", "--mode", "both"});
    CHECK(zero.code == cli::kExitOk);
    CHECK(zero.out.find("max") != std::string::npos);
    auto unknown = run({"--manifest", "-", "check", model("control_unit.prt"), "--query", "nope"});
    CHECK(unknown.code == cli::kExitFailure);
    auto bad_target = run({"--manifest", "-", "check", model("control_unit.prt"), "--bound", "16ms", "--target", "flag_q"});
    CHECK(bad_target.code == cli::kExitFailure);
}

TEST_CASE("density CSV") {
    auto r = run({"--manifest", "-", "density", model("control_unit.prt"), "--bin", "0.005", "--upto", "0.02"});
    REQUIRE(r.code == cli::kExitOk);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "T_s,cumulative,density");
    int rows = 0;
    std::string last;
    while (std::getline(in, line))
        if (!line.empty()) {
            ++rows;
            last = line;
        }
    CHECK(rows == 4);
    CHECK(last.rfind("0.02", 0) == 0);
    CHECK(last.find(",1,") != std::string::npos);
}

TEST_CASE("simulate, spatial and export-bespaced") {
    auto trace = scratch("trace.csv");
    auto r = run({"--manifest", "-", "simulate", "--delay", "0.5", "--trace", trace.string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.rfind("delay_s,collided,impact_time_s,impact_speed_mps,reached_end,final_speed_mps,end_time_s", 0) == 0);
    CHECK(fs::exists(trace));

    auto sweep = run({"--manifest", "-", "simulate", "--sweep", "0.4,0.47,0.5", "--jobs", "3"});
    auto serial = run({"--manifest", "-", "simulate", "--sweep", "0.4,0.47,0.5", "--jobs", "1"});
    CHECK(sweep.code == cli::kExitOk);
    CHECK(sweep.out == serial.out);
    CHECK(run({"--manifest", "-", "simulate", "--sweep", "0.5,0.4"}).code != cli::kExitOk);

    auto stem = scratch("scene");
    auto s = run({"--manifest", "-", "spatial", trace.string(), "--threshold", "1e-10", "--bespaced", stem.string()});
    CHECK(s.code == cli::kExitOk);
    CHECK(fs::exists(stem.string() + "-robot.bsd"));
    CHECK(fs::exists(stem.string() + "-human.bsd"));

    auto bsd = run({"--manifest", "-", "export-bespaced", trace.string(), "--entity", "human"});
    CHECK(bsd.code == cli::kExitOk);
    CHECK(read_bespaced(bsd.out).entries.size() > 0);

    auto garbage = scratch("garbage.csv");
    write(garbage, "not,a,trace\n");
    CHECK(run({"--manifest", "-", "spatial", garbage.string()}).code != cli::kExitOk);
}

TEST_CASE("export-prism is deterministic") {
    auto a = run({"--manifest", "-", "export-prism", model("control_unit.prt")});
    auto b = run({"--manifest", "-", "export-prism", model("control_unit.prt")});
    CHECK(a.code == cli::kExitOk);
    CHECK(a.out == b.out);
    CHECK(a.out == oracle::read_file(oracle::source_path("tests/golden/control_unit.pta")));
}

TEST_CASE("manifest records digests of inputs and outputs") {
    auto manifest = scratch("manifest.json");
    auto out = scratch("cu.pta");
    auto r = run({"--manifest", manifest.string(), "export-prism", model("control_unit.prt"), out.string()});
    REQUIRE(r.code == cli::kExitOk);
    auto j = nlohmann::json::parse(oracle::read_file(manifest.string()));
    CHECK(j["command"] == "export-prism");
    CHECK(j.dump().find(cli::sha256_hex(oracle::read_file(model("control_unit.prt")))) != std::string::npos);
    CHECK(j.dump().find(cli::sha256_hex(oracle::read_file(out.string()))) != std::string::npos);
    CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
