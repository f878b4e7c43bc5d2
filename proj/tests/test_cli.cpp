#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include "dice/cli.hpp"
#include "dice/errors.hpp"

namespace fs = std::filesystem;
using namespace dice;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "dicehaldane");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("dice-cli-" + std::to_string(getpid())) / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> v;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);)
        v.push_back(l);
    return v;
}

}  // namespace

TEST_CASE("no arguments prints usage and exits 2")
{
    const auto r = invoke({});
    CHECK(r.code == 2);
    CHECK(r.err.find("usage:") != std::string::npos);
}

TEST_CASE("configuration errors exit 2")
{
    const auto dir = scratch("bad").string();
    CHECK(invoke({"frobnicate", "--output_dir", dir}).code == 2);
    CHECK(invoke({"bands", "--nx", "3", "--output_dir", dir}).code == 2);
    CHECK(invoke({"bands", "--samples", "ten", "--output_dir", dir}).code == 2);
    CHECK(invoke({"bands", "--no-such-flag", "1"}).code == 2);
    CHECK(invoke({"ldos", "--bc_x", "twisted", "--output_dir", dir}).code == 2);
    CHECK(invoke({"ldos", "--nx", "3", "--bc_x", "periodic", "--output_dir", dir}).code == 3);
    CHECK(invoke({"--config", "/nonexistent/run.cfg"}).code == 2);
}

TEST_CASE("numerical failures exit 3")
{
    // Far from any EP the rigidity does not vary enough to fit.
    const auto r = invoke({"rigidity", "--k", "G", "--ep", "40", "--output_dir", scratch("num").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("InsufficientDynamicRange") != std::string::npos);
}

TEST_CASE("value forms")
{
    const auto dir = scratch("chern");
    const auto r = invoke({"chern", "--t2", "0.06t", "--phi", "pi/2", "--m", "0.06", "--output_dir", dir.string()});
    REQUIRE(r.code == 0);
    const auto files = lines(r.out);
    REQUIRE(files.size() == 1);
    const auto j = nlohmann::json::parse(slurp(files[0]));
    CHECK(j["chern_numbers"][0] == -2);
    CHECK(j["gap_class"] == "AG");
    CHECK(j["critical_mass"]["absolute"].get<double>() == doctest::Approx(3 * std::sqrt(3.0) * 0.06 / std::sqrt(2.0)));
}

TEST_CASE("identical runs give identical files")
{
    const auto a = scratch("det-a"), b = scratch("det-b");
    const std::vector<std::string> args = {"disorder-sweep", "--nx", "4", "--ny", "2", "--gamma", "2",
                                           "--realizations", "4", "--seed", "17"};
    auto with = [&](const fs::path& d) {
        auto v = args;
        v.push_back("--output_dir");
        v.push_back(d.string());
        return v;
    };
    const auto ra = invoke(with(a));
    const auto rb = invoke(with(b));
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    const auto fa = lines(ra.out), fb = lines(rb.out);
    REQUIRE(fa.size() == fb.size());
    for (size_t i = 0; i < fa.size(); ++i) {
        CHECK(fs::path(fa[i]).filename() == fs::path(fb[i]).filename());
        CHECK(slurp(fa[i]) == slurp(fb[i]));
    }
    const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(m["config"]["seed"] == "17");
    CHECK(m["config"]["region"] == "bulk");
    CHECK(m["version"] == DICE_VERSION);
    CHECK(m["outputs"].size() == fa.size());
    CHECK(m.contains("wall_time_seconds"));
}

TEST_CASE("config file with flag override")
{
    const auto dir = scratch("cfgfile");
    fs::create_directories(dir);
    const auto cfg = dir / "run.cfg";
    std::ofstream(cfg) << "# EP at M\ncommand = bands\ndelta = 1\nsamples = 4\npath = M,G\noutput_dir = "
                       << (dir / "out").string() << "\n";
    const auto r = invoke({"--config", cfg.string(), "--samples", "5"});
    REQUIRE(r.code == 0);
    const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(m["config"]["samples"] == "5");
    CHECK(m["config"]["delta"] == "1");
    // The first CSV row is the M point: Re(E) triply degenerate at the EP.
    std::string csv;
    for (const auto& f : lines(r.out))
        if (f.size() > 4 && f.substr(f.size() - 4) == ".csv")
            csv = slurp(f);
    const auto rows = lines(csv);
    REQUIRE(rows.size() == 7);
    std::vector<double> v;
    std::stringstream ss(rows[1]);
    for (std::string cell; std::getline(ss, cell, ',');)
        v.push_back(std::stod(cell));
    CHECK(std::abs(v[3] - v[7]) < 1e-4);
    CHECK(std::abs(v[3] - v[5]) < 1e-4);
}

TEST_CASE("config text round trip")
{
    cli::RunConfig c;
    c.command = "winding";
    c.values = {{"delta", "2"}, {"t2", "0.06t"}, {"phi", "pi/2"}, {"e_ref", "0.1:0.2"}};
    const auto back = cli::parse_config_text(cli::serialize(c));
    CHECK(back.command == c.command);
    CHECK(back.values == c.values);
    CHECK_THROWS_AS(cli::parse_config_text("delta 2"), ConfigError);
    CHECK_THROWS_AS(cli::parse_config_text("delta = 1\ndelta = 2"), ConfigError);
    CHECK_THROWS_AS(cli::validate({"bands", {{"nx", "3"}}}), ConfigError);
    const auto res = cli::resolved({"winding", {}});
    CHECK(res.at("nk") == "400");
    CHECK(res.count("nx") == 0);
}

TEST_CASE("every command has a working default-sized run")
{
    const auto dir = scratch("all").string();
    const std::vector<std::vector<std::string>> runs = {
        {"bands", "--samples", "3"},
        {"ep-scan", "--k", "G", "--lo", "2", "--hi", "4", "--steps", "11"},
        {"rigidity", "--model", "pt-dimer", "--ep", "1"},
        {"phase-diagram", "--res_delta", "5", "--res_mass", "4", "--t2", "0.06t", "--phi", "pi/2"},
        {"chern", "--t2", "0.06t", "--phi", "pi/2"},
        {"ribbon-bands", "--t2", "0.06t", "--phi", "pi/2", "--m", "0.06", "--ny", "4", "--nk", "5"},
        {"ldos", "--nx", "4", "--ny", "2", "--gamma", "1", "--export_hamiltonian", "true"},
        {"ipr-sweep", "--nx", "4", "--ny", "2", "--gamma", "1", "--realizations", "2"},
        {"spectral-area", "--cells", "2", "--twists", "2", "--resolution", "64", "--gamma", "2"},
        {"winding", "--t2", "0.06t", "--phi", "pi/2", "--delta", "2", "--nk", "40", "--e_ref", "0:0.5"},
        {"disorder-sweep", "--nx", "4", "--ny", "2", "--realizations", "2"},
    };
    REQUIRE(runs.size() == cli::commands().size());
    for (auto args : runs) {
        args.push_back("--output_dir");
        args.push_back(dir);
        const auto r = invoke(args);
        INFO(args[0] << ": " << r.err);
        CHECK(r.code == 0);
        CHECK_FALSE(r.out.empty());
    }
}

TEST_CASE("shipped presets are valid")
{
    int n = 0;
    for (const auto& e : fs::directory_iterator(PRESET_DIR)) {
        if (e.path().extension() != ".cfg")
            continue;
        INFO(e.path().string());
        const auto cfg = cli::parse_config_text(slurp(e.path()));
        CHECK_NOTHROW(cli::validate(cfg));
        ++n;
    }
    CHECK(n > 0);
}
