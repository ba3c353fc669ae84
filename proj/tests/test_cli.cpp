#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "iflow/config.hpp"
#include "iflow/flow.hpp"
#include "iflow/synth.hpp"
#include "support.hpp"

using namespace iflow;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "iflow");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string write_spec(const std::string& dir, const std::string& text) {
    const auto p = dir + "/spec.txt";
    write_text_file(p, text);
    return p;
}

const char* kCircle = "kind = circle\nwidth = 16\nheight = 16\ncenter = 5, 8\nradius = 3\nvelocity = 6, 0\n";
const std::vector<std::string> kQuick{"--hidden-layers", "1", "--width", "8", "--hyper-width", "8", "--iterations", "20"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<std::uint8_t> bytes_of(const std::string& p) { return read_file(p); }

}  // namespace

TEST_CASE("usage errors and help") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"synth"}).code == 2);
}

TEST_CASE("synth writes images, flows and a manifest") {
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    const auto dir = test::temp_dir("cli_synth");
    const auto spec = write_spec(dir, kCircle);
    const auto r = run({"synth", "--spec", spec, "--out", dir + "/a"});
    REQUIRE(r.code == 0);
    for (const char* f : {"I_t0.ppm", "I_t1.ppm", "fwd.flo", "bwd.flo", "manifest.txt"}) {
        CHECK(fs::exists(dir + "/a/" + f));
    }
    const auto scene = scene_from_config(KeyValueConfig::load(spec));
    const auto [fwd, bwd] = scene_bidirectional(scene, 0.0, 1.0);
    CHECK(load_flo(dir + "/a/fwd.flo") == fwd);
    CHECK(load_flo(dir + "/a/bwd.flo") == bwd);
    const auto manifest = KeyValueConfig::load(dir + "/a/manifest.txt");
    CHECK(manifest.get_string("command") == "synth");
    CHECK(manifest.get_string("config.kind") == "circle");
    CHECK(manifest.get_string("started") == "2023-11-14T22:13:20Z");

    REQUIRE(run({"synth", "--spec", spec, "--out", dir + "/b"}).code == 0);
    for (const char* f : {"I_t0.ppm", "I_t1.ppm", "fwd.flo", "bwd.flo"}) {
        CHECK(bytes_of(dir + "/a/" + f) == bytes_of(dir + "/b/" + f));
    }

    const auto bad = write_spec(dir, "width = 16\nkind = hexagon\n");
    const auto e = run({"synth", "--spec", bad, "--out", dir + "/c"});
    CHECK(e.code == 1);
    CHECK(e.err.find("'kind'") != std::string::npos);
    CHECK(e.err.find(":2") != std::string::npos);
}

TEST_CASE("encode, interp, eval and viz") {
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    const auto dir = test::temp_dir("cli_encode");
    const auto spec = write_spec(dir, kCircle);
    REQUIRE(run({"synth", "--spec", spec, "--out", dir + "/in"}).code == 0);

    SUBCASE("zero-flow pair encodes to near-zero loss") {
        save_flo(dir + "/z.flo", FlowField(8, 8));
        const auto r = run({"encode", "--fwd", dir + "/z.flo", "--bwd", dir + "/z.flo", "--out", dir + "/z"});
        REQUIRE(r.code == 0);
        const double loss = std::stod(r.out.substr(r.out.find(' ') + 1));
        CHECK(loss <= 1e-6);
        CHECK(fs::exists(dir + "/z/phi.ifhn"));
        CHECK(fs::exists(dir + "/z/manifest.txt"));
    }
    SUBCASE("mismatched dimensions fail") {
        save_flo(dir + "/small.flo", FlowField(4, 4));
        const auto r = run({"encode", "--fwd", dir + "/in/fwd.flo", "--bwd", dir + "/small.flo", "--out", dir + "/m"});
        CHECK(r.code != 0);
        CHECK(r.err.find("dimensions") != std::string::npos);
    }
    SUBCASE("preset, config file and flags layer in that order") {
        write_text_file(dir + "/cfg.txt", "lr = 0.001\niterations = 5\nwidth = 8\nhidden_layers = 1\nhyper_width = 4\n");
        auto r = run({"encode", "--fwd", dir + "/in/fwd.flo", "--bwd", dir + "/in/bwd.flo", "--preset", "paper",
                      "--config", dir + "/cfg.txt", "--iterations", "3", "--out", dir + "/p"});
        REQUIRE(r.code == 0);
        auto m = KeyValueConfig::load(dir + "/p/manifest.txt");
        CHECK(m.get_string("config.lr") == "0.001");
        CHECK(m.get_string("config.iterations") == "3");
        CHECK(m.get_string("config.beta1") == "0.9");
        CHECK(m.get_string("config.beta2") == "0.999");

        r = run(with({"encode", "--fwd", dir + "/in/fwd.flo", "--bwd", dir + "/in/bwd.flo", "--preset", "paper",
                      "--out", dir + "/q"},
                     {"--hidden-layers", "1", "--width", "4", "--hyper-width", "4", "--iterations", "2"}));
        REQUIRE(r.code == 0);
        m = KeyValueConfig::load(dir + "/q/manifest.txt");
        CHECK(m.get_string("config.lr") == "1e-06");
        CHECK(m.get_string("config.omega") == "10");
        CHECK(m.get_string("seed") == "0");
    }
    SUBCASE("the 5x128 preset runs 10000 Adam steps at lr 1e-6") {
        save_flo(dir + "/one.flo", FlowField::constant(1, 1, 0.5, -0.25));
        const auto r = run({"encode", "--fwd", dir + "/one.flo", "--bwd", dir + "/one.flo", "--preset", "paper",
                            "--strategy", "single_siren", "--out", dir + "/paper"});
        REQUIRE(r.code == 0);
        const auto m = KeyValueConfig::load(dir + "/paper/manifest.txt");
        CHECK(m.get_string("config.lr") == "1e-06");
        CHECK(m.get_string("config.iterations") == "10000");
        CHECK(m.get_string("config.beta1") == "0.9");
        CHECK(m.get_string("config.beta2") == "0.999");
        CHECK(m.get_string("config.hidden_layers") == "5");
        CHECK(m.get_string("config.width") == "128");
        const auto hist = read_file(dir + "/paper/loss.csv");
        CHECK(std::count(hist.begin(), hist.end(), '\n') == 10001);
    }
    SUBCASE("interp, eval and viz on an encoded scene") {
        REQUIRE(run(with({"encode", "--fwd", dir + "/in/fwd.flo", "--bwd", dir + "/in/bwd.flo", "--image0",
                          dir + "/in/I_t0.ppm", "--image1", dir + "/in/I_t1.ppm", "--out", dir + "/enc"},
                         kQuick))
                    .code == 0);
        auto r = run({"interp", "--scene", dir + "/enc", "--t", "0", "--out", dir + "/i0"});
        REQUIRE(r.code == 0);
        const auto z = load_flo(dir + "/i0/t_0/F_to_t0.flo");
        for (double v : z.data()) CHECK(v == 0.0);
        CHECK(load_ppm(dir + "/i0/t_0/frame.ppm").width() == 16);

        r = run({"interp", "--scene", dir + "/enc", "--fractions", "0.125,0.25,0.5,0.75,0.875", "--out", dir + "/i5"});
        REQUIRE(r.code == 0);
        std::size_t sets = 0;
        for (const auto& e : fs::directory_iterator(dir + "/i5")) sets += e.is_directory() ? 1 : 0;
        CHECK(sets == 5);
        CHECK(fs::exists(dir + "/i5/t_0.0125/F_to_t1.ppm"));

        r = run({"interp", "--scene", dir + "/enc", "--t", "0.05,0.2,-1", "--out", dir + "/bad"});
        CHECK(r.code == 1);
        CHECK(r.err.find("0.2") != std::string::npos);
        CHECK(r.err.find("-1") != std::string::npos);
        CHECK(run({"interp", "--scene", dir + "/nothing", "--t", "0", "--out", dir + "/x"}).code != 0);

        r = run({"eval", "--scene", dir + "/enc", "--oracle", spec, "--out", dir + "/ev"});
        REQUIRE(r.code == 0);
        const auto csv = load_ppm(dir + "/i5/t_0.05/F_to_t0.ppm");
        CHECK(csv.channels() == 3);
        const auto text = read_file(dir + "/ev/eval.csv");
        const std::string s(text.begin(), text.end());
        CHECK(s.rfind("strategy,omega,coord_distance,t,epe,centroid_err,final_loss,seconds\n", 0) == 0);
        CHECK(std::count(s.begin(), s.end(), '\n') == 6);

        r = run({"viz", "--flo", dir + "/in/fwd.flo", "--out", dir + "/viz/fwd.ppm"});
        REQUIRE(r.code == 0);
        CHECK(load_ppm(dir + "/viz/fwd.ppm").height() == 16);
        CHECK(fs::exists(dir + "/viz/fwd.ppm.manifest.txt"));
    }
}

TEST_CASE("ablate writes sorted CSVs and flow images") {
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    const auto dir = test::temp_dir("cli_ablate");
    const auto spec = write_spec(dir, kCircle);
    auto r = run(with({"ablate", "--spec", spec, "--sweep", "strategy", "--out", dir + "/s"}, kQuick));
    REQUIRE(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);
    CHECK(r.out.find("\nhypernet,") != std::string::npos);
    CHECK(r.out.find("\nsingle_siren,") != std::string::npos);
    CHECK(r.out.find("\ntwo_sirens,") != std::string::npos);
    CHECK(fs::exists(dir + "/s/flow_strategy_hypernet.ppm"));

    r = run(with({"ablate", "--spec", spec, "--sweep", "omega", "--values", "20,5", "--out", dir + "/o"}, kQuick));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("hypernet,5,") < r.out.find("hypernet,20,"));

    // Same seed, same bytes.
    REQUIRE(run(with({"ablate", "--spec", spec, "--sweep", "omega", "--values", "20,5", "--out", dir + "/o2"}, kQuick))
                .code == 0);
    for (const char* f : {"ablation.csv", "flow_omega_5.ppm", "manifest.txt"}) {
        CHECK(bytes_of(dir + "/o/" + f) != std::vector<std::uint8_t>{});
    }
    CHECK(bytes_of(dir + "/o/ablation.csv") == bytes_of(dir + "/o2/ablation.csv"));
    CHECK(bytes_of(dir + "/o/flow_omega_20.ppm") == bytes_of(dir + "/o2/flow_omega_20.ppm"));

    CHECK(run({"ablate", "--spec", spec, "--sweep", "omega", "--values", "", "--out", dir + "/e"}).code == 2);
    CHECK(run({"ablate", "--spec", spec, "--sweep", "omega", "--out", dir + "/e"}).code == 2);
    r = run(with({"ablate", "--spec", spec, "--sweep", "omega", "--values", "-3,5", "--out", dir + "/f"}, kQuick));
    CHECK(r.code == 1);
    CHECK(r.out.find("hypernet,5,") != std::string::npos);
}

TEST_CASE("gradcheck passes") {
    const auto r = run({"gradcheck", "--trials", "5"});
    CHECK(r.code == 0);
    CHECK(r.out.find("max rel error") != std::string::npos);
}
