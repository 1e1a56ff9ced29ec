#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include "neurogeom/analyze_io.hpp"
#include "neurogeom/mesh_io.hpp"
#include "test_helpers.hpp"

#include <json.hpp>

using namespace neurogeom;

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string cli_binary() {
    const char* bin = std::getenv("NEUROGEOM_BIN");
    return bin ? bin : "";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args, const std::filesystem::path& dir) {
    const auto out_path = dir / "stdout.txt";
    const auto err_path = dir / "stderr.txt";
    const std::string cmd =
        cli_binary() + " " + args + " > " + out_path.string() + " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

Volume3D amygdala_scale_fixture() {
    VolumeHeader h;
    h.dims = {191, 236, 171, 1};
    h.voxel_size = {1, 1, 1};
    h.datatype = Datatype::u8;
    h.description = "left amygdala mask";
    std::vector<std::uint8_t> bits(h.voxel_count(), 0);
    // small blob so `volume` has something to count
    for (std::size_t k = 80; k < 90; ++k)
        for (std::size_t j = 100; j < 110; ++j)
            for (std::size_t i = 90; i < 100; ++i) bits[i + 191 * (j + 236 * k)] = 1;
    return Volume3D(h, std::move(bits));
}

}  // namespace

TEST_CASE("info prints the header of the amygdala-scale fixture", "[cli][paper]") {
    REQUIRE_FALSE(cli_binary().empty());
    TempDir dir("neurogeom_cli_info");
    save_analyze(amygdala_scale_fixture(), dir.path / "amy.hdr");

    auto r = run_cli("info " + (dir.path / "amy.hdr").string(), dir.path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("dims: 191 236 171 1") != std::string::npos);
    CHECK(r.out.find("datatype: uint8") != std::string::npos);
    CHECK(r.out.find("format: analyze75") != std::string::npos);

    auto j = run_cli("--json info " + (dir.path / "amy.hdr").string(), dir.path);
    REQUIRE(j.exit_code == 0);
    auto parsed = nlohmann::json::parse(j.out);
    CHECK(parsed["dims"] == "191 236 171 1");
}

TEST_CASE("volume counts voxels through the CLI", "[cli]") {
    TempDir dir("neurogeom_cli_volume");
    save_analyze(amygdala_scale_fixture(), dir.path / "amy.hdr");
    auto r = run_cli("volume " + (dir.path / "amy.hdr").string(), dir.path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("voxel_count: 1000") != std::string::npos);
    CHECK(r.out.find("volume_mm3: 1000") != std::string::npos);
}

TEST_CASE("check-topology exits 0 for a sphere and 3 otherwise", "[cli]") {
    TempDir dir("neurogeom_cli_topology");
    save_mesh(testutil::tetrahedron(), dir.path / "tetra.ply");
    auto r = run_cli("check-topology " + (dir.path / "tetra.ply").string(), dir.path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("chi: 2") != std::string::npos);
    CHECK(r.out.find("is_sphere: true") != std::string::npos);

    save_mesh(testutil::grid_torus(6, 6), dir.path / "torus.ply");
    auto t = run_cli("check-topology " + (dir.path / "torus.ply").string(), dir.path);
    CHECK(t.exit_code == 3);
    CHECK(t.out.find("genus: 1") != std::string::npos);
}

TEST_CASE("extract-surface then check-topology round-trips through files", "[cli]") {
    TempDir dir("neurogeom_cli_extract");
    save_analyze(to_volume(testutil::ball_mask(16, 5.0)), dir.path / "ball.hdr");
    auto r = run_cli("extract-surface " + (dir.path / "ball.hdr").string() +
                         " --iso 0.5 --out " + (dir.path / "ball.ply").string(),
                     dir.path);
    REQUIRE(r.exit_code == 0);
    auto t = run_cli("check-topology " + (dir.path / "ball.ply").string(), dir.path);
    CHECK(t.exit_code == 0);

    // determinism: identical bytes on a second run
    const std::string first = slurp(dir.path / "ball.ply");
    auto r2 = run_cli("extract-surface " + (dir.path / "ball.hdr").string() +
                          " --iso 0.5 --out " + (dir.path / "ball.ply").string(),
                      dir.path);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(dir.path / "ball.ply") == first);
}

TEST_CASE("extract-surface --pad closes a boundary-touching mask", "[cli]") {
    TempDir dir("neurogeom_cli_pad");
    BinaryMask m;
    m.dims = {4, 4, 4};
    m.voxel_size = {1, 1, 1};
    m.bits.assign(m.size(), 0);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < 2; ++i) m.bits[m.flat_index(i, j, k)] = 1;
    save_analyze(to_volume(m), dir.path / "corner.hdr");

    auto open_run = run_cli("extract-surface " + (dir.path / "corner.hdr").string() +
                                " --iso 0.5 --out " + (dir.path / "open.ply").string(),
                            dir.path);
    REQUIRE(open_run.exit_code == 0);
    CHECK(open_run.out.find("boundary_edges: 0") == std::string::npos);  // reported as open

    auto padded = run_cli("extract-surface " + (dir.path / "corner.hdr").string() +
                              " --iso 0.5 --pad 1 --out " + (dir.path / "closed.ply").string(),
                          dir.path);
    REQUIRE(padded.exit_code == 0);
    CHECK(padded.out.find("boundary_edges: 0") != std::string::npos);
    CHECK(run_cli("check-topology " + (dir.path / "closed.ply").string(), dir.path).exit_code ==
          0);
}

TEST_CASE("register reports rank-deficient landmarks with exit 3", "[cli]") {
    TempDir dir("neurogeom_cli_register");
    atomic_write_file(dir.path / "p.csv",
                      std::string("label,x,y,z\nA,0,0,0\nB,1,0,0\nC,0,1,0\n"));
    auto r = run_cli("register --moving " + (dir.path / "p.csv").string() + " --fixed " +
                         (dir.path / "p.csv").string() + " --out " +
                         (dir.path / "a.txt").string(),
                     dir.path);
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("rank-deficient landmarks") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir.path / "a.txt"));  // no partial output
}

TEST_CASE("exit codes follow the documented mapping", "[cli]") {
    TempDir dir("neurogeom_cli_codes");

    // 1: usage error
    CHECK(run_cli("info", dir.path).exit_code == 1);
    CHECK(run_cli("no-such-subcommand", dir.path).exit_code == 1);

    // 2: malformed input file
    atomic_write_file(dir.path / "garbage.ply", std::string("this is not a mesh\n"));
    CHECK(run_cli("check-topology " + (dir.path / "garbage.ply").string(), dir.path).exit_code ==
          2);

    // 4: missing input file
    CHECK(run_cli("info " + (dir.path / "absent.hdr").string(), dir.path).exit_code == 4);

    // 0: success, plus --help
    CHECK(run_cli("--help", dir.path).exit_code == 0);
}

TEST_CASE("a key=value manifest supplies defaults and flags win", "[cli]") {
    TempDir dir("neurogeom_cli_manifest");
    save_analyze(to_volume(testutil::ball_mask(16, 5.0)), dir.path / "ball.hdr");
    atomic_write_file(dir.path / "extract.manifest",
                      std::string("file = ") + (dir.path / "ball.hdr").string() + "\n" +
                          "iso = 0.5\nout = " + (dir.path / "m.ply").string() + "\n");

    auto r = run_cli("extract-surface --manifest " + (dir.path / "extract.manifest").string(),
                     dir.path);
    REQUIRE(r.exit_code == 0);
    CHECK(std::filesystem::exists(dir.path / "m.ply"));

    // command-line flag overrides the manifest value
    auto r2 = run_cli("extract-surface --manifest " + (dir.path / "extract.manifest").string() +
                          " --out " + (dir.path / "override.ply").string(),
                      dir.path);
    REQUIRE(r2.exit_code == 0);
    CHECK(std::filesystem::exists(dir.path / "override.ply"));
}

TEST_CASE("tract subcommands run end to end", "[cli]") {
    TempDir dir("neurogeom_cli_tracts");
    std::string text;
    for (int i = 0; i < 90; ++i) {
        const int n = (i % 3 == 0) ? 12 : 4;
        text += "TRACT " + std::to_string(n) + "\n";
        for (int j = 0; j < n; ++j)
            text += std::to_string(i) + " " + std::to_string(j) + " 0\n";
        text += "\n";
    }
    atomic_write_file(dir.path / "in.trk", text);

    auto r = run_cli("tracts subsample --stride 30 --min-points 10 " +
                         (dir.path / "in.trk").string() + " " + (dir.path / "out.trk").string(),
                     dir.path);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("tracts_in: 90") != std::string::npos);
    CHECK(r.out.find("tracts_out: 3") != std::string::npos);  // indices 0, 30, 60 all have 12 pts

    auto e = run_cli("tracts endpoints " + (dir.path / "in.trk").string() + " --out " +
                         (dir.path / "pts.csv").string(),
                     dir.path);
    REQUIRE(e.exit_code == 0);
    const auto csv = slurp(dir.path / "pts.csv");
    CHECK(csv.rfind("tract,end,x,y,z\n", 0) == 0);
    CHECK(e.out.find("endpoints: 180") != std::string::npos);
}

TEST_CASE("segment writes per-class posterior volumes", "[cli]") {
    TempDir dir("neurogeom_cli_segment");
    VolumeHeader h;
    h.dims = {20, 20, 20, 1};
    h.datatype = Datatype::f32;
    std::vector<float> data(8000);
    std::mt19937 rng(7);
    std::normal_distribution<double> a(40.0, 5.0), b(140.0, 5.0);
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = static_cast<float>(i % 2 ? a(rng) : b(rng));
    save_analyze(Volume3D(h, std::move(data)), dir.path / "mri.hdr");

    auto r = run_cli("segment " + (dir.path / "mri.hdr").string() + " --classes 2 --out " +
                         (dir.path / "post").string(),
                     dir.path);
    REQUIRE(r.exit_code == 0);
    CHECK(std::filesystem::exists(dir.path / "post_class0.hdr"));
    CHECK(std::filesystem::exists(dir.path / "post_class1.img"));

    auto cls0 = load_volume(dir.path / "post_class0.hdr");
    auto cls1 = load_volume(dir.path / "post_class1.hdr");
    for (std::size_t i = 0; i < 8000; i += 531) {
        const double s = cls0.at_flat(i) + cls1.at_flat(i);
        REQUIRE(s == Catch::Approx(1.0).margin(1e-6));
    }
}
