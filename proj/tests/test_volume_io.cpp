#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "neurogeom/analyze_io.hpp"

using namespace neurogeom;

namespace {

VolumeHeader make_header(std::array<std::size_t, 4> dims, std::array<double, 3> voxel,
                         Datatype dt, Endianness e) {
    VolumeHeader h;
    h.dims = dims;
    h.voxel_size = voxel;
    h.datatype = dt;
    h.endianness = e;
    return h;
}

std::vector<std::uint8_t> header_bytes(const VolumeHeader& h) {
    auto bytes = detail::encode_header(h);
    return {bytes.begin(), bytes.end()};
}

template <typename T>
Volume3D make_volume(std::array<std::size_t, 4> dims, std::array<double, 3> voxel,
                     Endianness e, std::mt19937& rng) {
    VolumeHeader h = make_header(dims, voxel, Volume3D::datatype_of<T>(), e);
    std::vector<T> data(h.voxel_count());
    if constexpr (std::is_floating_point_v<T>) {
        std::uniform_real_distribution<double> dist(-1000.0, 1000.0);
        for (T& v : data) v = static_cast<T>(dist(rng));
    } else {
        std::uniform_int_distribution<std::int64_t> dist(std::numeric_limits<T>::min(),
                                                         std::numeric_limits<T>::max());
        for (T& v : data) v = static_cast<T>(dist(rng));
    }
    return Volume3D(h, std::move(data));
}

}  // namespace

TEST_CASE("analyze header parses the amygdala-scale fixture", "[imgio]") {
    auto h = make_header({191, 236, 171, 1}, {1.0, 1.0, 1.0}, Datatype::u8, Endianness::little);
    auto parsed = read_analyze_header(header_bytes(h));
    CHECK(parsed.dims == std::array<std::size_t, 4>{191, 236, 171, 1});
    CHECK(parsed.voxel_size == std::array<double, 3>{1.0, 1.0, 1.0});
    CHECK(parsed.datatype == Datatype::u8);
    CHECK(parsed.endianness == Endianness::little);
}

TEST_CASE("byte-swapped header reads to the same logical header", "[imgio]") {
    auto h = make_header({191, 236, 171, 1}, {1.0, 1.0, 1.0}, Datatype::u8, Endianness::little);
    auto le = header_bytes(h);

    // Swap every numeric field this writer populates; all other bytes are zero.
    auto be = le;
    auto swap_at = [&](std::size_t off, std::size_t width) {
        for (std::size_t i = 0; i < width / 2; ++i) std::swap(be[off + i], be[off + width - 1 - i]);
    };
    swap_at(0, 4);
    for (std::size_t f = 0; f < 8; ++f) swap_at(hdr::dim + 2 * f, 2);
    swap_at(hdr::datatype, 2);
    swap_at(hdr::bitpix, 2);
    for (std::size_t f = 0; f < 8; ++f) swap_at(hdr::pixdim + 4 * f, 4);

    auto parsed = read_analyze_header(be);
    CHECK(parsed.endianness == Endianness::big);
    CHECK(parsed.dims == h.dims);
    CHECK(parsed.voxel_size == h.voxel_size);
    CHECK(parsed.datatype == h.datatype);
}

TEST_CASE("348 zero bytes is rejected as BadMagicSize", "[imgio]") {
    std::vector<std::uint8_t> zeros(348, 0);
    CHECK_THROWS_AS(read_analyze_header(zeros), BadMagicSize);
}

TEST_CASE("short header is rejected", "[imgio]") {
    std::vector<std::uint8_t> bytes(347, 0);
    CHECK_THROWS_AS(read_analyze_header(bytes), HeaderTooShort);
}

TEST_CASE("unsupported datatype code is rejected", "[imgio]") {
    auto h = make_header({2, 2, 2, 1}, {1, 1, 1}, Datatype::u8, Endianness::little);
    auto bytes = header_bytes(h);
    detail::store_scalar<std::int16_t>(bytes.data(), hdr::datatype, 128, Endianness::little);
    CHECK_THROWS_AS(read_analyze_header(bytes), UnsupportedDatatype);
}

TEST_CASE("payload flat index order is x fastest", "[imgio]") {
    auto h = make_header({2, 2, 2, 1}, {1, 1, 1}, Datatype::u8, Endianness::little);
    std::vector<std::uint8_t> payload(8);
    std::iota(payload.begin(), payload.end(), 0);
    auto vol = read_analyze_volume(h, payload);
    CHECK(vol.at(1, 0, 0) == 1.0);
    CHECK(vol.at(0, 1, 0) == 2.0);
    CHECK(vol.at(0, 0, 1) == 4.0);
    CHECK(vol.at(1, 1, 1) == 7.0);
}

TEST_CASE("amygdala-scale all-zero mask decodes to zeros", "[imgio]") {
    const std::array<std::size_t, 4> dims{191, 236, 171, 1};
    auto h = make_header(dims, {1, 1, 1}, Datatype::u8, Endianness::little);
    const std::size_t n = dims[0] * dims[1] * dims[2];
    std::vector<std::uint8_t> payload(n, 0);
    auto vol = read_analyze_volume(h, payload);
    REQUIRE(vol.size() == n);
    CHECK(vol.min_value() == 0.0);
    CHECK(vol.max_value() == 0.0);
}

TEST_CASE("short payload is rejected", "[imgio]") {
    auto h = make_header({2, 2, 2, 1}, {1, 1, 1}, Datatype::u8, Endianness::little);
    std::vector<std::uint8_t> payload(7, 0);
    CHECK_THROWS_AS(read_analyze_volume(h, payload), PayloadSizeMismatch);
}

TEST_CASE("1x1x1 uint8 volume writes 348-byte header and 1-byte payload", "[imgio]") {
    auto h = make_header({1, 1, 1, 1}, {1, 1, 1}, Datatype::u8, Endianness::little);
    Volume3D vol(h, std::vector<std::uint8_t>{42});
    auto [header, image] = write_analyze(vol);
    CHECK(header.size() == 348);
    CHECK(image.size() == 1);
    CHECK(image[0] == 42);
}

TEST_CASE("voxel size round-trips through the header", "[imgio]") {
    auto h = make_header({3, 3, 3, 1}, {0.5, 0.5, 0.5}, Datatype::i16, Endianness::little);
    Volume3D vol(h, std::vector<std::int16_t>(27, 7));
    auto parsed = read_analyze_header(write_analyze(vol).first);
    CHECK(parsed.voxel_size == std::array<double, 3>{0.5, 0.5, 0.5});
}

TEST_CASE("description survives the round trip", "[imgio]") {
    auto h = make_header({2, 2, 2, 1}, {1, 1, 1}, Datatype::u8, Endianness::little);
    h.description = "left amygdala mask";
    Volume3D vol(h, std::vector<std::uint8_t>(8, 1));
    auto parsed = read_analyze_header(write_analyze(vol).first);
    CHECK(parsed.description == "left amygdala mask");
}

TEST_CASE("unmanaged header bytes are preserved verbatim on round trip", "[imgio]") {
    auto h = make_header({2, 2, 2, 1}, {1, 1, 1}, Datatype::u8, Endianness::little);
    // scribble into regions this toolkit does not interpret (history block)
    for (std::size_t i = 253; i < 280; ++i) h.raw[i] = static_cast<std::uint8_t>(i);
    Volume3D vol(h, std::vector<std::uint8_t>(8, 3));
    auto [bytes, image] = write_analyze(vol);
    for (std::size_t i = 253; i < 280; ++i) REQUIRE(bytes[i] == static_cast<std::uint8_t>(i));

    auto reread = read_analyze_header(bytes);
    Volume3D vol2(reread, std::vector<std::uint8_t>(8, 3));
    auto [bytes2, image2] = write_analyze(vol2);
    REQUIRE(bytes2 == bytes);
}

TEST_CASE("write/read round trip is bit exact across datatypes and byte orders",
          "[imgio][property]") {
    std::mt19937 rng(20240901);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 16);
    std::uniform_int_distribution<std::size_t> t_dist(1, 2);
    // quarters of a millimeter: exact in float32, so header equality is exact
    std::uniform_int_distribution<int> vox_dist(1, 16);

    auto run = [&](auto tag, Endianness e) {
        using T = decltype(tag);
        std::array<std::size_t, 4> dims{dim_dist(rng), dim_dist(rng), dim_dist(rng), t_dist(rng)};
        std::array<double, 3> voxel{vox_dist(rng) * 0.25, vox_dist(rng) * 0.25,
                                    vox_dist(rng) * 0.25};
        auto vol = make_volume<T>(dims, voxel, e, rng);

        auto [header, image] = write_analyze(vol);
        auto h2 = read_analyze_header(header);
        auto vol2 = read_analyze_volume(h2, image);

        REQUIRE(h2.dims == vol.header().dims);
        REQUIRE(h2.voxel_size == vol.header().voxel_size);
        REQUIRE(h2.datatype == vol.header().datatype);
        REQUIRE(h2.endianness == e);
        REQUIRE(vol2.storage() == vol.storage());

        // second write is byte-identical
        auto [header2, image2] = write_analyze(vol2);
        REQUIRE(header2 == header);
        REQUIRE(image2 == image);
    };

    for (int i = 0; i < 8; ++i) {
        for (Endianness e : {Endianness::little, Endianness::big}) {
            run(std::uint8_t{}, e);
            run(std::int16_t{}, e);
            run(std::int32_t{}, e);
            run(float{}, e);
            run(double{}, e);
        }
    }
}

TEST_CASE("flat indexing is a bijection onto [0, N)", "[imgio][property]") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 6);
    for (int rep = 0; rep < 10; ++rep) {
        std::array<std::size_t, 4> dims{dim_dist(rng), dim_dist(rng), dim_dist(rng), dim_dist(rng)};
        auto h = make_header(dims, {1, 1, 1}, Datatype::u8, Endianness::little);
        Volume3D vol(h, std::vector<std::uint8_t>(h.voxel_count(), 0));
        std::vector<std::size_t> seen;
        for (std::size_t t = 0; t < dims[3]; ++t)
            for (std::size_t k = 0; k < dims[2]; ++k)
                for (std::size_t j = 0; j < dims[1]; ++j)
                    for (std::size_t i = 0; i < dims[0]; ++i)
                        seen.push_back(vol.flat_index(i, j, k, t));
        std::sort(seen.begin(), seen.end());
        std::vector<std::size_t> want(h.voxel_count());
        std::iota(want.begin(), want.end(), 0);
        REQUIRE(seen == want);
    }
}

TEST_CASE("minimal synthetic NIfTI-1 file reads back", "[imgio]") {
    auto h = make_header({4, 4, 4, 1}, {2, 2, 2}, Datatype::f32, Endianness::little);
    std::vector<float> data(64);
    std::iota(data.begin(), data.end(), 0.0f);
    Volume3D vol(h, data);

    auto bytes = write_nifti1(vol);
    REQUIRE(bytes.size() == 352 + 64 * 4);
    auto vol2 = read_nifti1(bytes);
    CHECK(vol2.header().format == VolumeFormat::nifti1);
    CHECK(vol2.size() == 64);
    CHECK(vol2.storage() == vol.storage());
    CHECK(vol2.header().voxel_size == h.voxel_size);
}

TEST_CASE("NIfTI reader rejects Analyze-style bytes", "[imgio]") {
    auto h = make_header({2, 2, 2, 1}, {1, 1, 1}, Datatype::u8, Endianness::little);
    Volume3D vol(h, std::vector<std::uint8_t>(8, 0));
    auto [header, image] = write_analyze(vol);
    auto combined = header;
    combined.insert(combined.end(), image.begin(), image.end());
    CHECK_THROWS_AS(read_nifti1(combined), BadMagic);
}

TEST_CASE("NIfTI big-endian round trip", "[imgio]") {
    auto h = make_header({3, 2, 2, 1}, {1, 1, 1}, Datatype::i32, Endianness::big);
    std::vector<std::int32_t> data(12);
    std::iota(data.begin(), data.end(), -6);
    Volume3D vol(h, data);
    auto vol2 = read_nifti1(write_nifti1(vol));
    CHECK(vol2.header().endianness == Endianness::big);
    CHECK(vol2.storage() == vol.storage());
}

TEST_CASE("analyze file pair saves and loads through the filesystem", "[imgio]") {
    auto dir = std::filesystem::temp_directory_path() / "neurogeom_test_io";
    std::filesystem::create_directories(dir);
    auto h = make_header({4, 3, 2, 1}, {1, 1, 1}, Datatype::i16, Endianness::little);
    std::vector<std::int16_t> data(24);
    std::iota(data.begin(), data.end(), -12);
    Volume3D vol(h, data);
    save_analyze(vol, dir / "vol.hdr");
    auto vol2 = load_volume(dir / "vol.hdr");
    CHECK(vol2.storage() == vol.storage());
    std::filesystem::remove_all(dir);
}
