#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/io_util.hpp"

namespace neurogeom {

// Element types this toolkit reads and writes. Codes are the Analyze 7.5 /
// NIfTI-1 datatype codes.
enum class Datatype : std::int16_t {
    u8 = 2,
    i16 = 4,
    i32 = 8,
    f32 = 16,
    f64 = 64,
};

inline Datatype datatype_from_code(std::int16_t code) {
    switch (code) {
        case 2: return Datatype::u8;
        case 4: return Datatype::i16;
        case 8: return Datatype::i32;
        case 16: return Datatype::f32;
        case 64: return Datatype::f64;
        default: throw UnsupportedDatatype("unsupported datatype code " + std::to_string(code));
    }
}

inline int datatype_bitpix(Datatype dt) {
    switch (dt) {
        case Datatype::u8: return 8;
        case Datatype::i16: return 16;
        case Datatype::i32: return 32;
        case Datatype::f32: return 32;
        case Datatype::f64: return 64;
    }
    return 0;
}

inline std::size_t datatype_bytes(Datatype dt) {
    return static_cast<std::size_t>(datatype_bitpix(dt) / 8);
}

inline const char* datatype_name(Datatype dt) {
    switch (dt) {
        case Datatype::u8: return "uint8";
        case Datatype::i16: return "int16";
        case Datatype::i32: return "int32";
        case Datatype::f32: return "float32";
        case Datatype::f64: return "float64";
    }
    return "?";
}

enum class VolumeFormat { analyze75, nifti1 };

inline constexpr std::size_t kAnalyzeHeaderSize = 348;

// Header metadata of a volume. The 348 raw header bytes are kept verbatim so
// that fields this toolkit does not interpret survive a read/write round trip.
struct VolumeHeader {
    std::array<std::size_t, 4> dims{1, 1, 1, 1};       // nx, ny, nz, nt
    std::array<double, 3> voxel_size{1.0, 1.0, 1.0};   // mm
    Datatype datatype = Datatype::u8;
    Endianness endianness = Endianness::little;
    std::string description;                           // <= 80 bytes
    VolumeFormat format = VolumeFormat::analyze75;
    std::array<std::uint8_t, kAnalyzeHeaderSize> raw{};  // file-order bytes as read

    std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2] * dims[3]; }

    void validate() const {
        for (std::size_t d : dims)
            if (d < 1) throw InvalidHeaderField("all dims must be >= 1");
        for (double v : voxel_size)
            if (!(v > 0.0)) throw InvalidHeaderField("voxel_size components must be > 0");
        if (description.size() > 80) throw InvalidHeaderField("description exceeds 80 bytes");
    }
};

// Dense voxel grid. Element (i,j,k,t) lives at flat index
// i + nx*(j + ny*(k + nz*t)); x varies fastest. Data is stored in native
// byte order in the vector matching header.datatype; values are immutable
// after construction.
class Volume3D {
public:
    using Storage = std::variant<std::vector<std::uint8_t>, std::vector<std::int16_t>,
                                 std::vector<std::int32_t>, std::vector<float>,
                                 std::vector<double>>;

    Volume3D() = default;

    template <typename T>
    Volume3D(VolumeHeader header, std::vector<T> data) : header_(std::move(header)) {
        header_.validate();
        if (datatype_of<T>() != header_.datatype)
            throw InvalidHeaderField("element type does not match header datatype");
        if (data.size() != header_.voxel_count())
            throw PayloadSizeMismatch("data length " + std::to_string(data.size()) +
                                      " != dims product " + std::to_string(header_.voxel_count()));
        data_ = std::move(data);
    }

    template <typename T>
    static constexpr Datatype datatype_of() {
        if constexpr (std::is_same_v<T, std::uint8_t>) return Datatype::u8;
        else if constexpr (std::is_same_v<T, std::int16_t>) return Datatype::i16;
        else if constexpr (std::is_same_v<T, std::int32_t>) return Datatype::i32;
        else if constexpr (std::is_same_v<T, float>) return Datatype::f32;
        else return Datatype::f64;
    }

    const VolumeHeader& header() const { return header_; }
    const Storage& storage() const { return data_; }

    std::size_t nx() const { return header_.dims[0]; }
    std::size_t ny() const { return header_.dims[1]; }
    std::size_t nz() const { return header_.dims[2]; }
    std::size_t nt() const { return header_.dims[3]; }
    std::size_t size() const { return header_.voxel_count(); }

    std::size_t flat_index(std::size_t i, std::size_t j, std::size_t k, std::size_t t = 0) const {
        return i + nx() * (j + ny() * (k + nz() * t));
    }

    double at(std::size_t i, std::size_t j, std::size_t k, std::size_t t = 0) const {
        return at_flat(flat_index(i, j, k, t));
    }

    double at_flat(std::size_t idx) const {
        return std::visit([idx](const auto& v) { return static_cast<double>(v[idx]); }, data_);
    }

    template <typename T>
    const std::vector<T>& data_as() const {
        return std::get<std::vector<T>>(data_);
    }

    double min_value() const { return minmax().first; }
    double max_value() const { return minmax().second; }

    std::pair<double, double> minmax() const {
        return std::visit(
            [](const auto& v) -> std::pair<double, double> {
                if (v.empty()) return {0.0, 0.0};
                auto [lo, hi] = std::minmax_element(v.begin(), v.end());
                return {static_cast<double>(*lo), static_cast<double>(*hi)};
            },
            data_);
    }

private:
    VolumeHeader header_;
    Storage data_;
};

}  // namespace neurogeom
