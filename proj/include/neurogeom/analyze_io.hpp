#pragma once

#include <cstring>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "neurogeom/volume.hpp"

// Analyze 7.5 and NIfTI-1 single-file readers/writers.
//
// Byte layout (offsets into the 348-byte header, per the published Mayo and
// nifti1.h documentation):
//   sizeof_hdr  int32      @ 0    must decode to 348; also the endianness probe
//   dim[8]      int16[8]   @ 40   dim[0]=ndim, dim[1..4]=nx,ny,nz,nt
//   datatype    int16      @ 70
//   bitpix      int16      @ 72
//   pixdim[8]   float32[8] @ 76   pixdim[1..3] = voxel size in mm
//   vox_offset  float32    @ 108  NIfTI-1 only: payload offset in the .nii
//   descrip     char[80]   @ 148
//   magic       char[4]    @ 344  NIfTI-1 only: "n+1\0"
// Everything else is carried as opaque bytes and round-trips verbatim.

namespace neurogeom {

namespace hdr {
inline constexpr std::size_t sizeof_hdr = 0;
inline constexpr std::size_t dim = 40;
inline constexpr std::size_t datatype = 70;
inline constexpr std::size_t bitpix = 72;
inline constexpr std::size_t pixdim = 76;
inline constexpr std::size_t vox_offset = 108;
inline constexpr std::size_t descrip = 148;
inline constexpr std::size_t magic = 344;
inline constexpr std::size_t nifti_data_offset = 352;
}  // namespace hdr

namespace detail {

inline Endianness detect_endianness(const std::uint8_t* bytes) {
    for (Endianness e : {Endianness::little, Endianness::big}) {
        if (load_scalar<std::int32_t>(bytes, hdr::sizeof_hdr, e) == 348) return e;
    }
    throw BadMagicSize("header size field is not 348 in either byte order");
}

// Shared field extraction for both formats; offsets coincide by design of
// NIfTI-1.
inline VolumeHeader parse_common_fields(const std::uint8_t* bytes, VolumeFormat format) {
    VolumeHeader h;
    h.format = format;
    h.endianness = detect_endianness(bytes);
    std::copy(bytes, bytes + kAnalyzeHeaderSize, h.raw.begin());

    const std::int16_t ndim = load_scalar<std::int16_t>(bytes, hdr::dim, h.endianness);
    if (ndim < 1 || ndim > 7) throw InvalidHeaderField("dim[0] = " + std::to_string(ndim));
    for (int axis = 0; axis < 4; ++axis) {
        if (axis < ndim) {
            const std::int16_t d =
                load_scalar<std::int16_t>(bytes, hdr::dim + 2 * (axis + 1), h.endianness);
            if (d < 1) throw InvalidHeaderField("dim[" + std::to_string(axis + 1) + "] < 1");
            h.dims[axis] = static_cast<std::size_t>(d);
        } else {
            h.dims[axis] = 1;
        }
    }

    h.datatype = datatype_from_code(load_scalar<std::int16_t>(bytes, hdr::datatype, h.endianness));

    for (int axis = 0; axis < 3; ++axis) {
        const float p = load_scalar<float>(bytes, hdr::pixdim + 4 * (axis + 1), h.endianness);
        if (!(p > 0.0f))
            throw InvalidHeaderField("pixdim[" + std::to_string(axis + 1) + "] must be > 0");
        h.voxel_size[axis] = static_cast<double>(p);
    }

    const char* d = reinterpret_cast<const char*>(bytes + hdr::descrip);
    h.description.assign(d, strnlen(d, 80));
    return h;
}

// Re-encode the interpreted fields into a raw header image, preserving all
// other bytes from h.raw.
inline std::array<std::uint8_t, kAnalyzeHeaderSize> encode_header(const VolumeHeader& h) {
    std::array<std::uint8_t, kAnalyzeHeaderSize> out = h.raw;
    const Endianness e = h.endianness;
    store_scalar<std::int32_t>(out.data(), hdr::sizeof_hdr, 348, e);
    store_scalar<std::int16_t>(out.data(), hdr::dim, 4, e);
    for (int axis = 0; axis < 4; ++axis)
        store_scalar<std::int16_t>(out.data(), hdr::dim + 2 * (axis + 1),
                                   static_cast<std::int16_t>(h.dims[axis]), e);
    for (int axis = 5; axis <= 7; ++axis)
        store_scalar<std::int16_t>(out.data(), hdr::dim + 2 * axis, 1, e);
    store_scalar<std::int16_t>(out.data(), hdr::datatype,
                               static_cast<std::int16_t>(h.datatype), e);
    store_scalar<std::int16_t>(out.data(), hdr::bitpix,
                               static_cast<std::int16_t>(datatype_bitpix(h.datatype)), e);
    for (int axis = 0; axis < 3; ++axis)
        store_scalar<float>(out.data(), hdr::pixdim + 4 * (axis + 1),
                            static_cast<float>(h.voxel_size[axis]), e);
    char descrip[80] = {};
    std::memcpy(descrip, h.description.data(), std::min<std::size_t>(h.description.size(), 80));
    std::memcpy(out.data() + hdr::descrip, descrip, 80);
    return out;
}

template <typename T>
std::vector<T> decode_payload(const std::uint8_t* bytes, std::size_t count, Endianness e) {
    std::vector<T> data(count);
    std::memcpy(data.data(), bytes, count * sizeof(T));
    if (e != native_endianness())
        for (T& v : data) v = byteswap(v);
    return data;
}

template <typename T>
void encode_payload(const std::vector<T>& data, std::vector<std::uint8_t>& out, Endianness e) {
    const std::size_t base = out.size();
    out.resize(base + data.size() * sizeof(T));
    std::memcpy(out.data() + base, data.data(), data.size() * sizeof(T));
    if (e != native_endianness()) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            T v = data[i];
            v = byteswap(v);
            std::memcpy(out.data() + base + i * sizeof(T), &v, sizeof(T));
        }
    }
}

inline Volume3D decode_volume(const VolumeHeader& h, const std::uint8_t* payload,
                              std::size_t payload_size) {
    const std::size_t need = h.voxel_count() * datatype_bytes(h.datatype);
    if (payload_size < need)
        throw PayloadSizeMismatch("payload has " + std::to_string(payload_size) +
                                  " bytes, need " + std::to_string(need));
    switch (h.datatype) {
        case Datatype::u8:
            return Volume3D(h, decode_payload<std::uint8_t>(payload, h.voxel_count(), h.endianness));
        case Datatype::i16:
            return Volume3D(h, decode_payload<std::int16_t>(payload, h.voxel_count(), h.endianness));
        case Datatype::i32:
            return Volume3D(h, decode_payload<std::int32_t>(payload, h.voxel_count(), h.endianness));
        case Datatype::f32:
            return Volume3D(h, decode_payload<float>(payload, h.voxel_count(), h.endianness));
        case Datatype::f64:
            return Volume3D(h, decode_payload<double>(payload, h.voxel_count(), h.endianness));
    }
    throw UnsupportedDatatype("unreachable");
}

inline void encode_volume_payload(const Volume3D& vol, std::vector<std::uint8_t>& out) {
    std::visit([&](const auto& data) { encode_payload(data, out, vol.header().endianness); },
               vol.storage());
}

}  // namespace detail

// --- Analyze 7.5 ------------------------------------------------------------

inline VolumeHeader read_analyze_header(const std::vector<std::uint8_t>& raw) {
    if (raw.size() < kAnalyzeHeaderSize)
        throw HeaderTooShort("header has " + std::to_string(raw.size()) + " bytes, need 348");
    return detail::parse_common_fields(raw.data(), VolumeFormat::analyze75);
}

inline Volume3D read_analyze_volume(const VolumeHeader& header,
                                    const std::vector<std::uint8_t>& raw) {
    return detail::decode_volume(header, raw.data(), raw.size());
}

// Returns (header bytes, image bytes); reading them back reproduces `vol`
// bit-exactly.
inline std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>>
write_analyze(const Volume3D& vol) {
    vol.header().validate();
    const auto hdr_bytes = detail::encode_header(vol.header());
    std::vector<std::uint8_t> header(hdr_bytes.begin(), hdr_bytes.end());
    std::vector<std::uint8_t> image;
    detail::encode_volume_payload(vol, image);
    return {std::move(header), std::move(image)};
}

// --- NIfTI-1 (single-file .nii) ---------------------------------------------

inline Volume3D read_nifti1(const std::vector<std::uint8_t>& raw) {
    if (raw.size() < kAnalyzeHeaderSize)
        throw HeaderTooShort("file has " + std::to_string(raw.size()) + " bytes, need 348");
    if (std::memcmp(raw.data() + hdr::magic, "n+1\0", 4) != 0)
        throw BadMagic("missing NIfTI-1 single-file magic \"n+1\"");
    VolumeHeader h = detail::parse_common_fields(raw.data(), VolumeFormat::nifti1);
    const float off = detail::load_scalar<float>(raw.data(), hdr::vox_offset, h.endianness);
    if (!(off >= kAnalyzeHeaderSize))
        throw InvalidHeaderField("vox_offset " + std::to_string(off) + " < 348");
    const std::size_t data_offset = static_cast<std::size_t>(off);
    if (raw.size() < data_offset) throw PayloadSizeMismatch("file shorter than vox_offset");
    return detail::decode_volume(h, raw.data() + data_offset, raw.size() - data_offset);
}

inline std::vector<std::uint8_t> write_nifti1(const Volume3D& vol) {
    vol.header().validate();
    VolumeHeader h = vol.header();
    h.format = VolumeFormat::nifti1;
    auto hdr_bytes = detail::encode_header(h);
    detail::store_scalar<float>(hdr_bytes.data(), hdr::vox_offset,
                                static_cast<float>(hdr::nifti_data_offset), h.endianness);
    std::memcpy(hdr_bytes.data() + hdr::magic, "n+1\0", 4);
    std::vector<std::uint8_t> out(hdr_bytes.begin(), hdr_bytes.end());
    out.resize(hdr::nifti_data_offset, 0);  // 4-byte extender, no extensions
    detail::encode_volume_payload(vol, out);
    return out;
}

// --- path-level conveniences ------------------------------------------------

inline std::filesystem::path analyze_sibling(const std::filesystem::path& path,
                                             const char* ext) {
    std::filesystem::path p = path;
    p.replace_extension(ext);
    return p;
}

inline Volume3D load_analyze(const std::filesystem::path& hdr_path) {
    const VolumeHeader h = read_analyze_header(read_file_bytes(hdr_path));
    return read_analyze_volume(h, read_file_bytes(analyze_sibling(hdr_path, ".img")));
}

inline void save_analyze(const Volume3D& vol, const std::filesystem::path& hdr_path) {
    auto [header, image] = write_analyze(vol);
    atomic_write_file(hdr_path, header);
    atomic_write_file(analyze_sibling(hdr_path, ".img"), image);
}

inline Volume3D load_nifti(const std::filesystem::path& path) {
    return read_nifti1(read_file_bytes(path));
}

inline void save_nifti(const Volume3D& vol, const std::filesystem::path& path) {
    atomic_write_file(path, write_nifti1(vol));
}

// Dispatch on extension: .nii -> NIfTI-1, .hdr/.img -> Analyze 7.5.
inline Volume3D load_volume(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".nii") return load_nifti(path);
    if (ext == ".img") return load_analyze(analyze_sibling(path, ".hdr"));
    return load_analyze(path);
}

}  // namespace neurogeom
