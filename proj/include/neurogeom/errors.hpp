#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace neurogeom {

// Error classes map 1:1 onto CLI exit codes.
enum class ErrorClass : int {
    usage = 1,    // bad invocation / bad arguments
    parse = 2,    // malformed input file
    numeric = 3,  // degenerate data, rank deficiency, empty results
    io = 4,       // filesystem failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }
    int exit_code() const noexcept { return static_cast<int>(cls_); }

private:
    ErrorClass cls_;
};

#define NEUROGEOM_DEFINE_ERROR(name, cls)                                          \
    class name : public Error {                                                    \
    public:                                                                        \
        explicit name(const std::string& what) : Error(ErrorClass::cls, what) {}   \
    }

// imgio
NEUROGEOM_DEFINE_ERROR(HeaderTooShort, parse);
NEUROGEOM_DEFINE_ERROR(BadMagicSize, parse);
NEUROGEOM_DEFINE_ERROR(BadMagic, parse);
NEUROGEOM_DEFINE_ERROR(UnsupportedDatatype, parse);
NEUROGEOM_DEFINE_ERROR(PayloadSizeMismatch, parse);
NEUROGEOM_DEFINE_ERROR(InvalidHeaderField, parse);

// volops
NEUROGEOM_DEFINE_ERROR(EmptyMask, numeric);
NEUROGEOM_DEFINE_ERROR(DegenerateClass, numeric);
NEUROGEOM_DEFINE_ERROR(NotEnoughVoxels, numeric);

// isosurface
NEUROGEOM_DEFINE_ERROR(EmptySurface, numeric);
NEUROGEOM_DEFINE_ERROR(DegenerateVolume, numeric);

// meshtopo
NEUROGEOM_DEFINE_ERROR(OddChiForClosed, numeric);

// register
NEUROGEOM_DEFINE_ERROR(RankDeficient, numeric);
NEUROGEOM_DEFINE_ERROR(SizeMismatch, numeric);
NEUROGEOM_DEFINE_ERROR(LabelMismatch, numeric);
NEUROGEOM_DEFINE_ERROR(DegenerateConfiguration, numeric);
NEUROGEOM_DEFINE_ERROR(SingularTransform, numeric);

// morpho
NEUROGEOM_DEFINE_ERROR(EmptyEnsemble, numeric);
NEUROGEOM_DEFINE_ERROR(TopologyMismatch, numeric);

// dti
NEUROGEOM_DEFINE_ERROR(DimsMismatch, numeric);
NEUROGEOM_DEFINE_ERROR(NonFinite, numeric);
NEUROGEOM_DEFINE_ERROR(AllZero, numeric);

// filesystem
NEUROGEOM_DEFINE_ERROR(IoError, io);

#undef NEUROGEOM_DEFINE_ERROR

// Malformed record in a structured text/binary stream; carries the
// offending record or line index.
class ParseError : public Error {
public:
    ParseError(std::size_t index, const std::string& what)
        : Error(ErrorClass::parse, what + " (record " + std::to_string(index) + ")"),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace neurogeom
