#ifndef EVOGA_CHECKPOINT_HPP
#define EVOGA_CHECKPOINT_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "evoga/mlp.hpp"

namespace evoga {

// Checkpoint layout: magic "EVGA1", then per layer two 32-bit little-endian
// dims (rows, cols of the weight) followed by row-major 64-bit little-endian
// reals for the weight and then the 1 x cols bias.
inline constexpr char kCheckpointMagic[5] = {'E', 'V', 'G', 'A', '1'};

namespace detail {
// The build targets are little-endian; serialize raw.
static_assert(sizeof(double) == 8);

inline void put_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline void put_mat(std::ostream& os, const Mat& m) {
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
}
}  // namespace detail

inline void save_checkpoint(const std::string& path, const MlpParams& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, 5);
    for (size_t i = 0; i < params.layer_count(); ++i) {
        detail::put_u32(os, static_cast<uint32_t>(params.weights[i].rows()));
        detail::put_u32(os, static_cast<uint32_t>(params.weights[i].cols()));
        detail::put_mat(os, params.weights[i]);
        detail::put_mat(os, params.biases[i]);
    }
    if (!os) throw io_error("short write to checkpoint: " + path);
}

// Reads layers until end of file. Malformed input reports the byte offset.
inline MlpParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open checkpoint: " + path);
    char magic[5];
    is.read(magic, 5);
    if (is.gcount() != 5 || std::memcmp(magic, kCheckpointMagic, 5) != 0)
        throw io_error("bad checkpoint magic at byte offset 0 in " + path);
    MlpParams params;
    for (;;) {
        std::streampos at = is.tellg();
        uint32_t rows = 0, cols = 0;
        is.read(reinterpret_cast<char*>(&rows), 4);
        if (is.gcount() == 0) break;  // clean end of file
        is.read(reinterpret_cast<char*>(&cols), 4);
        if (is.gcount() != 4 || rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
            throw io_error("malformed layer header at byte offset " +
                           std::to_string(static_cast<long long>(at)) + " in " + path);
        Mat w(static_cast<int>(rows), static_cast<int>(cols));
        Mat b(1, static_cast<int>(cols));
        is.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * 8));
        is.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(b.size() * 8));
        if (!is)
            throw io_error("truncated layer data at byte offset " +
                           std::to_string(static_cast<long long>(at)) + " in " + path);
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    if (params.layer_count() == 0) throw io_error("checkpoint has no layers: " + path);
    return params;
}

}  // namespace evoga

#endif
