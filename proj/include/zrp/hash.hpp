#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zrp {

// Incremental SHA-1, used as the content hash of sample batches and run
// files (hex digest, same role as a git blob id).
class Sha1 {
public:
    Sha1();
    void update(const void* data, std::size_t len);
    template <typename T>
    void update_pod(const T& v) {
        update(&v, sizeof v);
    }
    std::string hex_digest();  // finalizes; do not update afterwards

private:
    void process_block(const std::uint8_t* block);
    std::uint32_t h_[5];
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
    std::uint64_t total_bits_ = 0;
};

std::string sha1_hex(const void* data, std::size_t len);

}  // namespace zrp
