#include "mfard/rng.hpp"

namespace mfard {

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices) {
    std::uint64_t h = mix64(master ^ mix64(tag_hash(tag)));
    for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632BE59BD9B4E019ULL));
    return h;
}

}  // namespace mfard
