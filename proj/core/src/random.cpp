#include "crt/random.hpp"

namespace crt {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::uint64_t mix_key(std::uint64_t key, std::uint64_t index) noexcept {
  std::uint64_t s = key ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
  splitmix64(s);
  return splitmix64(s);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) word = splitmix64(s);
}

RandomStream RandomStream::derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = master;
  for (std::uint64_t index : path) key = mix_key(key, index);
  return RandomStream(key);
}

RandomStream RandomStream::substream(std::uint64_t index) const { return RandomStream(mix_key(key_, index)); }

}  // namespace crt
