#include "screplay/memory.hpp"

#include "screplay/stream_data.hpp"

#include <numeric>

namespace screplay {

MemoryBuffer::MemoryBuffer(std::size_t capacity, std::uint64_t seed,
                           std::unique_ptr<RetrievalStrategy> retrieval,
                           std::unique_ptr<UpdateStrategy> update)
    : capacity_(capacity), rng_(seed), retrieval_(std::move(retrieval)), update_(std::move(update)) {
  entries_.reserve(capacity_);
}

Batch RandomRetrieval::retrieve(MemoryBuffer& buffer, const Batch&, std::size_t k) {
  return random_retrieve(buffer, k);
}

void ReservoirUpdate::update(MemoryBuffer& buffer, const Batch& incoming) {
  reservoir_update(buffer, incoming);
}

void reservoir_update(MemoryBuffer& buffer, const Batch& batch) {
  auto& entries = buffer.mutable_entries();
  const std::size_t capacity = buffer.capacity();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (entries.size() < capacity) {
      entries.push_back(batch.example(i));
    } else {
      const auto j = uniform_index(buffer.rng(), 0, buffer.seen());
      if (j < capacity) entries[j] = batch.example(i);
    }
    buffer.record_seen();
  }
}

Batch random_retrieve(MemoryBuffer& buffer, std::size_t k) {
  const auto& entries = buffer.entries();
  const std::size_t take = std::min(k, entries.size());
  if (take == 0) return Batch(entries.empty() ? 0 : entries.front().x.size());

  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(entries.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = uniform_index(buffer.rng(), i, idx.size() - 1);
    std::swap(idx[i], idx[j]);
  }
  Batch out(entries.front().x.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(entries[idx[i]]);
  return out;
}

Batch snapshot(const MemoryBuffer& buffer, std::size_t dim) {
  const auto& entries = buffer.entries();
  Batch out(entries.empty() ? dim : entries.front().x.size());
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e);
  return out;
}

void dump_buffer(const std::filesystem::path& path, const MemoryBuffer& buffer, std::size_t dim,
                 std::size_t class_count) {
  write_clds(path, snapshot(buffer, dim), class_count);
}

} // namespace screplay
