#pragma once

#include "screplay/batch.hpp"
#include "screplay/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace screplay {

class MemoryBuffer;

/// Chooses which stored examples are replayed alongside an incoming batch.
class RetrievalStrategy {
public:
  virtual ~RetrievalStrategy() = default;
  virtual std::string name() const = 0;
  /// `incoming` is passed for strategies that condition on the new batch.
  virtual Batch retrieve(MemoryBuffer& buffer, const Batch& incoming, std::size_t k) = 0;
};

/// Decides which incoming examples enter the buffer.
class UpdateStrategy {
public:
  virtual ~UpdateStrategy() = default;
  virtual std::string name() const = 0;
  virtual void update(MemoryBuffer& buffer, const Batch& incoming) = 0;
};

class RandomRetrieval final : public RetrievalStrategy {
public:
  std::string name() const override { return "random"; }
  Batch retrieve(MemoryBuffer& buffer, const Batch& incoming, std::size_t k) override;
};

class ReservoirUpdate final : public UpdateStrategy {
public:
  std::string name() const override { return "reservoir"; }
  void update(MemoryBuffer& buffer, const Batch& incoming) override;
};

/// Bounded episodic memory of raw labeled inputs.
///
/// Holds min(seen, capacity) entries. A capacity of 0 keeps nothing, which is
/// how fine-tuning is expressed as replay without memory.
class MemoryBuffer {
public:
  MemoryBuffer(std::size_t capacity, std::uint64_t seed,
               std::unique_ptr<RetrievalStrategy> retrieval = std::make_unique<RandomRetrieval>(),
               std::unique_ptr<UpdateStrategy> update = std::make_unique<ReservoirUpdate>());

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::uint64_t seen() const noexcept { return seen_; }
  const std::vector<LabeledExample>& entries() const noexcept { return entries_; }

  Batch retrieve(const Batch& incoming, std::size_t k) { return retrieval_->retrieve(*this, incoming, k); }
  void update(const Batch& incoming) { update_->update(*this, incoming); }

  const RetrievalStrategy& retrieval_strategy() const noexcept { return *retrieval_; }
  const UpdateStrategy& update_strategy() const noexcept { return *update_; }

  Rng& rng() noexcept { return rng_; }
  const Rng& rng() const noexcept { return rng_; }

  // Mutation hooks for strategies.
  std::vector<LabeledExample>& mutable_entries() noexcept { return entries_; }
  void record_seen() noexcept { ++seen_; }

private:
  std::size_t capacity_;
  std::uint64_t seen_ = 0;
  std::vector<LabeledExample> entries_;
  Rng rng_;
  std::unique_ptr<RetrievalStrategy> retrieval_;
  std::unique_ptr<UpdateStrategy> update_;
};

/// Reservoir sampling: the n-th item (0-based) fills an empty slot while the
/// buffer is below capacity, otherwise replaces slot j ~ U[0, n] when j < M.
void reservoir_update(MemoryBuffer& buffer, const Batch& batch);

/// min(k, size) entries drawn uniformly without replacement, in draw order.
Batch random_retrieve(MemoryBuffer& buffer, std::size_t k);

/// All entries in storage order. Consumes no randomness.
Batch snapshot(const MemoryBuffer& buffer, std::size_t dim = 0);

/// Writes the buffer contents as a CLDS1 file.
void dump_buffer(const std::filesystem::path& path, const MemoryBuffer& buffer,
                 std::size_t dim, std::size_t class_count);

} // namespace screplay
