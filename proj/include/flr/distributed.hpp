#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flr/estimator.hpp"

namespace flr {

/// Random equal-size split of observation indices: a seeded shuffle of 0..N-1
/// cut into M consecutive blocks.  Unequal shard sizes are a caller error, not
/// a remainder policy.
struct Partition {
    int shard_count = 1;
    std::vector<std::vector<int>> blocks;  // ascending shard order
    std::uint64_t seed = 0;
};

Partition make_partition(int n, int shard_count, std::uint64_t seed);

struct ShardDiagnostics {
    int shard = 0;
    double gram_condition = 0.0;
    double fit_seconds = 0.0;  // in-memory only; never serialized
};

/// Average of per-shard local fits.  Coefficients are reduced by a plain
/// sequential mean in ascending shard order, so the result is bitwise
/// independent of how the shard fits were scheduled.
struct DistributedEstimate {
    SlopeEstimate estimate;
    int shard_count = 1;
    std::vector<ShardDiagnostics> diagnostics;
};

/// Effective worker count for a batch of independent tasks: `requested` if
/// positive, else hardware concurrency, both capped by the FLR_THREADS
/// environment variable and the task count.
int resolve_thread_count(int requested, int task_count);

/// Shard the data, fit each shard with the shared gram factor, and average.
/// Shard fits may run on a thread pool; the reduction order is fixed.
DistributedEstimate fit_distributed(const Dataset& dataset, const SobolevKernel& kernel,
                                    const FilterSpec& filter, double lambda, int shard_count,
                                    std::uint64_t seed, int threads = 1);
DistributedEstimate fit_distributed(const Dataset& dataset, const GramFactor& gram,
                                    const FilterSpec& filter, double lambda, int shard_count,
                                    std::uint64_t seed, int threads = 1);

/// Wire payload for shipping a local fit between processes: magic `FLRS`,
/// little-endian u16 version, little-endian u32 body length, then the
/// estimate's JSON body.
std::string export_local_model(const SlopeEstimate& est);
SlopeEstimate import_local_model(const std::string& payload);

constexpr std::uint16_t local_model_version = 1;

/// Mean of already-fitted local models (the coordinator side of a
/// multi-process run); all estimates must share grid, alpha, lambda, filter.
SlopeEstimate average_local_models(const std::vector<SlopeEstimate>& locals);

}  // namespace flr
