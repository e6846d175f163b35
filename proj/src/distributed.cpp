#include "flr/distributed.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <optional>
#include <sstream>
#include <string_view>
#include <thread>
#include <utility>

#include "flr/errors.hpp"
#include "flr/numio.hpp"
#include "flr/rng.hpp"

namespace flr {

Partition make_partition(int n, int shard_count, std::uint64_t seed) {
    if (shard_count < 1) throw domain_error("partition: shard count must be >= 1");
    if (n < 1) throw domain_error("partition: need at least one observation");
    if (n % shard_count != 0)
        throw divisibility_error("partition: shard count " + std::to_string(shard_count) +
                                 " does not divide sample size " + std::to_string(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    RandomStream rs(derive_seed(seed, "partition"));
    deterministic_shuffle(order, rs);

    const int block = n / shard_count;
    Partition part;
    part.shard_count = shard_count;
    part.seed = seed;
    part.blocks.resize(static_cast<std::size_t>(shard_count));
    for (int j = 0; j < shard_count; ++j)
        part.blocks[static_cast<std::size_t>(j)]
            .assign(order.begin() + static_cast<std::ptrdiff_t>(j) * block,
                    order.begin() + static_cast<std::ptrdiff_t>(j + 1) * block);
    return part;
}

int resolve_thread_count(int requested, int task_count) {
    int cap = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (cap < 1) cap = 1;
    if (const char* env = std::getenv("FLR_THREADS")) {
        long long limit = 0;
        try {
            limit = parse_int(std::string_view(env));
        } catch (const parse_error&) {
            throw config_error("FLR_THREADS must be a positive integer, got '" +
                               std::string(env) + "'");
        }
        if (limit < 1) throw config_error("FLR_THREADS must be a positive integer");
        cap = std::min<long long>(cap, limit);
    }
    return std::max(1, std::min(cap, std::max(task_count, 1)));
}

namespace {

Dataset shard_dataset(const Dataset& dataset, const std::vector<int>& rows) {
    mat_t X(static_cast<Eigen::Index>(rows.size()), dataset.X.cols());
    vec_t y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = dataset.X.row(rows[i]);
        y[static_cast<Eigen::Index>(i)] = dataset.y[rows[i]];
    }
    return Dataset(dataset.grid, std::move(X), std::move(y));
}

[[noreturn]] void rethrow_with_shard(int shard, const std::exception_ptr& eptr) {
    try {
        std::rethrow_exception(eptr);
    } catch (const ill_conditioned_error& e) {
        throw ill_conditioned_error("shard " + std::to_string(shard) + ": " + e.what(),
                                    e.condition_number);
    } catch (const std::exception& e) {
        throw error("shard " + std::to_string(shard) + ": " + e.what());
    }
}

}  // namespace

DistributedEstimate fit_distributed(const Dataset& dataset, const GramFactor& gram,
                                    const FilterSpec& filter, double lambda, int shard_count,
                                    std::uint64_t seed, int threads) {
    const Partition part = make_partition(dataset.n(), shard_count, seed);
    const int shards = part.shard_count;

    std::vector<std::optional<vec_t>> coeffs(static_cast<std::size_t>(shards));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(shards));
    std::vector<double> seconds(static_cast<std::size_t>(shards), 0.0);

    auto run_shard = [&](int j) {
        const auto started = std::chrono::steady_clock::now();
        try {
            // A single shard is the whole-data local fit; skip the row
            // permutation so the result matches fit_local bitwise.
            const Dataset local = shards == 1
                                      ? dataset
                                      : shard_dataset(dataset,
                                                      part.blocks[static_cast<std::size_t>(j)]);
            coeffs[static_cast<std::size_t>(j)] = fit_local(local, gram, filter, lambda).coeffs;
        } catch (...) {
            failures[static_cast<std::size_t>(j)] = std::current_exception();
        }
        seconds[static_cast<std::size_t>(j)] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    const int workers = resolve_thread_count(threads, shards);
    if (workers <= 1) {
        for (int j = 0; j < shards; ++j) run_shard(j);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (int j = next.fetch_add(1); j < shards; j = next.fetch_add(1)) run_shard(j);
            });
        for (auto& th : pool) th.join();
    }

    for (int j = 0; j < shards; ++j)
        if (failures[static_cast<std::size_t>(j)])
            rethrow_with_shard(j, failures[static_cast<std::size_t>(j)]);

    // Plain sequential mean in ascending shard order: bitwise reproducible
    // whatever the execution schedule, and exactly fit_local when M = 1.
    vec_t mean = *coeffs[0];
    for (int j = 1; j < shards; ++j) mean += *coeffs[static_cast<std::size_t>(j)];
    mean /= static_cast<double>(shards);

    DistributedEstimate out{
        SlopeEstimate{dataset.grid, std::move(mean), gram.alpha(), lambda, filter}, shards, {}};
    out.diagnostics.reserve(static_cast<std::size_t>(shards));
    for (int j = 0; j < shards; ++j)
        out.diagnostics.push_back(
            ShardDiagnostics{j, gram.condition(), seconds[static_cast<std::size_t>(j)]});
    return out;
}

DistributedEstimate fit_distributed(const Dataset& dataset, const SobolevKernel& kernel,
                                    const FilterSpec& filter, double lambda, int shard_count,
                                    std::uint64_t seed, int threads) {
    return fit_distributed(dataset, GramFactor(dataset.grid, kernel), filter, lambda, shard_count,
                           seed, threads);
}

namespace {

constexpr char wire_magic[4] = {'F', 'L', 'R', 'S'};

void append_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void append_u32le(std::string& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::string export_local_model(const SlopeEstimate& est) {
    std::ostringstream body;
    write_slope_json(est, body);
    const std::string json = body.str();

    std::string payload;
    payload.reserve(json.size() + 10);
    payload.append(wire_magic, 4);
    append_u16le(payload, local_model_version);
    append_u32le(payload, static_cast<std::uint32_t>(json.size()));
    payload += json;
    return payload;
}

SlopeEstimate import_local_model(const std::string& payload) {
    if (payload.size() < 10) throw parse_error("local model payload: truncated header");
    if (payload.compare(0, 4, wire_magic, 4) != 0)
        throw parse_error("local model payload: bad magic bytes");
    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    const std::uint16_t version =
        static_cast<std::uint16_t>(bytes[4] | (static_cast<unsigned>(bytes[5]) << 8));
    if (version != local_model_version)
        throw parse_error("local model payload: version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(local_model_version) + ")");
    const std::uint32_t length = read_u32le(bytes + 6);
    if (payload.size() - 10 < length) throw parse_error("local model payload: truncated body");
    if (payload.size() - 10 > length) throw parse_error("local model payload: trailing bytes");

    std::istringstream body(payload.substr(10));
    return read_slope_json(body);
}

SlopeEstimate average_local_models(const std::vector<SlopeEstimate>& locals) {
    if (locals.empty()) throw shape_error("average_local_models: no local models");
    const SlopeEstimate& head = locals.front();
    for (std::size_t j = 1; j < locals.size(); ++j) {
        const SlopeEstimate& e = locals[j];
        if (!(e.grid == head.grid) || e.alpha != head.alpha || e.lambda != head.lambda ||
            !(e.filter == head.filter))
            throw shape_error("average_local_models: model " + std::to_string(j) +
                              " disagrees with model 0 on grid or fit parameters");
    }
    vec_t mean = head.coeffs;
    for (std::size_t j = 1; j < locals.size(); ++j) mean += locals[j].coeffs;
    mean /= static_cast<double>(locals.size());
    return SlopeEstimate{head.grid, std::move(mean), head.alpha, head.lambda, head.filter};
}

}  // namespace flr
