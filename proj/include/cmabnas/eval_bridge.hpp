#pragma once

// Client side of the external evaluator protocol.
//
// Transport: one JSON object per line over the worker's stdin/stdout. Every
// message carries "id" and "kind"; responses echo the request id. Exactly one
// request is in flight per worker.
//
//   -> {"id":1,"kind":"handshake","version":1,"space":{"nodes":N,"operations":[...]}}
//   <- {"id":1,"kind":"ready","version":1}
//   -> {"id":2,"kind":"evaluate","hash":"<16 hex>","genotype":"<genotype text>"}
//   <- {"id":2,"kind":"reward","reward":0.9}
//   -> {"id":3,"kind":"train","genotypes":[{"hash":...,"genotype":...},...]}
//   <- {"id":3,"kind":"ack"}
//   -> {"id":4,"kind":"train_step","hash":...,"genotype":...}
//   <- {"id":4,"kind":"ack"}
//   -> {"id":5,"kind":"shutdown"}
//   <- {"id":5,"kind":"ack"}
//
// A worker may answer any request with {"id":n,"kind":"error","message":"..."}.
// Anything else (bad JSON, wrong id or kind, reward outside [0, 1], timeout,
// closed stream) is a protocol violation and closes the worker.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmabnas/oracles.hpp"
#include "cmabnas/search_space.hpp"

namespace cmabnas::bridge {

inline constexpr int protocol_version = 1;
inline constexpr std::chrono::milliseconds default_timeout{60'000};

class ProtocolError : public OracleError
{
public:
    using OracleError::OracleError;
};

class TimeoutError : public ProtocolError
{
public:
    using ProtocolError::ProtocolError;
};

class SpawnError : public OracleError
{
public:
    using OracleError::OracleError;
};

/// The worker answered with an "error" message; the worker stays usable.
class WorkerReportedError : public OracleError
{
public:
    using OracleError::OracleError;
};

enum class WorkerState { init, ready, busy, closed };

struct TraceLine
{
    enum class Direction { request, response };
    Direction direction;
    std::string text;
};

/// Recorded trace file format: `> <request line>` and `< <response line>`,
/// one per line, in session order.
std::vector<TraceLine> parse_trace(std::string_view text);
std::string format_trace(std::span<const TraceLine> trace);

class WorkerHandle
{
public:
    /// Starts `argv` (argv[0] looked up on PATH), sends the handshake and
    /// waits for `ready`.
    static WorkerHandle spawn(const std::vector<std::string>& argv, const SearchSpaceConfig& config,
                              std::chrono::milliseconds timeout = default_timeout);

    WorkerHandle(WorkerHandle&&) noexcept;
    WorkerHandle& operator=(WorkerHandle&&) noexcept;
    WorkerHandle(const WorkerHandle&) = delete;
    WorkerHandle& operator=(const WorkerHandle&) = delete;
    /// Sends shutdown if still ready, then reaps the process.
    ~WorkerHandle();

    double request_evaluate(const ArchitecturePair& pair);
    void request_train(std::span<const ArchitecturePair> batch);
    void request_train_step(const ArchitecturePair& pair);
    /// Graceful shutdown; the worker is closed afterwards.
    void shutdown();

    WorkerState state() const noexcept { return state_; }
    std::uint64_t last_id() const noexcept { return next_id_ - 1; }
    /// Exit status after close, -1 if unknown or killed.
    int exit_status() const noexcept { return exit_status_; }

    /// Every line exchanged so far (requests and responses).
    const std::vector<TraceLine>& transcript() const noexcept { return transcript_; }

private:
    struct Process;

    WorkerHandle(std::unique_ptr<Process> process, SearchSpaceConfig config, std::chrono::milliseconds timeout);

    std::string exchange(const std::string& kind, std::string request_line, const std::string& expected_kind,
                         std::uint64_t id);
    void close(bool graceful) noexcept;

    std::unique_ptr<Process> process_;
    SearchSpaceConfig config_;
    std::chrono::milliseconds timeout_;
    WorkerState state_ = WorkerState::init;
    std::uint64_t next_id_ = 1;
    int exit_status_ = -1;
    std::vector<TraceLine> transcript_;
};

/// RewardOracle backed by a pool of workers. Evaluations take any idle
/// worker; train / train_step are sent to every worker.
class BridgeOracle final : public RewardOracle
{
public:
    explicit BridgeOracle(std::vector<WorkerHandle> workers);
    BridgeOracle(const std::vector<std::string>& argv, const SearchSpaceConfig& config, std::size_t pool_size = 1,
                 std::chrono::milliseconds timeout = default_timeout);

    OracleCapabilities capabilities() const override { return {true, true}; }
    double evaluate(const ArchitecturePair& pair, std::uint64_t ticket) override;
    void train(std::span<const ArchitecturePair> batch) override;
    void train_step(const ArchitecturePair& pair) override;

    std::size_t pool_size() const noexcept { return workers_.size(); }
    const WorkerHandle& worker(std::size_t i) const { return workers_.at(i); }

private:
    std::size_t acquire();
    void release(std::size_t i);
    void broadcast(const std::function<void(WorkerHandle&)>& send);

    std::vector<WorkerHandle> workers_;
    std::vector<bool> busy_;
    std::mutex mutex_;
    std::condition_variable idle_;
};

} // namespace cmabnas::bridge
